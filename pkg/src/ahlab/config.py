"""Run configuration and default residual thresholds."""
from __future__ import annotations

from dataclasses import dataclass, field, fields

import numpy as np

# 1e-6 where nabla R (third order in g) enters, 1e-8 otherwise
DEFAULT_THRESHOLDS = {
    "K": 1e-8,
    "NK": 1e-8,
    "AK": 1e-8,
    "QK": 1e-8,
    "AH1": 1e-8,
    "AH2": 1e-8,
    "AH3": 1e-8,
    "R_skew_12": 1e-8,
    "R_skew_34": 1e-8,
    "R_pair": 1e-8,
    "first_bianchi": 1e-8,
    "full_second_bianchi": 1e-6,
    "eq_2_1": 1e-6,
    "eq_2_2": 1e-6,
    "eq_2_3": 1e-8,
    "eq_2_4": 1e-6,
    "eq_2_5": 1e-8,
    "eq_2_6": 1e-8,
    "eq_2_7": 1e-6,
    "eq_2_8": 1e-6,
    "form_fit": 1e-8,
    "constancy": 1e-5,
    "schur": 1e-5,
    "flat": 1e-8,
    "einstein": 1e-6,
    "parallel_ricci": 1e-6,
    "commutator": 1e-8,
}

DERIVATIVE_MODES = ("jets", "finite_difference_oracle")
OUTPUT_FORMATS = ("human", "machine")


def thresholds_with(overrides=None) -> dict:
    out = dict(DEFAULT_THRESHOLDS)
    if overrides:
        out.update(overrides)
    return out


@dataclass
class RunConfig:
    points_per_manifold: int = 20
    samples_per_point: int = 100
    seed: int = 0
    thresholds: dict = field(default_factory=dict)
    derivative_mode: str = "jets"
    output_format: str = "human"

    def __post_init__(self):
        if self.points_per_manifold < 1 or self.samples_per_point < 1:
            raise ValueError("point and sample counts must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        unknown = set(self.thresholds) - set(DEFAULT_THRESHOLDS)
        if unknown:
            raise ValueError(f"unknown threshold names: {', '.join(sorted(unknown))}")
        if any(not v > 0 for v in self.thresholds.values()):
            raise ValueError("thresholds must be positive")
        if self.derivative_mode not in DERIVATIVE_MODES:
            raise ValueError(f"derivative_mode must be one of {DERIVATIVE_MODES}")
        if self.output_format not in OUTPUT_FORMATS:
            raise ValueError(f"output_format must be one of {OUTPUT_FORMATS}")

    def threshold(self, name: str) -> float:
        return self.thresholds.get(name, DEFAULT_THRESHOLDS[name])

    @property
    def all_thresholds(self) -> dict:
        return thresholds_with(self.thresholds)

    def rng(self, stream: int) -> np.random.Generator:
        """Independent deterministic stream per purpose (0 points, 1 antiholomorphic, 2 holomorphic)."""
        return np.random.default_rng([int(self.seed), stream])

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return cls(**data)
