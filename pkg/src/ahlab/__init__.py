"""Numerical curvature laboratory for almost Hermitian manifolds given on a coordinate chart."""

__version__ = "0.1.0"

from .config import RunConfig  # noqa: E402
from .expr import parse, pretty_print  # noqa: E402
from .geometry import ChartManifold, CurvaturePackage, curvature_package  # noqa: E402
from .jets import eval_jet  # noqa: E402
from .models import bergman, euclidean, fubini_study, product, round_s6  # noqa: E402
from .sectional import Outcome, Verdict, theorem_verdict  # noqa: E402

__all__ = [
    "ChartManifold",
    "CurvaturePackage",
    "Outcome",
    "RunConfig",
    "Verdict",
    "bergman",
    "curvature_package",
    "euclidean",
    "eval_jet",
    "fubini_study",
    "parse",
    "pretty_print",
    "product",
    "round_s6",
    "theorem_verdict",
]
