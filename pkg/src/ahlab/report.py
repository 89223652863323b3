"""Chart spec files, suite orchestration and machine/human reports."""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import __version__
from .config import RunConfig
from .expr import GRAMMAR_VERSION, ExprError, parse, pretty_print
from .geometry import ChartManifold, curvature_package, inverse_metric
from .identities import UNIVERSAL_NAMES, full_suite
from .models import build_model
from .sectional import antiholomorphic_constancy, holomorphic_constancy, ricci_eigenframe, verdict_from_packages
from .tensors import COMPAT_RTOL, GeometryError

SPEC_FORMAT = "ahlab-chart"
SPEC_VERSION = 1
REPORT_SCHEMA = "ahlab-report/1"

EXIT_PASS = 0
EXIT_VERDICT_FAILURE = 1
EXIT_INPUT_ERROR = 2


class SpecError(ValueError):
    """Invalid chart spec file."""


# --- spec files --------------------------------------------------------------


def spec_document(M: ChartManifold) -> dict:
    n = M.dim
    g = [[pretty_print(M.g_exprs[i][j]) if j >= i else None for j in range(n)] for i in range(n)]
    J = [[pretty_print(M.j_exprs[i][j]) for j in range(n)] for i in range(n)]
    doc = {
        "format": SPEC_FORMAT,
        "version": SPEC_VERSION,
        "grammar": GRAMMAR_VERSION,
        "name": M.name,
        "m": M.m,
        "domain": [[float(lo), float(hi)] for lo, hi in M.domain],
        "g": g,
        "j": J,
    }
    if M.expected:
        doc["expected"] = M.expected
    if M.factors:
        doc["factors"] = list(M.factors)
    return doc


def export_spec(M: ChartManifold, path) -> None:
    text = yaml.safe_dump(spec_document(M), sort_keys=False, width=10**9, default_flow_style=None)
    Path(path).write_text(text)


def _parse_entry(text, where: str, dim: int):
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text))
    if not isinstance(text, str):
        raise SpecError(f"{where}: expected an expression string, got {text!r}")
    try:
        return parse(text, dim)
    except ExprError as exc:
        raise SpecError(f"{where}: {exc}") from None


def spec_from_document(doc: dict, probes: int = 5, rtol: float = COMPAT_RTOL) -> ChartManifold:
    if not isinstance(doc, dict):
        raise SpecError("spec must be a mapping")
    fmt = doc.get("format", SPEC_FORMAT)
    if fmt != SPEC_FORMAT:
        raise SpecError(f"unknown spec format {fmt!r}")
    for key in ("m", "domain", "g", "j"):
        if key not in doc:
            raise SpecError(f"missing field {key!r}")
    m = doc["m"]
    if not isinstance(m, int) or m < 1:
        raise SpecError(f"m must be a positive integer, got {m!r}")
    n = 2 * m
    for key in ("g", "j"):
        mat = doc[key]
        if not isinstance(mat, list) or len(mat) != n or any(not isinstance(r, list) or len(r) != n for r in mat):
            raise SpecError(f"{key} must be a {n}x{n} matrix for m={m}")
    dom = doc["domain"]
    if not isinstance(dom, list) or len(dom) != n or any(not isinstance(d, list) or len(d) != 2 for d in dom):
        raise SpecError(f"domain must list {n} [lo, hi] intervals")
    try:
        domain = tuple((float(lo), float(hi)) for lo, hi in dom)
    except (TypeError, ValueError):
        raise SpecError("domain bounds must be numbers") from None
    if any(not lo < hi for lo, hi in domain):
        raise SpecError("domain intervals must satisfy lo < hi")

    raw_g = doc["g"]
    g = [[None] * n for _ in range(n)]
    both = []
    for i in range(n):
        for j in range(i, n):
            upper, lower = raw_g[i][j], raw_g[j][i]
            if upper is None and lower is None:
                raise SpecError(f"g[{i}][{j}] is missing")
            src, where = (upper, f"g[{i}][{j}]") if upper is not None else (lower, f"g[{j}][{i}]")
            g[i][j] = g[j][i] = _parse_entry(src, where, n)
            if i != j and upper is not None and lower is not None:
                other = _parse_entry(lower, f"g[{j}][{i}]", n)
                if other != g[i][j]:
                    both.append((i, j, other))
    J = [[_parse_entry(doc["j"][i][j], f"j[{i}][{j}]", n) for j in range(n)] for i in range(n)]
    factors = tuple(int(f) for f in doc.get("factors", ()) or ())
    try:
        M = ChartManifold(
            name=str(doc.get("name", "unnamed")),
            m=m,
            g_exprs=tuple(tuple(r) for r in g),
            j_exprs=tuple(tuple(r) for r in J),
            domain=domain,
            expected=doc.get("expected"),
            factors=factors,
        )
    except GeometryError as exc:
        raise SpecError(str(exc)) from None
    _probe(M, both, probes, rtol)
    return M


def _probe(M: ChartManifold, both, probes: int, rtol: float) -> None:
    from .jets import evaluate

    rng = np.random.default_rng(0)
    pts = M.sample_points(rng, probes)
    for p in pts:
        coords = ", ".join(f"{v:.6g}" for v in p)
        for i, j, lower in both:
            a, b = evaluate(M.g_exprs[i][j], p), evaluate(lower, p)
            if abs(a - b) > rtol * max(1.0, abs(a)):
                raise SpecError(f"g is not symmetric: g[{i}][{j}] = {a!r} but g[{j}][{i}] = {b!r} at point ({coords})")
        try:
            g = M.metric(p)
            Jm = M.acs(p)
        except ExprError as exc:
            raise SpecError(f"evaluation failed at point ({coords}): {exc}") from None
        try:
            inverse_metric(g)
        except GeometryError as exc:
            raise SpecError(f"metric invalid at point ({coords}): {exc}") from None
        n = M.dim
        jscale = max(1.0, float(np.abs(Jm).max()))
        sq = float(np.abs(Jm @ Jm + np.eye(n)).max())
        if sq > rtol * jscale**2:
            raise SpecError(f"J o J != -identity at point ({coords}); max deviation {sq:.3g}")
        comp = float(np.abs(Jm.T @ g @ Jm - g).max())
        if comp > rtol * max(1.0, float(np.abs(g).max())) * jscale**2:
            raise SpecError(f"J is not compatible with g at point ({coords}); max deviation {comp:.3g}")


def load_spec(path, probes: int = 5) -> ChartManifold:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SpecError(f"cannot read {path}: {exc.strerror}") from None
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise SpecError(f"{path}: malformed document{loc}") from None
    return spec_from_document(doc, probes)


def resolve_manifold(ref: str) -> ChartManifold:
    """A spec file path, or a built-in model expression like ``fubini_study(3,4)``."""
    path = Path(ref)
    if path.exists():
        return load_spec(path)
    try:
        return build_model(ref)
    except (ValueError, GeometryError) as exc:
        raise SpecError(f"{ref!r} is neither a readable spec file nor a model expression ({exc})") from None


# --- suite -------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: numpy scalars to float, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


@dataclass
class PointResult:
    index: int
    point: list
    residuals: Optional[dict] = None  # name -> Residual
    scale: float = 0.0
    ricci_eigenvalues: Optional[list] = None
    error: Optional[str] = None

    @property
    def universal_passed(self) -> bool:
        return self.error is None and all(self.residuals[k].passed for k in UNIVERSAL_NAMES)

    def to_dict(self) -> dict:
        out = {"index": self.index, "point": self.point}
        if self.error is not None:
            out["error"] = self.error
        else:
            out["scale_max_abs_R"] = self.scale
            out["residuals"] = {k: v.to_dict() for k, v in self.residuals.items()}
            out["ricci_eigenvalues"] = self.ricci_eigenvalues
        return out


@dataclass
class Report:
    manifold: str
    dim: int
    config: RunConfig
    points: list
    holomorphic: Optional[dict]
    antiholomorphic: Optional[dict]
    verdict: dict
    timing: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        ok = all(p.universal_passed for p in self.points)
        classified = self.verdict["outcome"] in ("FLAT_CN", "CPN", "CDN", "CONST_NEG_6D_CANDIDATE")
        return EXIT_PASS if ok and classified else EXIT_VERDICT_FAILURE

    def max_residuals(self) -> dict:
        out: dict = {}
        for p in self.points:
            if p.residuals:
                for k, r in p.residuals.items():
                    out[k] = max(out.get(k, 0.0), r.residual)
        return out

    def to_dict(self, include_timing: bool = False) -> dict:
        doc = {
            "schema": REPORT_SCHEMA,
            "engine": {"name": "ahlab", "version": __version__, "grammar": GRAMMAR_VERSION},
            "manifold": self.manifold,
            "dim": self.dim,
            "config": {
                "points_per_manifold": self.config.points_per_manifold,
                "samples_per_point": self.config.samples_per_point,
                "seed": int(self.config.seed),
                "derivative_mode": self.config.derivative_mode,
                "thresholds": self.config.all_thresholds,
            },
            "points": [p.to_dict() for p in self.points],
            "max_residuals": self.max_residuals(),
            "holomorphic": self.holomorphic,
            "antiholomorphic": self.antiholomorphic,
            "verdict": self.verdict,
            "exit_code": self.exit_code,
        }
        if include_timing:
            doc["timing"] = self.timing
        return _clean(doc)

    def machine(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2) + "\n"

    def human(self) -> str:
        lines = [f"manifold: {self.manifold} (real dimension {self.dim})"]
        lines.append(
            f"points: {len(self.points)}  samples/point: {self.config.samples_per_point}  seed: {self.config.seed}"
        )
        errs = [p for p in self.points if p.error]
        for p in errs:
            lines.append(f"  point {p.index}: ERROR {p.error}")
        th = self.config.all_thresholds
        maxes = self.max_residuals()
        if maxes:
            lines.append("identity residuals (max over points):")
            for k, v in maxes.items():
                mark = "pass" if v <= th[k] else "FAIL"
                lines.append(f"  {k:<20} {v:10.3e}  <= {th[k]:.0e}  {mark}")
        for label, st in (("holomorphic", self.holomorphic), ("antiholomorphic", self.antiholomorphic)):
            if st:
                lines.append(
                    f"{label} sectional curvature: estimate {st['estimate']:.12g}, spread {st['spread']:.3e}"
                    f" over {st['sample_count']} planes"
                )
        v = self.verdict
        lines.append(f"verdict: {v['outcome']}  nu = {v['nu']!r}")
        for r in v["reasons"]:
            lines.append(f"  - {r}")
        if v.get("mu_list"):
            lines.append(f"  factor Einstein constants: {v['mu_list']}")
        if self.timing:
            lines.append(f"elapsed: {self.timing.get('total_seconds', 0.0):.2f} s")
        lines.append(f"exit status: {self.exit_code}")
        return "\n".join(lines) + "\n"


def run_suite(M: ChartManifold, config: Optional[RunConfig] = None, points=None) -> Report:
    config = config or RunConfig()
    t0 = time.perf_counter()
    th = config.all_thresholds
    if points is None:
        points = M.sample_points(config.rng(0), config.points_per_manifold)
    pkgs = []
    results = []
    for idx, p in enumerate(points):
        res = PointResult(idx, [float(v) for v in p])
        try:
            pkgs.append((idx, curvature_package(M, p, mode=config.derivative_mode)))
        except (GeometryError, ValueError) as exc:
            res.error = f"{type(exc).__name__}: {exc}"
        results.append(res)
    good = [pkg for _, pkg in pkgs]

    holo = anti = None
    nu = 0.0
    if good and all(p.adapted for p in good):
        holo = holomorphic_constancy(good, samples_per_point=config.samples_per_point, rng=config.rng(2))
        if M.dim >= 4:
            anti = antiholomorphic_constancy(good, samples_per_point=config.samples_per_point, rng=config.rng(1))
            nu = anti.estimate

    for idx, pkg in pkgs:
        res = results[idx]
        try:
            rep = full_suite(pkg, nu, th)
            res.residuals = dict(rep)
            res.scale = rep.scale
            try:
                res.ricci_eigenvalues = list(ricci_eigenframe(pkg, tol=th["commutator"]).lambdas)
            except GeometryError:
                res.ricci_eigenvalues = None
        except (GeometryError, ValueError) as exc:
            res.error = f"{type(exc).__name__}: {exc}"
            res.residuals = None

    verdict = verdict_from_packages(good, config, M.factors, anti)
    if any(r.error for r in results):
        verdict.reasons.append("some points could not be evaluated")
    return Report(
        manifold=M.name,
        dim=M.dim,
        config=config,
        points=results,
        holomorphic=holo.to_dict() if holo else None,
        antiholomorphic=anti.to_dict() if anti else None,
        verdict=_clean(verdict.to_dict()),
        timing={"total_seconds": time.perf_counter() - t0},
    )


def package_document(pkg) -> dict:
    return _clean(
        {
            "point": pkg.point,
            "g": pkg.g,
            "J": pkg.J,
            "frame": pkg.frame,
            "adapted_frame": pkg.adapted,
            "gamma": pkg.gamma,
            "nabla_j": pkg.nabla_j,
            "riemann": pkg.riemann,
            "ricci": pkg.ricci,
            "ricci_star": pkg.ricci_star,
            "tau": pkg.tau,
            "tau_star": pkg.tau_star,
            "nabla_r": pkg.nabla_r,
            "nabla_s": pkg.nabla_s,
            "dtau": pkg.dtau,
        }
    )

