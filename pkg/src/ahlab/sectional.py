"""Sectional curvature statistics, Ricci eigenframes and the classification verdict."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .config import RunConfig
from .geometry import ChartManifold, CurvaturePackage, curvature_package
from .identities import ah_residuals, class_residuals, const_antihol_identities, frame_data, fit_form
from .tensors import GeometryError, antiholomorphic_plane_sample, holomorphic_plane_sample


def sectional(M, p, x, y) -> float:
    """K(span{x, y}) = R(x, y, y, x) / (|x|^2 |y|^2 - g(x, y)^2)."""
    pkg = M if isinstance(M, CurvaturePackage) else curvature_package(M, p)
    return sectional_from(pkg.riemann, pkg.g, np.asarray(x, float), np.asarray(y, float))


def sectional_from(R: np.ndarray, g: np.ndarray, x: np.ndarray, y: np.ndarray) -> float:
    gxx, gyy, gxy = x @ g @ x, y @ g @ y, x @ g @ y
    gram = gxx * gyy - gxy * gxy
    if gram < 1e-12 * max(gxx * gyy, 1e-300):
        raise GeometryError("degenerate plane: vectors are (nearly) parallel")
    return float(np.einsum("abcd,a,b,c,d->", R, x, y, y, x) / gram)


@dataclass
class ConstancyStats:
    estimate: float
    spread: float  # max - min over every sample at every point
    sample_count: int
    per_point: list = field(default_factory=list)  # (point, estimate, spread)

    @property
    def pointwise_spread(self) -> float:
        return max((s for _, _, s in self.per_point), default=0.0)

    @property
    def global_spread(self) -> float:
        """Spread of the per-point estimates (Schur-type constancy across points)."""
        ests = [e for _, e, _ in self.per_point]
        return max(ests) - min(ests) if ests else 0.0

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "spread": self.spread,
            "pointwise_spread": self.pointwise_spread,
            "global_spread": self.global_spread,
            "sample_count": self.sample_count,
            "per_point": [
                {"point": [float(v) for v in pt], "estimate": est, "spread": spr} for pt, est, spr in self.per_point
            ],
        }


def _packages(M, points) -> list:
    if isinstance(M, ChartManifold):
        return [curvature_package(M, p) for p in points]
    return list(M)


def _constancy(pkgs, sampler, samples_per_point: int, rng: np.random.Generator) -> ConstancyStats:
    per_point = []
    all_vals = []
    for pkg in pkgs:
        vals = []
        for _ in range(samples_per_point):
            x, y = sampler(pkg.g, pkg.J, rng)
            vals.append(sectional_from(pkg.riemann, pkg.g, x, y))
        vals = np.array(vals)
        per_point.append((tuple(float(v) for v in pkg.point), float(vals.mean()), float(vals.max() - vals.min())))
        all_vals.append(vals)
    allv = np.concatenate(all_vals)
    return ConstancyStats(float(allv.mean()), float(allv.max() - allv.min()), int(allv.size), per_point)


def antiholomorphic_constancy(M, points=None, samples_per_point: int = 100, rng=None) -> ConstancyStats:
    """Sample antiholomorphic planes; ``M`` may be a chart (with ``points``) or a list of packages."""
    pkgs = _packages(M, points)
    if pkgs and pkgs[0].dim < 4:
        raise GeometryError("antiholomorphic planes need real dimension >= 4")
    rng = rng if rng is not None else np.random.default_rng(0)
    return _constancy(pkgs, antiholomorphic_plane_sample, samples_per_point, rng)


def holomorphic_constancy(M, points=None, samples_per_point: int = 100, rng=None) -> ConstancyStats:
    pkgs = _packages(M, points)
    rng = rng if rng is not None else np.random.default_rng(0)
    return _constancy(pkgs, holomorphic_plane_sample, samples_per_point, rng)


def schur_global_check(M, points=None, samples_per_point: int = 100, rng=None) -> float:
    """Cross-point spread of the antiholomorphic curvature estimate."""
    if isinstance(M, ConstancyStats):
        return M.global_spread
    return antiholomorphic_constancy(M, points, samples_per_point, rng).global_spread


@dataclass(frozen=True)
class RicciEigenframe:
    lambdas: tuple  # ascending, one per complex direction
    frame: np.ndarray  # columns e_1..e_m, Je_1..Je_m in chart coordinates


def ricci_eigenframe(M, p=None, tol: float = 1e-8) -> RicciEigenframe:
    """Orthonormal (e_i, Je_i) with S(e_i) = lambda_i e_i; needs S to commute with J."""
    pkg = M if isinstance(M, CurvaturePackage) else curvature_package(M, p)
    if not pkg.adapted:
        raise GeometryError("J is not compatible with g; no adapted frame")
    fd = frame_data(pkg)
    S, J = fd.S, fd.J
    scale = max(1.0, float(np.abs(S).max()))
    comm = float(np.abs(S @ J - J @ S).max())
    if comm > tol * scale:
        raise GeometryError(f"Ricci operator does not commute with J (residual {comm:.3g})")
    try:
        _, vecs = np.linalg.eigh(0.5 * (S + S.T))
    except np.linalg.LinAlgError as exc:  # pragma: no cover - eigh on a small symmetric matrix
        raise GeometryError(f"eigensolver failed: {exc}") from None
    m = pkg.m
    chosen: list = []
    basis: list = []
    for k in range(vecs.shape[1]):
        if len(chosen) == m:
            break
        v = vecs[:, k].copy()
        for _ in range(2):
            for w in basis:
                v = v - (w @ v) * w
        nv = np.linalg.norm(v)
        if nv < 1e-6:
            continue
        v = v / nv
        jv = J @ v
        chosen.append(v)
        basis.extend((v, jv))
    if len(chosen) != m:
        raise GeometryError("could not pair Ricci eigenvectors with their J-images")
    lambdas = [float(v @ S @ v) for v in chosen]
    order = np.argsort(lambdas, kind="stable")
    Vf = np.empty((2 * m, 2 * m))
    for col, idx in enumerate(order):
        Vf[:, col] = chosen[idx]
        Vf[:, m + col] = J @ chosen[idx]
    return RicciEigenframe(tuple(lambdas[i] for i in order), pkg.frame @ Vf)


@dataclass(frozen=True)
class EinsteinResult:
    passed: bool
    mu: float
    residual: float  # max over points of |S - (tau/2m) g| plus spread of mu


def einstein_check(M, points=None, tol: float = 1e-6) -> EinsteinResult:
    pkgs = _packages(M, points)
    mus = []
    worst = 0.0
    for pkg in pkgs:
        fd = frame_data(pkg)
        mu = fd.tau / pkg.dim
        mus.append(mu)
        worst = max(worst, float(np.abs(fd.S - mu * np.eye(pkg.dim)).max()))
    spread = max(mus) - min(mus)
    mu = float(np.mean(mus))
    scale = max(1.0, abs(mu))
    resid = max(worst, spread)
    return EinsteinResult(resid <= tol * scale, mu, resid)


def parallel_ricci_check(M, points=None, tol: float = 1e-6) -> tuple:
    """(passed, max |nabla S| over frame components and points)."""
    pkgs = _packages(M, points)
    worst = max(float(np.abs(frame_data(p).NS).max()) for p in pkgs)
    return worst <= tol, worst


def factor_einstein_constants(pkgs, factors: Sequence[int]) -> list:
    """Mean of S restricted to each declared product factor, relative to g there."""
    out = []
    start = 0
    for size in factors:
        sl = slice(start, start + size)
        vals = []
        for pkg in pkgs:
            S = pkg.ricci[sl, sl]
            g = pkg.g[sl, sl]
            vals.append(float(np.trace(np.linalg.solve(g, S)) / size))
        out.append(float(np.mean(vals)))
        start += size
    return out


class Outcome(str, enum.Enum):
    FLAT_CN = "FLAT_CN"
    CPN = "CPN"
    CDN = "CDN"
    CONST_NEG_6D_CANDIDATE = "CONST_NEG_6D_CANDIDATE"
    HYPOTHESIS_FAILED = "HYPOTHESIS_FAILED"
    INDETERMINATE = "INDETERMINATE"


CLASSIFIED = (Outcome.FLAT_CN, Outcome.CPN, Outcome.CDN, Outcome.CONST_NEG_6D_CANDIDATE)


@dataclass
class Verdict:
    outcome: Outcome
    nu: float
    evidence: dict
    reasons: list
    mu_list: list = field(default_factory=list)

    @property
    def classified(self) -> bool:
        return self.outcome in CLASSIFIED

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome.value,
            "nu": self.nu,
            "mu_list": list(self.mu_list),
            "reasons": list(self.reasons),
            "evidence": self.evidence,
        }


def verdict_from_packages(
    pkgs: Sequence[CurvaturePackage],
    config: Optional[RunConfig] = None,
    factors: Sequence[int] = (),
    antihol: Optional[ConstancyStats] = None,
) -> Verdict:
    """Decide the classification outcome from curvature data at sample points."""
    config = config or RunConfig()
    th = config.all_thresholds
    reasons: list = []
    evidence: dict = {}
    if not pkgs:
        return Verdict(Outcome.INDETERMINATE, float("nan"), evidence, ["no evaluable points"])
    n = pkgs[0].dim
    m = n // 2
    mu_list = factor_einstein_constants(pkgs, factors) if len(factors) > 1 else []

    if not all(p.adapted for p in pkgs):
        return Verdict(Outcome.HYPOTHESIS_FAILED, float("nan"), evidence, ["J is not compatible with g"], mu_list)

    classes = [class_residuals(p, thresholds=th) for p in pkgs]
    ahs = [ah_residuals(p, thresholds=th) for p in pkgs]
    worst = {k: max(c[k].residual for c in classes) for k in ("K", "AK")}
    worst["AH3"] = max(a["AH3"].residual for a in ahs)
    evidence["max_residuals"] = dict(worst)
    kahler = worst["K"] <= th["K"]

    if n < 4:
        return Verdict(
            Outcome.INDETERMINATE, float("nan"), evidence, [f"real dimension {n} has no antiholomorphic planes"], mu_list
        )
    if antihol is None:
        antihol = antiholomorphic_constancy(pkgs, samples_per_point=config.samples_per_point, rng=config.rng(1))
    nu = antihol.estimate
    evidence["antiholomorphic"] = {
        "estimate": nu,
        "pointwise_spread": antihol.pointwise_spread,
        "global_spread": antihol.global_spread,
        "sample_count": antihol.sample_count,
    }
    einstein = einstein_check(pkgs, tol=th["einstein"])
    parallel, par_res = parallel_ricci_check(pkgs, tol=th["parallel_ricci"])
    fits = [fit_form(frame_data(p).R, frame_data(p).J) for p in pkgs]
    fit_f = float(np.mean([f.f for f in fits]))
    fit_h = float(np.mean([f.h for f in fits]))
    fit_res = max(f.residual for f in fits)
    eq25 = max(const_antihol_identities(p, nu=nu, thresholds=th)["eq_2_5"].residual for p in pkgs)
    max_r = max(float(np.abs(frame_data(p).R).max()) for p in pkgs)
    evidence.update(
        {
            "kahler": kahler,
            "einstein": {"passed": einstein.passed, "mu": einstein.mu, "residual": einstein.residual},
            "parallel_ricci": {"passed": parallel, "residual": par_res},
            "form_fit": {"f": fit_f, "h": fit_h, "residual": fit_res},
            "eq_2_5": eq25,
            "max_abs_R": max_r,
        }
    )

    gate = True
    if worst["AK"] > th["AK"]:
        reasons.append(f"almost Kaehler condition fails (residual {worst['AK']:.3g})")
        gate = False
    if worst["AH3"] > th["AH3"]:
        reasons.append(f"AH3 curvature identity fails (residual {worst['AH3']:.3g})")
        gate = False
    if antihol.pointwise_spread > th["constancy"]:
        reasons.append(f"antiholomorphic curvature not pointwise constant (spread {antihol.pointwise_spread:.3g})")
        gate = False
    if antihol.global_spread > th["schur"]:
        reasons.append(f"antiholomorphic curvature varies across points (spread {antihol.global_spread:.3g})")
        gate = False
    if not gate:
        return Verdict(Outcome.HYPOTHESIS_FAILED, nu, evidence, reasons, mu_list)

    if n < 6:
        # Outside the dim >= 6 hypothesis; only a directly verified constant
        # holomorphic curvature tensor R = nu (pi1 + pi2) on a Kaehler chart is classified.
        ftol = th["form_fit"]
        direct = (
            kahler
            and fit_res <= ftol
            and abs(fit_f - nu) <= th["constancy"]
            and abs(fit_h - nu) <= th["constancy"]
        )
        if not direct:
            reasons.append(f"real dimension {n} < 6 and curvature is not of the form nu (pi1 + pi2)")
            return Verdict(Outcome.INDETERMINATE, nu, evidence, reasons, mu_list)
        reasons.append(f"real dimension {n}: classified from R = nu (pi1 + pi2) directly")
        if max_r <= th["flat"]:
            return Verdict(Outcome.FLAT_CN, nu, evidence, reasons, mu_list)
        return Verdict(Outcome.CPN if nu > 0 else Outcome.CDN, nu, evidence, reasons, mu_list)

    if abs(nu) <= th["flat"] and max_r <= th["flat"]:
        reasons.append("curvature vanishes")
        return Verdict(Outcome.FLAT_CN, nu, evidence, reasons, mu_list)

    if kahler:
        expected_mu = 2 * (m + 1) * nu
        mu_ok = einstein.passed and abs(einstein.mu - expected_mu) <= th["einstein"] * max(1.0, abs(expected_mu))
        eq_ok = eq25 <= th["eq_2_5"]
        evidence["expected_einstein_constant"] = expected_mu
        if abs(nu) > th["flat"] and mu_ok and eq_ok:
            outcome = Outcome.CPN if nu > 0 else Outcome.CDN
            reasons.append(f"Kaehler, constant antiholomorphic curvature {nu:.12g}, Einstein constant {einstein.mu:.12g}")
            return Verdict(outcome, nu, evidence, reasons, mu_list)
        reasons.append("Kaehler but corroboration failed (Einstein constant or decomposition residual)")
        return Verdict(Outcome.INDETERMINATE, nu, evidence, reasons, mu_list)

    ftol = th["form_fit"]
    if n == 6 and fit_f < 0 and abs(fit_f - nu) <= th["constancy"] and abs(fit_h) <= ftol and fit_res <= ftol:
        reasons.append(f"non-Kaehler, R = f pi1 with f = {fit_f:.12g} < 0")
        return Verdict(Outcome.CONST_NEG_6D_CANDIDATE, nu, evidence, reasons, mu_list)

    reasons.append("hypotheses hold but no branch of the classification matched")
    return Verdict(Outcome.INDETERMINATE, nu, evidence, reasons, mu_list)


def theorem_verdict(M: ChartManifold, config: Optional[RunConfig] = None, points=None) -> Verdict:
    config = config or RunConfig()
    if points is None:
        points = M.sample_points(config.rng(0), config.points_per_manifold)
    pkgs = []
    for p in points:
        try:
            pkgs.append(curvature_package(M, p, mode=config.derivative_mode))
        except (GeometryError, ValueError) as exc:
            return Verdict(Outcome.INDETERMINATE, float("nan"), {}, [f"evaluation failed at {list(p)}: {exc}"])
    return verdict_from_packages(pkgs, config, M.factors)
