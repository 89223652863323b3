"""Curvature and structure identities as numerical residuals.

Every identity is multilinear, so it holds iff it holds on all tuples of
frame vectors.  Residuals are therefore computed from the components of the
tensors in the orthonormal frame of the :class:`CurvaturePackage`, i.e. by
full enumeration over frame arguments, and reported as max-abs values.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import DEFAULT_THRESHOLDS
from .geometry import ChartManifold, CurvaturePackage, curvature_package
from .tensors import GeometryError, curvature_symmetry_residuals, pi1_tensor, pi2_tensor, psi_tensor, to_frame

CLASS_NAMES = ("K", "NK", "AK", "QK")
AH_NAMES = ("AH1", "AH2", "AH3")
SYMMETRY_NAMES = ("R_skew_12", "R_skew_34", "R_pair", "first_bianchi")
BIANCHI_NAMES = ("full_second_bianchi", "eq_2_1", "eq_2_2")
AK2_NAMES = ("eq_2_3", "eq_2_4")
CONST_NAMES = ("eq_2_5", "eq_2_6", "eq_2_7", "eq_2_8")


@dataclass(frozen=True)
class Residual:
    residual: float
    threshold: float
    argument_count: int

    @property
    def passed(self) -> bool:
        return self.residual <= self.threshold

    def to_dict(self) -> dict:
        return {
            "residual": self.residual,
            "threshold": self.threshold,
            "pass": self.passed,
            "argument_count": self.argument_count,
        }


class ResidualReport(dict):
    """Identity name -> :class:`Residual`, plus ``scale`` = max |R| at the point."""

    def __init__(self, entries=(), scale: float = 0.0):
        super().__init__(entries)
        self.scale = scale

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.values())

    def failures(self) -> list:
        return [k for k, r in self.items() if not r.passed]

    def merged(self, other: "ResidualReport") -> "ResidualReport":
        out = ResidualReport(self, max(self.scale, other.scale))
        out.update(other)
        return out

    def to_dict(self) -> dict:
        return {k: v.to_dict() for k, v in self.items()}


@dataclass(frozen=True)
class FrameData:
    """Frame components (g = identity) of everything in a package."""

    m: int
    J: np.ndarray
    R: np.ndarray
    G: np.ndarray  # G[x, y, z] = g((nabla_x J) y, z)
    NR: np.ndarray
    S: np.ndarray
    S_star: np.ndarray
    NS: np.ndarray
    dtau: np.ndarray
    tau: float
    tau_star: float


def frame_data(pkg: CurvaturePackage) -> FrameData:
    E = pkg.frame
    # components of J in the frame: J E = E Jf
    Jf = E.T @ pkg.g @ pkg.J @ E
    return FrameData(
        m=pkg.m,
        J=Jf,
        R=to_frame(pkg.riemann, E),
        G=to_frame(pkg.nabla_j, E),
        NR=to_frame(pkg.nabla_r, E),
        S=to_frame(pkg.ricci, E),
        S_star=to_frame(pkg.ricci_star, E),
        NS=to_frame(pkg.nabla_s, E),
        dtau=E.T @ pkg.dtau,
        tau=pkg.tau,
        tau_star=pkg.tau_star,
    )


def _package(M, p) -> CurvaturePackage:
    if isinstance(M, CurvaturePackage):
        return M
    if isinstance(M, ChartManifold):
        if p is None:
            raise GeometryError("a point is required")
        return curvature_package(M, p)
    raise TypeError(f"expected ChartManifold or CurvaturePackage, got {type(M).__name__}")


def _th(thresholds: Optional[dict], name: str) -> float:
    if thresholds and name in thresholds:
        return thresholds[name]
    return DEFAULT_THRESHOLDS[name]


def _amax(a: np.ndarray) -> float:
    return float(np.abs(a).max()) if a.size else 0.0


def apply_j(T: np.ndarray, J: np.ndarray, axes) -> np.ndarray:
    """Feed J-images into the given slots: T(.., JX, ..) on frame arguments."""
    out = T
    for ax in axes:
        out = np.moveaxis(np.tensordot(out, J, axes=([ax], [0])), -1, ax)
    return out


def _report(values: dict, thresholds, counts: dict, scale: float) -> ResidualReport:
    return ResidualReport(
        {k: Residual(float(v), _th(thresholds, k), counts[k]) for k, v in values.items()}, scale
    )


def symmetry_residuals(M, p=None, thresholds=None) -> ResidualReport:
    """Algebraic symmetries of R, relative to max(1, max |R|)."""
    pkg = _package(M, p)
    n = pkg.dim
    R = frame_data(pkg).R
    vals = curvature_symmetry_residuals(R)
    return _report(vals, thresholds, dict.fromkeys(vals, n**4), _amax(R))


def class_residuals(M, p=None, thresholds=None) -> ResidualReport:
    """K: nabla J = 0; NK: (nabla_X J)X = 0; AK: cyclic sum; QK: (nabla_X J)Y + (nabla_JX J)JY = 0."""
    pkg = _package(M, p)
    fd = frame_data(pkg)
    n = pkg.dim
    G = fd.G
    nk = 0.5 * (G + G.transpose(1, 0, 2))  # polarized (nabla_X J)X
    ak = G + G.transpose(1, 2, 0) + G.transpose(2, 0, 1)
    qk = G + apply_j(G, fd.J, (0, 1))
    vals = {
        "K": _amax(G),
        "NK": _amax(nk),
        "AK": _amax(ak),
        "QK": float(np.sqrt((qk**2).sum(axis=2)).max()),
    }
    counts = {"K": n**3, "NK": n**3, "AK": n**3, "QK": n**2}
    return _report(vals, thresholds, counts, _amax(fd.R))


def ah_residuals(M, p=None, thresholds=None) -> ResidualReport:
    pkg = _package(M, p)
    fd = frame_data(pkg)
    R, J = fd.R, fd.J
    n = pkg.dim
    r34 = apply_j(R, J, (2, 3))
    ah1 = R - r34
    ah2 = ah1 - apply_j(R, J, (1, 3)) - apply_j(R, J, (0, 3))
    ah3 = R - apply_j(r34, J, (0, 1))
    vals = {"AH1": _amax(ah1), "AH2": _amax(ah2), "AH3": _amax(ah3)}
    return _report(vals, thresholds, dict.fromkeys(vals, n**4), _amax(R))


def bianchi_residuals(M, p=None, thresholds=None) -> ResidualReport:
    """Second Bianchi identity and its two contractions; valid on every Riemannian manifold."""
    pkg = _package(M, p)
    fd = frame_data(pkg)
    NR, NS = fd.NR, fd.NS
    n = pkg.dim
    full = NR + NR.transpose(2, 0, 1, 3, 4) + NR.transpose(1, 2, 0, 3, 4)
    div_r = np.einsum("ixyzi->xyz", NR)
    eq21 = div_r - NS + NS.transpose(1, 0, 2)
    eq22 = np.einsum("ixi->x", NS) - 0.5 * fd.dtau
    vals = {"full_second_bianchi": _amax(full), "eq_2_1": _amax(eq21), "eq_2_2": _amax(eq22)}
    counts = {"full_second_bianchi": n**5, "eq_2_1": n**3, "eq_2_2": n}
    return _report(vals, thresholds, counts, _amax(fd.R))


def nabla_ricci_star(fd: FrameData) -> np.ndarray:
    """(nabla_e S')(x, y) by the product rule through R, J and the parallel frame sum."""
    R, J, G = fd.R, fd.J, fd.G
    t1 = np.einsum("exacd,ca,dy->exy", fd.NR, J, J)
    t2 = np.einsum("xacd,eac,dy->exy", R, G, J)
    t3 = np.einsum("xacd,ca,eyd->exy", R, J, G)
    return t1 + t2 + t3


def _derivation_rhs(Q: np.ndarray, J: np.ndarray, G: np.ndarray) -> np.ndarray:
    """Q((nabla_x J)y, Jz) + Q(Jy, (nabla_x J)z) on frame triples (x, y, z)."""
    QJ = Q @ J
    a = np.einsum("xyp,pz->xyz", G, QJ)
    b = np.einsum("py,pq,xzq->xyz", J, Q, G)
    return a + b


def ak2_identities(M, p=None, thresholds=None) -> ResidualReport:
    """Identities valid on AK_2 manifolds; computed regardless of membership."""
    pkg = _package(M, p)
    fd = frame_data(pkg)
    R, J, G = fd.R, fd.J, fd.G
    n = pkg.dim
    D = G - G.transpose(1, 0, 2)  # (nabla_X J)Y - (nabla_Y J)X
    eq23 = R - apply_j(R, J, (2, 3)) - 0.5 * np.einsum("xyc,zuc->xyzu", D, D)
    Q = fd.S - fd.S_star
    NQ = fd.NS - nabla_ricci_star(fd)
    eq24 = 2.0 * NQ - _derivation_rhs(Q, J, G)
    vals = {"eq_2_3": _amax(eq23), "eq_2_4": _amax(eq24)}
    return _report(vals, thresholds, {"eq_2_3": n**4, "eq_2_4": n**3}, _amax(R))


def const_antihol_identities(M, p=None, nu: float = 0.0, thresholds=None) -> ResidualReport:
    """Consequences of pointwise constant antiholomorphic sectional curvature ``nu``."""
    pkg = _package(M, p)
    fd = frame_data(pkg)
    R, J, G, S = fd.R, fd.J, fd.G, fd.S
    m = fd.m
    n = 2 * m
    eye = np.eye(n)
    model = psi_tensor(S, eye, J) / 6.0 + nu * pi1_tensor(eye) - ((2 * m - 1) / 3.0) * nu * pi2_tensor(eye, J)
    eq25 = R - model
    eq26 = (m + 1) * S - 3.0 * fd.S_star - ((m + 1) * fd.tau - 3.0 * fd.tau_star) / (2 * m) * eye
    eq27 = np.einsum("ixi->x", fd.NS)
    eq28 = 2.0 * fd.NS - _derivation_rhs(S, J, G)
    vals = {"eq_2_5": _amax(eq25), "eq_2_6": _amax(eq26), "eq_2_7": _amax(eq27), "eq_2_8": _amax(eq28)}
    counts = {"eq_2_5": n**4, "eq_2_6": n**2, "eq_2_7": n, "eq_2_8": n**3}
    return _report(vals, thresholds, counts, _amax(R))


@dataclass(frozen=True)
class FormFit:
    f: float
    h: float
    residual: float


def curvature_form_fit(M, p=None) -> FormFit:
    """Least-squares R ~ f pi1 + h pi2 over all frame quadruples."""
    pkg = _package(M, p)
    fd = frame_data(pkg)
    return fit_form(fd.R, fd.J)


def fit_form(R: np.ndarray, J: np.ndarray) -> FormFit:
    n = R.shape[0]
    eye = np.eye(n)
    P1 = pi1_tensor(eye)
    P2 = pi2_tensor(eye, J)
    gram = np.array([[np.vdot(P1, P1), np.vdot(P1, P2)], [np.vdot(P2, P1), np.vdot(P2, P2)]])
    if abs(np.linalg.det(gram)) < 1e-12 * gram.max() ** 2:
        raise GeometryError("pi1 and pi2 are linearly dependent in this dimension")
    rhs = np.array([np.vdot(P1, R), np.vdot(P2, R)])
    f, h = np.linalg.solve(gram, rhs)
    return FormFit(float(f), float(h), _amax(R - f * P1 - h * P2))


def full_suite(pkg: CurvaturePackage, nu: float, thresholds=None) -> ResidualReport:
    """Every identity at one point, with form_fit reported as its residual."""
    out = symmetry_residuals(pkg, thresholds=thresholds)
    for part in (
        class_residuals(pkg, thresholds=thresholds),
        ah_residuals(pkg, thresholds=thresholds),
        bianchi_residuals(pkg, thresholds=thresholds),
        ak2_identities(pkg, thresholds=thresholds),
        const_antihol_identities(pkg, nu=nu, thresholds=thresholds),
    ):
        out = out.merged(part)
    fit = curvature_form_fit(pkg)
    out["form_fit"] = Residual(fit.residual, _th(thresholds, "form_fit"), pkg.dim**4)
    return out


SUITE_NAMES = SYMMETRY_NAMES + CLASS_NAMES + AH_NAMES + BIANCHI_NAMES + AK2_NAMES + CONST_NAMES + ("form_fit",)
UNIVERSAL_NAMES = SYMMETRY_NAMES + BIANCHI_NAMES
