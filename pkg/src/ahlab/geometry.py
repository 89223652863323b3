"""Curvature of a single-chart almost Hermitian manifold.

Conventions:

* ``R(X, Y, Z, U) = g(R(X, Y)Z, U)`` with ``R(X, Y) = [nabla_X, nabla_Y] - nabla_[X,Y]``,
  so a space of constant curvature ``k`` has ``R = k * pi1`` and the
  sectional curvature of an orthonormal pair is ``R(x, y, y, x)``.
* ``S(Y, Z) = sum_i R(E_i, Y, Z, E_i)``, ``S'(X, Y) = sum_i R(X, E_i, JE_i, JY)``.
* Derivative slots come first: ``nabla_j[a, y, z] = g((nabla_a J) y, z)``,
  ``nabla_r[a, x, y, z, u] = (nabla_a R)(x, y, z, u)``,
  ``nabla_s[a, y, z] = (nabla_a S)(y, z)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .expr import Expr, max_var_index
from .jets import eval_jets, fd_jet
from .tensors import (
    COMPAT_RTOL,
    GeometryError,
    IncompatibleStructure,
    adapted_frame,
    check_pair,
    orthonormal_frame,
)

MAX_CONDITION = 1e12


class SingularMetric(GeometryError):
    pass


@dataclass(frozen=True)
class ChartManifold:
    """A 2m-dimensional almost Hermitian manifold given on one coordinate box."""

    name: str
    m: int
    g_exprs: tuple  # 2m x 2m tuple of tuples of Expr
    j_exprs: tuple  # 2m x 2m, J[i][j] = J^i_j
    domain: tuple  # ((lo, hi), ...) per coordinate
    expected: Optional[str] = None
    factors: tuple = field(default=())  # real dimensions of product factors, if declared

    def __post_init__(self):
        n = 2 * self.m
        if self.m < 1:
            raise GeometryError(f"complex dimension must be >= 1, got {self.m}")
        for label, mat in (("g", self.g_exprs), ("J", self.j_exprs)):
            if len(mat) != n or any(len(row) != n for row in mat):
                raise GeometryError(f"{label} must be {n}x{n} for m={self.m}")
            for row in mat:
                for e in row:
                    if not isinstance(e, Expr):
                        raise GeometryError(f"{label} entries must be expressions, got {e!r}")
                    if max_var_index(e) > n:
                        raise GeometryError(f"{label} entry uses a variable beyond x{n}")
        if len(self.domain) != n:
            raise GeometryError(f"domain must list {n} intervals")
        if any(not lo < hi for lo, hi in self.domain):
            raise GeometryError("domain intervals must satisfy lo < hi")
        if self.factors and sum(self.factors) != n:
            raise GeometryError("factor dimensions must add up to the total dimension")

    @property
    def dim(self) -> int:
        return 2 * self.m

    def sample_points(self, rng: np.random.Generator, count: int) -> np.ndarray:
        lo = np.array([a for a, _ in self.domain])
        hi = np.array([b for _, b in self.domain])
        return lo + (hi - lo) * rng.random((count, self.dim))

    def contains(self, p) -> bool:
        return all(lo < v < hi for v, (lo, hi) in zip(p, self.domain))

    def metric(self, p) -> np.ndarray:
        return metric_jets(self, p, 0)[0]

    def acs(self, p) -> np.ndarray:
        return acs_jets(self, p, 0)[0]


def _upper_entries(mat, n):
    return [(i, j) for i in range(n) for j in range(i, n)]


def metric_jets(M: ChartManifold, p, order: int = 3, mode: str = "jets") -> list:
    """[g, dg, d2g, d3g] with derivative axes trailing: dg[i, j, a] = d_a g_ij."""
    n = M.dim
    pairs = _upper_entries(M.g_exprs, n)
    exprs = [M.g_exprs[i][j] for i, j in pairs]
    jets = _jets(exprs, p, order, mode)
    out = [np.empty((n, n) + (n,) * k) for k in range(order + 1)]
    for (i, j), jet in zip(pairs, jets):
        parts = (jet.value,) + jet.partials
        for k in range(order + 1):
            out[k][i, j] = parts[k]
            out[k][j, i] = parts[k]
    return out


def acs_jets(M: ChartManifold, p, order: int = 1, mode: str = "jets") -> list:
    n = M.dim
    exprs = [M.j_exprs[i][j] for i in range(n) for j in range(n)]
    jets = _jets(exprs, p, order, mode)
    out = [np.empty((n, n) + (n,) * k) for k in range(order + 1)]
    for idx, jet in enumerate(jets):
        i, j = divmod(idx, n)
        parts = (jet.value,) + jet.partials
        for k in range(order + 1):
            out[k][i, j] = parts[k]
    return out


def _jets(exprs, p, order, mode):
    if mode == "jets":
        return eval_jets(exprs, p, order)
    if mode == "finite_difference_oracle":
        return [fd_jet(e, p, order) for e in exprs]
    raise ValueError(f"unknown derivative mode {mode!r}")


def inverse_metric(g: np.ndarray) -> np.ndarray:
    w = np.linalg.eigvalsh(g)
    if w.min() <= 0:
        raise SingularMetric("metric is not positive definite")
    if w.max() / w.min() > MAX_CONDITION:
        raise SingularMetric(f"metric condition number {w.max() / w.min():.3g} exceeds {MAX_CONDITION:g}")
    L = np.linalg.cholesky(g)
    Linv = np.linalg.solve(L, np.eye(len(g)))
    inv = Linv.T @ Linv
    return 0.5 * (inv + inv.T)


def _first_kind(D: np.ndarray) -> np.ndarray:
    """Christoffel symbols of the first kind C[i, j, l] (+ derivative axes) from D = d(g)."""
    return 0.5 * (
        np.einsum("jli...->ijl...", D) + np.einsum("ilj...->ijl...", D) - np.einsum("ijl...->ijl...", D)
    )


@dataclass(frozen=True)
class CurvaturePackage:
    """Everything the identity checks need at one point, in chart coordinates."""

    point: np.ndarray
    g: np.ndarray
    J: np.ndarray
    ginv: np.ndarray
    frame: np.ndarray  # columns: orthonormal frame used for contractions
    adapted: bool  # frame is (e_1..e_m, Je_1..Je_m)
    gamma: np.ndarray  # gamma[k, i, j] = Gamma^k_ij
    nabla_j: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    ricci_star: np.ndarray
    tau: float
    tau_star: float
    nabla_r: np.ndarray
    nabla_s: np.ndarray
    dtau: np.ndarray  # coordinate gradient of tau, from the jets (not from nabla_s)

    @property
    def dim(self) -> int:
        return self.g.shape[0]

    @property
    def m(self) -> int:
        return self.g.shape[0] // 2


def frame_contractions(R: np.ndarray, J: np.ndarray, E: np.ndarray):
    """(S, S', tau, tau') from R summed over the orthonormal frame E."""
    JE = J @ E
    S = np.einsum("ia,ijkl,la->jk", E, R, E)
    # S'(x, y) = sum_a R(x, e_a, Je_a, Jy)
    T = np.einsum("xacd,ab,cb->xd", R, E, JE)
    S_star = T @ J
    tau = float(np.einsum("ja,jk,ka->", E, S, E))
    tau_star = float(np.einsum("ja,jk,ka->", E, S_star, E))
    return S, S_star, tau, tau_star


def curvature_package(
    M: ChartManifold,
    p: Sequence[float],
    mode: str = "jets",
    frame: Optional[np.ndarray] = None,
    rtol: float = COMPAT_RTOL,
) -> CurvaturePackage:
    p = np.asarray(p, dtype=float)
    if p.shape != (M.dim,):
        raise GeometryError(f"point has shape {p.shape}, expected ({M.dim},)")
    G0, G1, G2, G3 = metric_jets(M, p, 3, mode)
    J0, J1 = acs_jets(M, p, 1, mode)
    return package_from_jets(p, (G0, G1, G2, G3), (J0, J1), frame=frame, rtol=rtol)


def package_from_jets(p, gj, jj, frame=None, rtol=COMPAT_RTOL) -> CurvaturePackage:
    G0, G1, G2, G3 = gj
    J0, J1 = jj
    n = G0.shape[0]
    ein = np.einsum

    gi0 = inverse_metric(G0)
    gi1 = -ein("ik,kla,lj->ija", gi0, G1, gi0)
    t = ein("ika,kl,ljb->ijab", G1, gi0, G1)
    gi2 = ein("ik,klab,lj->ijab", gi0, t + t.transpose(0, 1, 3, 2) - G2, gi0)

    C0, C1, C2 = _first_kind(G1), _first_kind(G2), _first_kind(G3)
    gam0 = ein("ml,ijl->mij", gi0, C0)
    gam1 = ein("mla,ijl->mija", gi1, C0) + ein("ml,ijla->mija", gi0, C1)
    t = ein("mla,ijlb->mijab", gi1, C1)
    gam2 = ein("mlab,ijl->mijab", gi2, C0) + t + t.transpose(0, 1, 2, 4, 3) + ein("ml,ijlab->mijab", gi0, C2)

    # (1,3) curvature A[i, j, k, m] = (R(d_i, d_j) d_k)^m and its coordinate derivative
    quad0 = ein("mip,pjk->ijkm", gam0, gam0)
    A0 = ein("mjki->ijkm", gam1) - ein("mikj->ijkm", gam1) + quad0 - quad0.transpose(1, 0, 2, 3)
    quad1 = ein("mipa,pjk->ijkma", gam1, gam0) + ein("mip,pjka->ijkma", gam0, gam1)
    A1 = ein("mjkia->ijkma", gam2) - ein("mikja->ijkma", gam2) + quad1 - quad1.transpose(1, 0, 2, 3, 4)

    R0 = ein("ijkm,ml->ijkl", A0, G0)
    R1 = ein("ijkma,ml->ijkla", A1, G0) + ein("ijkm,mla->ijkla", A0, G1)

    nabla_r = (
        ein("ijkla->aijkl", R1)
        - ein("pai,pjkl->aijkl", gam0, R0)
        - ein("paj,ipkl->aijkl", gam0, R0)
        - ein("pak,ijpl->aijkl", gam0, R0)
        - ein("pal,ijkp->aijkl", gam0, R0)
    )

    S_coord = ein("il,ijkl->jk", gi0, R0)
    S1 = ein("ila,ijkl->jka", gi1, R0) + ein("il,ijkla->jka", gi0, R1)
    nabla_s = ein("jka->ajk", S1) - ein("paj,pk->ajk", gam0, S_coord) - ein("pak,jp->ajk", gam0, S_coord)
    dtau = ein("jka,jk->a", gi1, S_coord) + ein("jk,jka->a", gi0, S1)

    nj = J1 + ein("iap,pj->ija", gam0, J0) - ein("paj,ip->ija", gam0, J0)  # (nabla_a J)^i_j at [i, j, a]
    nabla_j = ein("ki,ija->ajk", G0, nj)

    adapted = True
    if frame is None:
        try:
            frame = adapted_frame(G0, J0, rtol)
        except IncompatibleStructure:
            frame = orthonormal_frame(G0)
            adapted = False
    else:
        frame = np.asarray(frame, dtype=float)
        adapted = False
    S, S_star, tau, tau_star = frame_contractions(R0, J0, frame)

    return CurvaturePackage(
        point=np.asarray(p, dtype=float),
        g=G0,
        J=J0,
        ginv=gi0,
        frame=frame,
        adapted=adapted,
        gamma=gam0,
        nabla_j=nabla_j,
        riemann=R0,
        ricci=0.5 * (S + S.T),
        ricci_star=S_star,
        tau=tau,
        tau_star=tau_star,
        nabla_r=nabla_r,
        nabla_s=nabla_s,
        dtau=dtau,
    )


def christoffel(M: ChartManifold, p) -> np.ndarray:
    G0, G1 = metric_jets(M, p, 1)
    return np.einsum("ml,ijl->mij", inverse_metric(G0), _first_kind(G1))


def nabla_j(M: ChartManifold, p) -> np.ndarray:
    return curvature_package(M, p).nabla_j


def riemann(M: ChartManifold, p) -> np.ndarray:
    return curvature_package(M, p).riemann


def ricci_pack(M: ChartManifold, p) -> CurvaturePackage:
    return curvature_package(M, p)


def nabla_riemann(M: ChartManifold, p) -> np.ndarray:
    return curvature_package(M, p).nabla_r


def nabla_ricci(M: ChartManifold, p) -> np.ndarray:
    return curvature_package(M, p).nabla_s


def validate_at(M: ChartManifold, p, rtol: float = COMPAT_RTOL) -> None:
    """Raise if the metric/structure invariants fail at ``p``."""
    g = M.metric(p)
    J = M.acs(p)
    check_pair(g, J, rtol)
    inverse_metric(g)
