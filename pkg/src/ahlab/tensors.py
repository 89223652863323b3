"""Pointwise multilinear algebra on an almost Hermitian tangent space.

Vectors are coordinate component arrays.  ``g`` is the symmetric metric
matrix and ``J`` the mixed (1,1) matrix acting on column vectors, so
``(J @ v)[i] = J[i, j] v[j]``.  Covariant tensors are dense numpy arrays,
one axis per slot.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

COMPAT_RTOL = 1e-8


class GeometryError(ValueError):
    """Invalid pointwise geometric data."""


class IncompatibleStructure(GeometryError):
    pass


def standard_j(m: int) -> np.ndarray:
    """Block-diagonal complex structure on R^{2m}: J d/dx_k = d/dy_k for coords (x1, y1, x2, y2, ...)."""
    J = np.zeros((2 * m, 2 * m))
    for k in range(m):
        J[2 * k + 1, 2 * k] = 1.0
        J[2 * k, 2 * k + 1] = -1.0
    return J


def frame_j(m: int) -> np.ndarray:
    """J in an adapted frame ordered (e_1..e_m, Je_1..Je_m)."""
    eye = np.eye(m)
    zero = np.zeros((m, m))
    return np.block([[zero, -eye], [eye, zero]])


def check_pair(g: np.ndarray, J: np.ndarray, rtol: float = COMPAT_RTOL) -> None:
    """Raise unless ``g`` is a positive definite metric and ``J`` a compatible complex structure."""
    g = np.asarray(g, dtype=float)
    J = np.asarray(J, dtype=float)
    n = g.shape[0]
    if g.shape != (n, n) or J.shape != (n, n):
        raise GeometryError(f"shape mismatch: g {g.shape}, J {J.shape}")
    if n % 2:
        raise GeometryError(f"dimension {n} is odd")
    scale = max(1.0, float(np.abs(g).max()))
    if np.abs(g - g.T).max() > rtol * scale:
        raise GeometryError("metric is not symmetric")
    if np.linalg.eigvalsh(0.5 * (g + g.T)).min() <= 0:
        raise GeometryError("metric is not positive definite")
    jscale = max(1.0, float(np.abs(J).max()))
    if np.abs(J @ J + np.eye(n)).max() > rtol * jscale**2:
        raise IncompatibleStructure("J o J != -identity")
    if np.abs(J.T @ g @ J - g).max() > rtol * scale * jscale**2:
        raise IncompatibleStructure("g(JX, JY) != g(X, Y)")


def adapted_frame(g: np.ndarray, J: np.ndarray, rtol: float = COMPAT_RTOL) -> np.ndarray:
    """g-orthonormal frame (e_1..e_m, Je_1..Je_m) as the columns of a matrix.

    Gram-Schmidt over coordinate directions, adding each surviving direction
    together with its J-image.
    """
    g = np.asarray(g, dtype=float)
    J = np.asarray(J, dtype=float)
    check_pair(g, J, rtol)
    n = g.shape[0]
    m = n // 2
    basis: list = []
    firsts: list = []
    for cand in np.eye(n):
        if len(firsts) == m:
            break
        v = cand.copy()
        for _ in range(2):  # second pass for round-off
            for w in basis:
                v = v - (w @ g @ v) * w
        norm = np.sqrt(v @ g @ v)
        if norm < 1e-8:
            continue
        v = v / norm
        jv = J @ v
        basis.extend((v, jv))
        firsts.append(v)
    if len(firsts) != m:
        raise GeometryError("could not complete adapted frame")
    E = np.empty((n, n))
    for k, v in enumerate(firsts):
        E[:, k] = v
        E[:, m + k] = J @ v
    return E


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """Any g-orthonormal frame (columns), no J involved."""
    L = np.linalg.cholesky(np.asarray(g, dtype=float))
    return np.linalg.inv(L).T


def to_frame(T: np.ndarray, E: np.ndarray) -> np.ndarray:
    """Components of covariant tensor ``T`` on the frame vectors (columns of ``E``)."""
    out = T
    for _ in range(T.ndim):
        # contract leading axis; the new axis lands at the end, so after ndim steps order is restored
        out = np.tensordot(out, E, axes=([0], [0]))
    return out


# --- the curvature-type operators -------------------------------------------


def pi1_tensor(g: np.ndarray) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    return np.einsum("xu,yz->xyzu", g, g) - np.einsum("xz,yu->xyzu", g, g)


def psi_tensor(Q: np.ndarray, g: np.ndarray, J: np.ndarray) -> np.ndarray:
    """psi(Q) for a (0,2) tensor Q as a dense rank-4 array."""
    Q = np.asarray(Q, dtype=float)
    g = np.asarray(g, dtype=float)
    if Q.shape != g.shape:
        raise GeometryError(f"Q shape {Q.shape} does not match metric {g.shape}")
    W = g @ J  # W[a, b] = g(a, Jb)
    QJ = Q @ J  # QJ[a, b] = Q(a, Jb)
    return (
        np.einsum("xu,yz->xyzu", W, QJ)
        - np.einsum("xz,yu->xyzu", W, QJ)
        - 2.0 * np.einsum("xy,zu->xyzu", W, QJ)
        + np.einsum("yz,xu->xyzu", W, QJ)
        - np.einsum("yu,xz->xyzu", W, QJ)
        - 2.0 * np.einsum("zu,xy->xyzu", W, QJ)
    )


def pi2_tensor(g: np.ndarray, J: np.ndarray) -> np.ndarray:
    return 0.5 * psi_tensor(g, g, J)


def _check_vectors(n: int, *vs) -> None:
    for v in vs:
        if np.shape(v) != (n,):
            raise GeometryError(f"vector of shape {np.shape(v)} in dimension {n}")


def pi1(x, y, z, u, g) -> float:
    g = np.asarray(g, dtype=float)
    _check_vectors(g.shape[0], x, y, z, u)
    return (x @ g @ u) * (y @ g @ z) - (x @ g @ z) * (y @ g @ u)


def psi(Q, g, J, x, y, z, u) -> float:
    g = np.asarray(g, dtype=float)
    Q = np.asarray(Q, dtype=float)
    _check_vectors(g.shape[0], x, y, z, u)
    if Q.shape != g.shape:
        raise GeometryError(f"Q shape {Q.shape} does not match metric {g.shape}")

    def w(a, b):
        return a @ g @ (J @ b)

    def q(a, b):
        return a @ Q @ (J @ b)

    return (
        w(x, u) * q(y, z)
        - w(x, z) * q(y, u)
        - 2.0 * w(x, y) * q(z, u)
        + w(y, z) * q(x, u)
        - w(y, u) * q(x, z)
        - 2.0 * w(z, u) * q(x, y)
    )


def pi2(g, J, x, y, z, u) -> float:
    return 0.5 * psi(g, g, J, x, y, z, u)


def antiholomorphic_plane_sample(
    g: np.ndarray, J: np.ndarray, rng: np.random.Generator, max_tries: int = 100
) -> tuple:
    """Random orthonormal (x, y) with g(x, y) = g(x, Jy) = 0."""
    g = np.asarray(g, dtype=float)
    J = np.asarray(J, dtype=float)
    n = g.shape[0]
    if n < 4:
        raise GeometryError("antiholomorphic planes need real dimension >= 4")
    for _ in range(max_tries):
        x = rng.standard_normal(n)
        nx = np.sqrt(x @ g @ x)
        if nx < 1e-8:
            continue
        x = x / nx
        jx = J @ x
        jx = jx / np.sqrt(jx @ g @ jx)
        y = rng.standard_normal(n)
        for _ in range(2):
            y = y - (x @ g @ y) * x - (jx @ g @ y) * jx
        ny = np.sqrt(y @ g @ y)
        if ny < 1e-8:
            continue
        return x, y / ny
    raise GeometryError("antiholomorphic sampling kept degenerating")


def holomorphic_plane_sample(g: np.ndarray, J: np.ndarray, rng: np.random.Generator) -> tuple:
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    for _ in range(100):
        x = rng.standard_normal(n)
        nx = np.sqrt(x @ g @ x)
        if nx >= 1e-8:
            x = x / nx
            jx = J @ x
            return x, jx / np.sqrt(jx @ g @ jx)
    raise GeometryError("holomorphic sampling kept degenerating")


def random_compatible_pair(m: int, rng: np.random.Generator, spread: float = 0.5):
    """Random (g, J) pair: g = A^T A for a random near-identity A, J = A^{-1} J0 A.

    Draws with cond(A) > 20 are rejected so round-off in J stays near machine precision.
    """
    n = 2 * m
    A = np.eye(n) + spread * rng.standard_normal((n, n))
    while np.linalg.cond(A) > 20:
        A = np.eye(n) + spread * rng.standard_normal((n, n))
    g = A.T @ A
    J = np.linalg.solve(A, standard_j(m) @ A)
    return 0.5 * (g + g.T), J


def sym_residual(T: np.ndarray, perm, sign: float = 1.0) -> float:
    return float(np.abs(T - sign * T.transpose(perm)).max()) if T.size else 0.0


def curvature_symmetry_residuals(R: np.ndarray, scale: Optional[float] = None) -> dict:
    """Algebraic curvature symmetries of a rank-4 array, relative to ``scale``."""
    s = scale if scale is not None else max(1.0, float(np.abs(R).max()))
    bianchi = R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)
    return {
        "R_skew_12": sym_residual(R, (1, 0, 2, 3), -1.0) / s,
        "R_skew_34": sym_residual(R, (0, 1, 3, 2), -1.0) / s,
        "R_pair": sym_residual(R, (2, 3, 0, 1)) / s,
        "first_bianchi": float(np.abs(bianchi).max()) / s,
    }
