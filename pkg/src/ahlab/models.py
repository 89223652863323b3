"""Built-in charts for the model spaces.

Real coordinates of C^m are ordered (x1, y1, x2, y2, ...) so that the
integrable structure is ``J d/dx_k = d/dy_k``.  All metrics are expression
trees and go through the same jet pipeline as user-supplied charts.
"""
from __future__ import annotations

import math
from functools import reduce

import numpy as np

from .expr import Expr, Num, Var, as_expr, shift_vars
from .geometry import ChartManifold
from .tensors import GeometryError

ZERO = Num(0.0)
ONE = Num(1.0)

# Octonion imaginary units e1..e7: e_a e_b = e_c for each triple below, cyclically.
FANO_TRIPLES = ((1, 2, 3), (1, 4, 5), (2, 4, 6), (3, 4, 7), (1, 7, 6), (2, 5, 7), (3, 6, 5))


def structure_constants() -> np.ndarray:
    """Totally antisymmetric f[a, b, c] (0-based) with e_a x e_b = sum_c f[a, b, c] e_c."""
    f = np.zeros((7, 7, 7))
    for a, b, c in FANO_TRIPLES:
        a, b, c = a - 1, b - 1, c - 1
        for i, j, k in ((a, b, c), (b, c, a), (c, a, b)):
            f[i, j, k] = 1.0
            f[j, i, k] = -1.0
    return f


def cross7(u, v) -> np.ndarray:
    return np.einsum("abc,a,b->c", structure_constants(), u, v)


def octonion_product(p, q) -> np.ndarray:
    """Product of octonions given as 8-vectors (real part first)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a, u = p[0], p[1:]
    b, v = q[0], q[1:]
    out = np.empty(8)
    out[0] = a * b - u @ v
    out[1:] = a * v + b * u + cross7(u, v)
    return out


def _sum(terms) -> Expr:
    terms = list(terms)
    return reduce(lambda s, t: s + t, terms) if terms else ZERO


def _signed_sum(pairs) -> Expr:
    """Sum of (coefficient, expr) pairs with subtraction for negative coefficients."""
    out = None
    for coef, e in pairs:
        if coef == 0:
            continue
        term = e if abs(coef) == 1 else Num(abs(coef)) * e
        if out is None:
            out = term if coef > 0 else -term
        else:
            out = out + term if coef > 0 else out - term
    return ZERO if out is None else out


def _standard_j_exprs(m: int) -> tuple:
    n = 2 * m
    rows = [[ZERO] * n for _ in range(n)]
    for k in range(m):
        rows[2 * k + 1][2 * k] = ONE
        rows[2 * k][2 * k + 1] = -ONE
    return tuple(tuple(r) for r in rows)


def euclidean(m: int) -> ChartManifold:
    if m < 1:
        raise GeometryError(f"m must be >= 1, got {m}")
    n = 2 * m
    g = tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))
    return ChartManifold(
        name=f"euclidean({m})",
        m=m,
        g_exprs=g,
        j_exprs=_standard_j_exprs(m),
        domain=tuple((-1.0, 1.0) for _ in range(n)),
        expected="FLAT_CN",
    )


def _constant_holomorphic(m: int, c: float, name: str, half_width: float, expected: str) -> ChartManifold:
    """g = I/w - k (p p^T + Jp (Jp)^T)/w^2 with k = c/4, w = 1 + k|p|^2."""
    n = 2 * m
    k = c / 4.0
    v = [Var(i + 1) for i in range(n)]
    s = _sum(vi * vi for vi in v)
    w = ONE + Num(k) * s if k > 0 else ONE - Num(-k) * s
    w2 = w * w
    # q = J p: q[2t] = -y_t, q[2t+1] = x_t, stored as (sign, index)
    q = []
    for t in range(m):
        q.append((-1, 2 * t + 1))
        q.append((1, 2 * t))
    g = [[None] * n for _ in range(n)]
    for a in range(n):
        for b in range(a, n):
            mono: dict = {}
            for key, coef in (((a, b), 1), ((q[a][1], q[b][1]), q[a][0] * q[b][0])):
                key = tuple(sorted(key))
                mono[key] = mono.get(key, 0) + coef
            pairs = [(coef, v[i] * v[j]) for (i, j), coef in sorted(mono.items()) if coef]
            corr = Num(abs(k)) * _signed_sum(pairs) / w2 if pairs else None
            if a == b:
                entry = ONE / w - corr if k > 0 else ONE / w + corr
            elif corr is None:
                entry = ZERO
            else:
                entry = -corr if k > 0 else corr
            g[a][b] = g[b][a] = entry
    return ChartManifold(
        name=name,
        m=m,
        g_exprs=tuple(tuple(r) for r in g),
        j_exprs=_standard_j_exprs(m),
        domain=tuple((-half_width, half_width) for _ in range(n)),
        expected=expected,
    )


def fubini_study(m: int, c: float = 4.0) -> ChartManifold:
    """Affine chart of CP^m with constant holomorphic sectional curvature ``c`` (g = I at the origin)."""
    if m < 1:
        raise GeometryError(f"m must be >= 1, got {m}")
    if not c > 0:
        raise GeometryError(f"fubini_study needs c > 0, got {c}")
    return _constant_holomorphic(m, float(c), f"fubini_study({m},{c:g})", 1.0, "CPN")


def bergman(m: int, c: float = -4.0) -> ChartManifold:
    """Ball model of CD^m with constant holomorphic sectional curvature ``c < 0``.

    The domain box sits inside the ball |z|^2 < 4/|c| with 10% margin at the corners.
    """
    if m < 1:
        raise GeometryError(f"m must be >= 1, got {m}")
    if not c < 0:
        raise GeometryError(f"bergman needs c < 0, got {c}")
    radius = math.sqrt(4.0 / -c)
    half = 0.9 * radius / math.sqrt(2 * m)
    return _constant_holomorphic(m, float(c), f"bergman({m},{c:g})", half, "CDN")


def round_s6() -> ChartManifold:
    """Unit S^6 in Im(O), stereographic chart from e7, with J_p X = p x X.

    With s = 1 + |x|^2 the pulled-back structure is
    J^i_j = f[7,j,i] + (2/s) (sum_k x_k f[k,j,i] - f[7,j,i] - x_i sum_k x_k f[7,j,k] - x_j sum_k x_k f[7,k,i]).
    """
    f = structure_constants()
    n = 6
    v = [Var(i + 1) for i in range(n)]
    s = ONE + _sum(vi * vi for vi in v)
    conformal = Num(4.0) / (s * s)
    two_over_s = Num(2.0) / s
    # a_j = sum_k x_k f[7, j, k]
    a = [_signed_sum((f[6, j, k], v[k]) for k in range(n)) for j in range(n)]
    g = tuple(tuple(conformal if i == j else ZERO for j in range(n)) for i in range(n))
    J = [[ZERO] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            const = f[6, j, i]
            pairs = [(f[k, j, i], v[k]) for k in range(n)]
            pairs.append((-const, ONE))
            inner = _signed_sum(pairs)
            # -x_i a_j - x_j * sum_k x_k f[7,k,i] = -x_i a_j + x_j a_i
            bracket = inner - v[i] * a[j] + v[j] * a[i]
            entry = two_over_s * bracket
            if const:
                entry = entry + Num(const) if const > 0 else entry - Num(-const)
            J[i][j] = entry
    return ChartManifold(
        name="round_s6",
        m=3,
        g_exprs=g,
        j_exprs=tuple(tuple(r) for r in J),
        domain=tuple((-0.8, 0.8) for _ in range(n)),
        expected="HYPOTHESIS_FAILED",
    )


def product(A: ChartManifold, B: ChartManifold) -> ChartManifold:
    """Riemannian product with block-diagonal g and J; B's coordinates follow A's."""
    na, nb = A.dim, B.dim
    n = na + nb
    memo: dict = {}

    def shifted(e):
        return shift_vars(e, na, memo)

    def block(ma, mb):
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                if i < na and j < na:
                    row.append(ma[i][j])
                elif i >= na and j >= na:
                    row.append(shifted(mb[i - na][j - na]))
                else:
                    row.append(ZERO)
            rows.append(tuple(row))
        return tuple(rows)

    return ChartManifold(
        name=f"product({A.name},{B.name})",
        m=A.m + B.m,
        g_exprs=block(A.g_exprs, B.g_exprs),
        j_exprs=block(A.j_exprs, B.j_exprs),
        domain=tuple(A.domain) + tuple(B.domain),
        expected=None,
        factors=(A.factors or (na,)) + (B.factors or (nb,)),
    )


MODELS = {
    "euclidean": euclidean,
    "fubini_study": fubini_study,
    "bergman": bergman,
    "round_s6": round_s6,
    "product": product,
}


def build_model(text: str) -> ChartManifold:
    """Build a model from a call expression such as ``product(euclidean(1), fubini_study(2,4))``."""
    import ast

    try:
        tree = ast.parse(text.strip(), mode="eval").body
    except SyntaxError as exc:
        raise ValueError(f"bad model expression {text!r}: {exc.msg}") from None

    def build(node):
        if isinstance(node, ast.Name) and node.id in MODELS:
            return MODELS[node.id]()
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in MODELS:
            args = [build(a) for a in node.args]
            return MODELS[node.func.id](*args)
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
            return -build(node.operand)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        raise ValueError(f"bad model expression {text!r}")

    try:
        return build(tree)
    except TypeError as exc:
        raise ValueError(f"bad model expression {text!r}: {exc}") from None


def closed_form_riemann(g: np.ndarray, J: np.ndarray, c: float) -> np.ndarray:
    """(c/4)(pi1 + pi2): curvature of constant holomorphic sectional curvature c."""
    from .tensors import pi1_tensor, pi2_tensor

    return (c / 4.0) * (pi1_tensor(g) + pi2_tensor(g, J))


def scale_metric(M: ChartManifold, factor: float) -> ChartManifold:
    """Same chart and J with metric multiplied by the constant ``factor`` > 0."""
    if not factor > 0:
        raise GeometryError(f"scale factor must be positive, got {factor}")
    k = Num(float(factor))
    g = tuple(tuple(k * e for e in row) for row in M.g_exprs)
    return ChartManifold(
        name=f"{factor:g}*{M.name}",
        m=M.m,
        g_exprs=g,
        j_exprs=M.j_exprs,
        domain=M.domain,
        expected=M.expected,
        factors=M.factors,
    )
