"""Multivariate truncated Taylor arithmetic (orders 0-3) and expression evaluation.

A :class:`Jet` carries a value and the dense arrays of first, second and third
partial derivatives with respect to the chart coordinates.  Arithmetic
propagates them exactly (up to round-off); nothing here uses finite
differences except :func:`fd_jet`, which is kept as an independent oracle.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .expr import (
    CONSTANTS,
    Add,
    Const,
    Div,
    Expr,
    ExprError,
    Func,
    Mul,
    Neg,
    Num,
    Pow,
    Sub,
    Var,
    is_constant,
    pretty_print,
)


class DomainViolation(ExprError):
    """Expression evaluated outside its real domain."""

    def __init__(self, message: str, node: Expr):
        self.node = node
        try:
            shown = pretty_print(node)
        except ExprError:
            shown = repr(node)
        if len(shown) > 200:
            shown = shown[:197] + "..."
        super().__init__(f"{message} in subexpression {shown}")


@dataclass(frozen=True)
class Jet:
    """Value and partial derivatives up to ``order`` in ``n`` variables."""

    order: int
    value: float
    d1: Optional[np.ndarray] = None  # (n,)
    d2: Optional[np.ndarray] = None  # (n, n)
    d3: Optional[np.ndarray] = None  # (n, n, n)

    @property
    def partials(self):
        return tuple(d for d in (self.d1, self.d2, self.d3)[: self.order])


def _sym3(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """A_ij B_k + A_ik B_j + A_jk B_i."""
    t = a[:, :, None] * b[None, None, :]
    return t + t.transpose(0, 2, 1) + t.transpose(2, 0, 1)


class _Ops:
    """Raw jet tuples (v, d1, d2, d3) with truncation at ``order``."""

    def __init__(self, n: int, order: int):
        self.n = n
        self.order = order

    def const(self, c: float):
        n, k = self.n, self.order
        z1 = np.zeros(n) if k >= 1 else None
        z2 = np.zeros((n, n)) if k >= 2 else None
        z3 = np.zeros((n, n, n)) if k >= 3 else None
        return (float(c), z1, z2, z3)

    def var(self, i: int, c: float):
        v, d1, d2, d3 = self.const(c)
        if d1 is not None:
            d1[i] = 1.0
        return (v, d1, d2, d3)

    def add(self, a, b, sign=1.0):
        out = [a[0] + sign * b[0]]
        for j in range(1, 4):
            out.append(None if a[j] is None else a[j] + sign * b[j])
        return tuple(out)

    def scale(self, a, s: float):
        return tuple(None if t is None else s * t for t in a)

    def mul(self, a, b):
        u, u1, u2, u3 = a
        v, v1, v2, v3 = b
        k = self.order
        w1 = u1 * v + u * v1 if k >= 1 else None
        w2 = u2 * v + u * v2 + np.outer(u1, v1) + np.outer(v1, u1) if k >= 2 else None
        w3 = u3 * v + u * v3 + _sym3(u2, v1) + _sym3(v2, u1) if k >= 3 else None
        return (u * v, w1, w2, w3)

    def compose(self, a, f0, f1, f2, f3):
        """Chain rule for h = f(u) given f and its first three derivatives at u."""
        u, u1, u2, u3 = a
        k = self.order
        h1 = f1 * u1 if k >= 1 else None
        h2 = f2 * np.outer(u1, u1) + f1 * u2 if k >= 2 else None
        if k >= 3:
            h3 = (
                f3 * (u1[:, None, None] * u1[None, :, None] * u1[None, None, :])
                + f2 * _sym3(u2, u1)
                + f1 * u3
            )
        else:
            h3 = None
        return (f0, h1, h2, h3)


@lru_cache(maxsize=None)
def _canonical_index(n: int):
    idx2 = np.empty((n, n), dtype=np.intp)
    for i, j in itertools.product(range(n), repeat=2):
        a, b = sorted((i, j))
        idx2[i, j] = a * n + b
    idx3 = np.empty((n, n, n), dtype=np.intp)
    for i, j, k in itertools.product(range(n), repeat=3):
        a, b, c = sorted((i, j, k))
        idx3[i, j, k] = (a * n + b) * n + c
    return idx2, idx3


def _symmetrize(raw, order: int, n: int) -> Jet:
    v, d1, d2, d3 = raw
    idx2, idx3 = _canonical_index(n)
    if d2 is not None:
        d2 = d2.ravel()[idx2]
    if d3 is not None:
        d3 = d3.ravel()[idx3]
    return Jet(order, float(v), d1, d2, d3)


def _univariate(name: str, u: float, node: Expr):
    if name == "sin":
        s, c = math.sin(u), math.cos(u)
        return s, c, -s, -c
    if name == "cos":
        s, c = math.sin(u), math.cos(u)
        return c, -s, -c, s
    if name == "tan":
        if math.cos(u) == 0.0:
            raise DomainViolation("tan at a pole", node)
        t = math.tan(u)
        q = 1.0 + t * t
        return t, q, 2.0 * t * q, q * (2.0 + 6.0 * t * t)
    if name == "exp":
        ex = math.exp(u)
        return ex, ex, ex, ex
    if name == "log":
        if u <= 0.0:
            raise DomainViolation(f"log of non-positive value {u!r}", node)
        return math.log(u), 1.0 / u, -1.0 / u**2, 2.0 / u**3
    if name == "sqrt":
        if u < 0.0:
            raise DomainViolation(f"sqrt of negative value {u!r}", node)
        r = math.sqrt(u)
        if r == 0.0:
            return 0.0, math.inf, -math.inf, math.inf
        return r, 0.5 / r, -0.25 / (r * u), 0.375 / (r * u * u)
    if name == "atan":
        q = 1.0 + u * u
        return math.atan(u), 1.0 / q, -2.0 * u / q**2, (6.0 * u * u - 2.0) / q**3
    raise ExprError(f"unknown function {name!r}")


def _power_derivs(u: float, p: float, order: int, node: Expr):
    integral = float(p).is_integer()
    if u < 0.0 and not integral:
        raise DomainViolation(f"non-integer power {p!r} of negative value {u!r}", node)
    out = []
    coeff = 1.0
    for k in range(order + 1):
        if coeff == 0.0:
            out.append(0.0)
        elif u == 0.0 and p - k < 0:
            raise DomainViolation(f"power {p!r} singular at zero", node)
        else:
            out.append(coeff * u ** (p - k))
        coeff *= p - k
    out.extend([0.0] * (4 - len(out)))
    return out


class _Evaluator:
    def __init__(self, point: np.ndarray, order: int):
        self.point = point
        self.n = len(point)
        self.order = order
        self.ops = _Ops(self.n, order)
        self.memo: dict = {}

    def __call__(self, e: Expr):
        key = id(e)
        hit = self.memo.get(key)
        if hit is not None:
            return hit[1]
        out = self._eval(e)
        # keep e alive so id() stays unique for the evaluator lifetime
        self.memo[key] = (e, out)
        return out

    def _eval(self, e: Expr):
        ops = self.ops
        if isinstance(e, Num):
            return ops.const(e.value)
        if isinstance(e, Const):
            return ops.const(CONSTANTS[e.name])
        if isinstance(e, Var):
            if e.index > self.n:
                raise ExprError(f"variable x{e.index} out of range for dimension {self.n}")
            return ops.var(e.index - 1, self.point[e.index - 1])
        if isinstance(e, Neg):
            return ops.scale(self(e.arg), -1.0)
        if isinstance(e, Add):
            return ops.add(self(e.left), self(e.right))
        if isinstance(e, Sub):
            return ops.add(self(e.left), self(e.right), -1.0)
        if isinstance(e, Mul):
            return ops.mul(self(e.left), self(e.right))
        if isinstance(e, Div):
            num = self(e.left)
            den = self(e.right)
            v = den[0]
            if v == 0.0:
                raise DomainViolation("division by zero", e)
            recip = ops.compose(den, 1.0 / v, -1.0 / v**2, 2.0 / v**3, -6.0 / v**4)
            return ops.mul(num, recip)
        if isinstance(e, Func):
            a = self(e.arg)
            derivs = _univariate(e.name, a[0], e)
            if not all(math.isfinite(d) for d in derivs[: self.order + 1]):
                raise DomainViolation(f"{e.name} not differentiable at {a[0]!r}", e)
            return ops.compose(a, *derivs)
        if isinstance(e, Pow):
            base = self(e.base)
            if is_constant(e.exponent):
                p = self(e.exponent)[0]
                return ops.compose(base, *_power_derivs(base[0], p, self.order, e))
            if base[0] <= 0.0:
                raise DomainViolation("variable exponent needs a positive base", e)
            lg = ops.compose(base, *_univariate("log", base[0], e))
            prod = ops.mul(self(e.exponent), lg)
            return ops.compose(prod, *_univariate("exp", prod[0], e))
        raise ExprError(f"unknown node {e!r}")


def _check_order(order: int) -> None:
    if order not in (0, 1, 2, 3):
        raise ValueError(f"jet order must be 0..3, got {order}")


def eval_jet(e: Expr, point: Sequence[float], order: int = 0) -> Jet:
    """Value and exact partial derivatives of ``e`` at ``point`` up to ``order``."""
    return eval_jets([e], point, order)[0]


def eval_jets(exprs: Sequence[Expr], point: Sequence[float], order: int = 0) -> list:
    """Evaluate several expressions with a shared subexpression cache."""
    _check_order(order)
    pt = np.asarray(point, dtype=float)
    ev = _Evaluator(pt, order)
    out = []
    for e in exprs:
        raw = ev(e)
        if not all(np.all(np.isfinite(t)) for t in raw[: order + 1] if t is not None):
            raise DomainViolation("non-finite result", e)
        out.append(_symmetrize(raw, order, len(pt)))
    return out


def evaluate(e: Expr, point: Sequence[float]) -> float:
    return eval_jet(e, point, 0).value


def fd_jet(e: Expr, point: Sequence[float], order: int = 1, step: Optional[float] = None) -> Jet:
    """Central finite-difference jet.  Only for cross-checking :func:`eval_jet`."""
    _check_order(order)
    pt = np.asarray(point, dtype=float)
    n = len(pt)
    f = lambda q: evaluate(e, q)  # noqa: E731
    eye = np.eye(n)
    v = f(pt)
    d1 = d2 = d3 = None
    if order >= 1:
        h = step or 1e-5
        d1 = np.array([(f(pt + h * eye[i]) - f(pt - h * eye[i])) / (2 * h) for i in range(n)])
    if order >= 2:
        h = step or 1e-4
        d2 = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                a, b = h * eye[i], h * eye[j]
                d2[i, j] = (f(pt + a + b) - f(pt + a - b) - f(pt - a + b) + f(pt - a - b)) / (4 * h * h)
    if order >= 3:
        h = step or 2e-3
        d3 = np.empty((n, n, n))
        signs = list(itertools.product((1, -1), repeat=3))
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    acc = 0.0
                    for s in signs:
                        acc += s[0] * s[1] * s[2] * f(pt + h * (s[0] * eye[i] + s[1] * eye[j] + s[2] * eye[k]))
                    d3[i, j, k] = acc / (8 * h**3)
    return Jet(order, v, d1, d2, d3)
