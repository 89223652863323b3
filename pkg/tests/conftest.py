import functools

import numpy as np
import pytest

from ahlab.expr import Add, Atan, as_expr, Cos, Div, Exp, Log, Mul, Num, Pow, Sin, Sqrt, Sub, Var
from ahlab.geometry import ChartManifold
from ahlab.models import bergman, euclidean, fubini_study, product, round_s6


@functools.lru_cache(maxsize=None)
def model(name: str) -> ChartManifold:
    builders = {
        "euclidean3": lambda: euclidean(3),
        "fs2": lambda: fubini_study(2, 4),
        "fs3": lambda: fubini_study(3, 4),
        "bergman3": lambda: bergman(3, -4),
        "s6": round_s6,
        "fs1xfs2": lambda: product(fubini_study(1, 4), fubini_study(2, 4)),
        "e1xfs2": lambda: product(euclidean(1), fubini_study(2, 4)),
    }
    return builders[name]()


ALL_MODELS = ("euclidean3", "fs2", "fs3", "bergman3", "s6", "fs1xfs2", "e1xfs2")


@pytest.fixture(params=ALL_MODELS)
def any_model(request):
    return model(request.param)


def random_expr(rng: np.random.Generator, nvars: int, depth: int = 3):
    """Random smooth expression, finite with bounded derivatives on [-1, 1]^n."""
    if depth == 0 or rng.random() < 0.2:
        if rng.random() < 0.7:
            return Var(int(rng.integers(1, nvars + 1)))
        return as_expr(float(np.round(rng.uniform(-2, 2), 3)))
    kind = int(rng.integers(0, 9))
    a = random_expr(rng, nvars, depth - 1)
    if kind == 0:
        return Add(a, random_expr(rng, nvars, depth - 1))
    if kind == 1:
        return Sub(a, random_expr(rng, nvars, depth - 1))
    if kind == 2:
        return Mul(a, random_expr(rng, nvars, depth - 1))
    if kind == 3:
        # denominator bounded away from zero
        return Div(a, Add(Num(2.5), Sin(random_expr(rng, nvars, depth - 1))))
    if kind == 4:
        return Sin(a)
    if kind == 5:
        return Cos(a)
    if kind == 6:
        return Atan(a)
    if kind == 7:
        return Exp(Sin(a))
    inner = Add(Num(1.0), Mul(a, a))
    return Log(inner) if rng.random() < 0.5 else Sqrt(inner) if rng.random() < 0.5 else Pow(inner, Num(1.5))


def perturbed_metric(rng: np.random.Generator, m: int, eps: float = 0.08) -> ChartManifold:
    """Identity metric plus a small random symmetric expression perturbation.

    J is the standard structure and is generally not compatible with g.
    """
    n = 2 * m
    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            pert = Mul(Num(eps), Sin(random_expr(rng, n, 2)))
            rows[i][j] = rows[j][i] = Add(Num(1.0), pert) if i == j else pert
    J = [[Num(0.0)] * n for _ in range(n)]
    for k in range(m):
        J[2 * k + 1][2 * k] = Num(1.0)
        J[2 * k][2 * k + 1] = Num(-1.0)
    return ChartManifold(
        name="perturbed",
        m=m,
        g_exprs=tuple(tuple(r) for r in rows),
        j_exprs=tuple(tuple(r) for r in J),
        domain=tuple((-0.5, 0.5) for _ in range(n)),
    )


def synthetic_package(R, J, G=None, point=None):
    """CurvaturePackage with g = I, given R and nabla_j, and vanishing derivatives of R and S."""
    from ahlab.geometry import CurvaturePackage, frame_contractions
    from ahlab.tensors import adapted_frame

    n = R.shape[0]
    g = np.eye(n)
    E = adapted_frame(g, J)
    S, S_star, tau, tau_star = frame_contractions(R, J, E)
    return CurvaturePackage(
        point=np.zeros(n) if point is None else np.asarray(point, float),
        g=g,
        J=J,
        ginv=g,
        frame=E,
        adapted=True,
        gamma=np.zeros((n, n, n)),
        nabla_j=np.zeros((n, n, n)) if G is None else G,
        riemann=R,
        ricci=0.5 * (S + S.T),
        ricci_star=S_star,
        tau=tau,
        tau_star=tau_star,
        nabla_r=np.zeros((n,) * 5),
        nabla_s=np.zeros((n,) * 3),
        dtau=np.zeros(n),
    )
