import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahlab.config import RunConfig
from ahlab.geometry import curvature_package
from ahlab.identities import apply_j, class_residuals
from ahlab.models import bergman, euclidean, fubini_study, product
from ahlab.sectional import (
    Outcome,
    antiholomorphic_constancy,
    einstein_check,
    holomorphic_constancy,
    parallel_ricci_check,
    ricci_eigenframe,
    schur_global_check,
    sectional,
    sectional_from,
    theorem_verdict,
    verdict_from_packages,
)
from ahlab.tensors import GeometryError, antiholomorphic_plane_sample, frame_j, pi1_tensor

from conftest import model, perturbed_metric, synthetic_package

FAST = RunConfig(points_per_manifold=6, samples_per_point=40)


def pts(M, count, seed=0):
    return M.sample_points(np.random.default_rng(seed), count)


def almost_kaehler_nabla_j(m, rng, sweeps=200):
    """Random nonzero G with the algebraic symmetries of nabla J on an almost Kaehler manifold.

    Alternating projections onto: skew in the last two slots, anti-J-invariance
    G(x, Jy, Jz) = -G(x, y, z), and vanishing cyclic sum.
    """
    n = 2 * m
    J = frame_j(m)
    G = rng.standard_normal((n, n, n))
    perms = list(itertools.permutations(range(3)))
    signs = [np.linalg.det(np.eye(3)[list(p)]) for p in perms]
    for _ in range(sweeps):
        G = 0.5 * (G - G.transpose(0, 2, 1))
        G = 0.5 * (G - apply_j(G, J, (1, 2)))
        alt = sum(s * G.transpose(p) for s, p in zip(signs, perms)) / 6.0
        G = G - alt
    return J, G / np.abs(G).max()


def test_sectional_examples():
    p = np.full(6, 0.2)
    rng = np.random.default_rng(0)
    x, y = rng.standard_normal((2, 6))
    assert sectional(euclidean(3), p, x, y) == 0.0
    M = model("s6")
    for q in pts(M, 5):
        x, y = rng.standard_normal((2, 6))
        assert sectional(M, q, x, y) == pytest.approx(1.0, abs=1e-6)
    M = model("fs2")
    for q in pts(M, 5):
        pkg = curvature_package(M, q)
        x = rng.standard_normal(4)
        assert sectional(pkg, None, x, pkg.J @ x) == pytest.approx(4.0, abs=1e-6)
        a, b = antiholomorphic_plane_sample(pkg.g, pkg.J, rng)
        assert sectional(pkg, None, a, b) == pytest.approx(1.0, abs=1e-6)


def test_sectional_degenerate_plane():
    with pytest.raises(GeometryError):
        sectional(euclidean(2), np.zeros(4), np.ones(4), 2 * np.ones(4))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_sectional_basis_invariance(seed):
    rng = np.random.default_rng(seed)
    pkg = curvature_package(model("fs2"), pts(model("fs2"), 1, seed % 97)[0])
    x, y = rng.standard_normal((2, 4))
    A = rng.standard_normal((2, 2))
    if abs(np.linalg.det(A)) < 0.1:
        A = A + np.eye(2)
    u, v = A[0, 0] * x + A[0, 1] * y, A[1, 0] * x + A[1, 1] * y
    k1 = sectional_from(pkg.riemann, pkg.g, x, y)
    k2 = sectional_from(pkg.riemann, pkg.g, u, v)
    assert k2 == pytest.approx(k1, rel=1e-9, abs=1e-9)


def test_constancy_fubini_study():
    M = model("fs3")
    P = pts(M, 5)
    anti = antiholomorphic_constancy(M, P, 100)
    holo = holomorphic_constancy(M, P, 100)
    assert anti.estimate == pytest.approx(1.0, abs=1e-6) and anti.spread <= 1e-6
    assert holo.estimate == pytest.approx(4.0, abs=1e-6)
    assert anti.sample_count == 500 and len(anti.per_point) == 5
    vals = [e for _, e, _ in anti.per_point]
    assert min(vals) - 1e-12 <= anti.estimate <= max(vals) + 1e-12


def test_constancy_product_spread():
    M = model("fs1xfs2")
    anti = antiholomorphic_constancy(M, pts(M, 5), 100)
    assert anti.spread >= 0.5
    assert anti.pointwise_spread >= 0.5


def test_constancy_euclidean():
    M = euclidean(3)
    for stats in (antiholomorphic_constancy(M, pts(M, 3), 50), holomorphic_constancy(M, pts(M, 3), 50)):
        assert stats.estimate == 0.0 and stats.spread <= 1e-12


def test_constancy_dimension_error():
    with pytest.raises(GeometryError):
        antiholomorphic_constancy(fubini_study(1, 4), [np.zeros(2)], 10)


def test_constancy_deterministic():
    M = model("bergman3")
    P = pts(M, 3)
    a = antiholomorphic_constancy(M, P, 30, np.random.default_rng(5))
    b = antiholomorphic_constancy(M, P, 30, np.random.default_rng(5))
    assert a.to_dict() == b.to_dict()


def test_schur():
    assert schur_global_check(model("fs3"), pts(model("fs3"), 20), 20) <= 1e-6
    assert schur_global_check(euclidean(3), pts(euclidean(3), 20), 20) == 0.0
    M = model("bergman3")
    stats = antiholomorphic_constancy(M, pts(M, 20), 20)
    assert schur_global_check(stats) <= 1e-6
    assert stats.estimate == pytest.approx(-1.0, abs=1e-6)


def check_eigenframe(pkg, ef):
    E = ef.frame
    m = pkg.m
    assert np.abs(E.T @ pkg.g @ E - np.eye(2 * m)).max() <= 1e-10
    assert np.abs(pkg.J @ E[:, :m] - E[:, m:]).max() <= 1e-10
    S = E.T @ pkg.ricci @ E
    lam = np.array(ef.lambdas)
    assert np.abs(S[:m, :m] - np.diag(lam)).max() <= 1e-8
    assert np.abs(S[m:, m:] - np.diag(lam)).max() <= 1e-8
    assert list(lam) == sorted(lam)


def test_eigenframe_examples():
    for M, expected in (
        (model("fs3"), [8.0, 8.0, 8.0]),
        (euclidean(3), [0.0, 0.0, 0.0]),
        (model("e1xfs2"), [0.0, 6.0, 6.0]),
        (model("bergman3"), [-8.0, -8.0, -8.0]),
    ):
        for p in pts(M, 3):
            pkg = curvature_package(M, p)
            ef = ricci_eigenframe(pkg)
            assert np.allclose(ef.lambdas, expected, atol=1e-6)
            check_eigenframe(pkg, ef)


def test_eigenframe_generic_hermitian_ricci():
    # J-invariant S with distinct eigenvalues: lambdas are the eigenvalues, each doubled
    rng = np.random.default_rng(3)
    m = 3
    J = frame_j(m)
    h = rng.standard_normal((6, 6))
    h = h + h.T
    h = 0.5 * (h + J.T @ h @ J)
    eye = np.eye(6)
    # Kulkarni-Nomizu product h . g has Ricci (n - 2) h + tr(h) g
    R = (
        np.einsum("xu,yz->xyzu", h, eye) + np.einsum("yz,xu->xyzu", h, eye)
        - np.einsum("xz,yu->xyzu", h, eye) - np.einsum("yu,xz->xyzu", h, eye)
    )
    pkg = synthetic_package(R, J)
    ef = ricci_eigenframe(pkg)
    check_eigenframe(pkg, ef)
    ev = np.linalg.eigvalsh(pkg.ricci)
    assert np.allclose(np.repeat(ef.lambdas, 2), ev, atol=1e-10)


def test_eigenframe_commutator_error():
    J = frame_j(2)
    h = np.diag([1.0, 2.0, 3.0, 5.0])  # not J-invariant
    eye = np.eye(4)
    R = (
        np.einsum("xu,yz->xyzu", h, eye) + np.einsum("yz,xu->xyzu", h, eye)
        - np.einsum("xz,yu->xyzu", h, eye) - np.einsum("yu,xz->xyzu", h, eye)
    )
    with pytest.raises(GeometryError, match="commute"):
        ricci_eigenframe(synthetic_package(R, J))


@pytest.mark.parametrize("m", [2, 3])
def test_einstein_and_parallel_fubini_study(m):
    M = fubini_study(m, 4)
    P = pts(M, 5)
    e = einstein_check(M, P)
    assert e.passed and e.mu == pytest.approx(2 * (m + 1), abs=1e-8)
    assert parallel_ricci_check(M, P)[0]


def test_einstein_fails_parallel_passes_on_product():
    M = product(fubini_study(1, 4), euclidean(2))
    P = pts(M, 5)
    assert not einstein_check(M, P).passed
    ok, res = parallel_ricci_check(M, P)
    assert ok and res <= 1e-6


def test_einstein_s6():
    e = einstein_check(model("s6"), pts(model("s6"), 4))
    assert e.passed and e.mu == pytest.approx(5.0, abs=1e-8)


@pytest.mark.parametrize(
    "M, outcome, nu",
    [
        (euclidean(3), Outcome.FLAT_CN, 0.0),
        (fubini_study(3, 4), Outcome.CPN, 1.0),
        (bergman(3, -4), Outcome.CDN, -1.0),
        (fubini_study(2, 4), Outcome.CPN, 1.0),
        (bergman(2, -4), Outcome.CDN, -1.0),
        (euclidean(2), Outcome.FLAT_CN, 0.0),
        (fubini_study(3, 2), Outcome.CPN, 0.5),
    ],
)
def test_verdict_classified(M, outcome, nu):
    v = theorem_verdict(M, FAST)
    assert v.outcome == outcome, v.reasons
    assert v.nu == pytest.approx(nu, abs=1e-6)
    assert v.classified


@pytest.mark.parametrize(
    "M, reason",
    [
        (product(fubini_study(1, 4), fubini_study(2, 4)), "pointwise constant"),
        (product(euclidean(1), fubini_study(2, 4)), "pointwise constant"),
        (product(fubini_study(1, 4), fubini_study(1, 4)), "pointwise constant"),
        (model("s6"), "almost Kaehler"),
    ],
)
def test_verdict_hypothesis_failed(M, reason):
    v = theorem_verdict(M, FAST)
    assert v.outcome == Outcome.HYPOTHESIS_FAILED
    assert any(reason in r for r in v.reasons)


def test_verdict_product_reports_factor_constants():
    v = theorem_verdict(product(fubini_study(1, 4), fubini_study(2, 4)), FAST)
    assert np.allclose(v.mu_list, [4.0, 6.0], atol=1e-8)
    assert v.evidence["antiholomorphic"]["pointwise_spread"] >= 0.5


def test_verdict_dim2_indeterminate():
    v = theorem_verdict(fubini_study(1, 4), FAST)
    assert v.outcome == Outcome.INDETERMINATE and not v.classified


def test_verdict_invariants():
    for M in (euclidean(3), fubini_study(3, 4), bergman(3, -4)):
        v = theorem_verdict(M, FAST)
        if v.outcome == Outcome.CPN:
            assert v.nu > 0
        if v.outcome == Outcome.CDN:
            assert v.nu < 0
        if v.outcome == Outcome.FLAT_CN:
            assert abs(v.nu) <= FAST.threshold("flat")


def synthetic_ak(f, m=3, seed=0, count=4):
    rng = np.random.default_rng(seed)
    J, G = almost_kaehler_nabla_j(m, rng)
    R = f * pi1_tensor(np.eye(2 * m))
    return [synthetic_package(R, J, G, point=[0.1 * k] * (2 * m)) for k in range(count)], G


def test_synthetic_nabla_j_is_almost_kaehler_not_kaehler():
    pkgs, G = synthetic_ak(-0.5)
    rep = class_residuals(pkgs[0])
    assert rep["AK"].residual <= 1e-12
    assert rep["K"].residual >= 1e-2
    assert rep["QK"].residual <= 1e-12  # almost Kaehler is quasi Kaehler
    assert not rep["NK"].passed


@pytest.mark.parametrize("f", [-0.5, -2.0])
def test_verdict_const_neg_6d_candidate(f):
    pkgs, _ = synthetic_ak(f)
    v = verdict_from_packages(pkgs, FAST)
    assert v.outcome == Outcome.CONST_NEG_6D_CANDIDATE, v.reasons
    assert v.nu == pytest.approx(f, abs=1e-12)
    assert v.evidence["form_fit"]["f"] == pytest.approx(f, abs=1e-12)
    assert abs(v.evidence["form_fit"]["h"]) <= 1e-12


def test_verdict_non_kaehler_positive_curvature_indeterminate():
    pkgs, _ = synthetic_ak(0.5)
    assert verdict_from_packages(pkgs, FAST).outcome == Outcome.INDETERMINATE


def test_verdict_non_kaehler_dim8_indeterminate():
    pkgs, _ = synthetic_ak(-0.5, m=4)
    assert verdict_from_packages(pkgs, FAST).outcome == Outcome.INDETERMINATE


def test_verdict_non_kaehler_dim4_indeterminate():
    pkgs, G = synthetic_ak(-0.5, m=2)
    assert np.abs(G).max() > 0
    assert verdict_from_packages(pkgs, FAST).outcome == Outcome.INDETERMINATE


def test_verdict_incompatible_j():
    M = perturbed_metric(np.random.default_rng(1), 3)
    assert theorem_verdict(M, FAST).outcome == Outcome.HYPOTHESIS_FAILED


def test_verdict_deterministic():
    a = theorem_verdict(model("bergman3"), FAST).to_dict()
    b = theorem_verdict(model("bergman3"), FAST).to_dict()
    assert a == b
