import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ahlab.config import DEFAULT_THRESHOLDS
from ahlab.geometry import curvature_package
from ahlab.identities import (
    SUITE_NAMES,
    ResidualReport,
    ah_residuals,
    ak2_identities,
    bianchi_residuals,
    class_residuals,
    const_antihol_identities,
    curvature_form_fit,
    fit_form,
    full_suite,
    symmetry_residuals,
)
from ahlab.models import euclidean, fubini_study, scale_metric
from ahlab.sectional import antiholomorphic_constancy, holomorphic_constancy
from ahlab.tensors import pi1_tensor, pi2_tensor, psi_tensor, standard_j

from conftest import ALL_MODELS, model, perturbed_metric, synthetic_package

P6 = np.array([0.1, -0.2, 0.3, 0.05, -0.15, 0.25])
KAEHLER = ("euclidean3", "fs2", "fs3", "bergman3", "fs1xfs2", "e1xfs2")


def points(name, count=4, seed=0):
    M = model(name)
    return M, M.sample_points(np.random.default_rng(seed), count)


def test_report_contract():
    rep = class_residuals(model("fs3"), P6)
    assert isinstance(rep, ResidualReport)
    for name, r in rep.items():
        assert r.residual >= 0
        assert r.passed == (r.residual <= r.threshold)
        assert r.threshold == DEFAULT_THRESHOLDS[name]
    assert rep["K"].argument_count == 216
    assert rep.to_dict()["QK"]["argument_count"] == 36
    custom = class_residuals(model("s6"), P6, thresholds={"K": 10.0})
    assert custom["K"].passed and custom["K"].threshold == 10.0


def test_class_residuals_euclidean():
    rep = class_residuals(euclidean(3), P6)
    assert all(r.residual <= 1e-14 for r in rep.values())


def test_class_residuals_s6():
    M, pts = points("s6")
    for p in pts:
        rep = class_residuals(M, p)
        assert rep["NK"].residual <= 1e-7
        assert rep["QK"].residual <= 1e-7
        assert rep["K"].residual >= 1e-2
        # nearly Kaehler and almost Kaehler together force Kaehler, so the cyclic sum cannot vanish
        assert rep["AK"].residual >= 1e-2


@pytest.mark.parametrize("name", KAEHLER)
def test_class_residuals_kaehler(name):
    M, pts = points(name, 3)
    for p in pts:
        assert class_residuals(M, p).passed


@pytest.mark.parametrize("name", KAEHLER)
def test_ah_residuals_kaehler(name):
    M, pts = points(name, 3)
    for p in pts:
        rep = ah_residuals(M, p)
        assert all(r.residual <= 1e-7 for r in rep.values())


def test_ah_residuals_s6():
    M, pts = points("s6")
    for p in pts:
        rep = ah_residuals(M, p)
        assert rep["AH3"].residual <= 1e-7
        assert rep["AH2"].residual <= 1e-7
        assert rep["AH1"].residual >= 1e-2


def test_ah_residuals_euclidean_zero():
    rep = ah_residuals(euclidean(2), np.zeros(4))
    assert all(r.residual == 0.0 for r in rep.values())


@pytest.mark.parametrize("name", ALL_MODELS)
def test_bianchi_models(name):
    M, pts = points(name, 3)
    for p in pts:
        rep = bianchi_residuals(M, p)
        assert all(r.residual <= 1e-6 for r in rep.values())
    if name == "euclidean3":
        assert all(r.residual == 0.0 for r in rep.values())


@pytest.mark.parametrize("seed", range(6))
def test_bianchi_universal_on_perturbed_metrics(seed):
    rng = np.random.default_rng(seed)
    M = perturbed_metric(rng, 2 + seed % 2)
    for p in M.sample_points(rng, 3):
        pkg = curvature_package(M, p)
        assert not pkg.adapted
        assert np.abs(pkg.riemann).max() > 1e-3  # not accidentally flat
        rep = bianchi_residuals(pkg)
        assert rep.passed, rep.to_dict()
        assert symmetry_residuals(pkg).passed


@pytest.mark.parametrize("name", KAEHLER)
def test_ak2_kaehler(name):
    M, pts = points(name, 3)
    for p in pts:
        rep = ak2_identities(M, p)
        assert rep["eq_2_3"].residual <= 1e-7
        assert rep["eq_2_4"].residual <= 1e-6


def test_ak2_euclidean_zero():
    rep = ak2_identities(euclidean(3), P6)
    assert rep["eq_2_3"].residual == 0.0 and rep["eq_2_4"].residual == 0.0


def test_ak2_s6_reported():
    rep = ak2_identities(model("s6"), P6)
    assert np.isfinite(rep["eq_2_3"].residual) and np.isfinite(rep["eq_2_4"].residual)
    assert rep["eq_2_3"].argument_count == 6**4


def test_const_antihol_fubini_study():
    rep = const_antihol_identities(model("fs3"), P6, nu=1.0)
    assert all(r.residual <= 1e-6 for r in rep.values()), rep.to_dict()


def test_const_antihol_bergman():
    M, pts = points("bergman3", 3)
    for p in pts:
        rep = const_antihol_identities(M, p, nu=-1.0)
        assert all(r.residual <= 1e-6 for r in rep.values())


def test_const_antihol_s6():
    rep = const_antihol_identities(model("s6"), P6, nu=1.0)
    assert rep["eq_2_5"].residual <= 1e-6
    assert rep["eq_2_6"].residual <= 1e-6


def test_const_antihol_euclidean():
    rep = const_antihol_identities(euclidean(3), P6, nu=0.0)
    assert all(r.residual == 0.0 for r in rep.values())


def test_const_antihol_wrong_nu_fails():
    assert not const_antihol_identities(model("fs3"), P6, nu=0.5)["eq_2_5"].passed


def test_form_fit_examples():
    fit = curvature_form_fit(euclidean(3), P6)
    assert (fit.f, fit.h, fit.residual) == (0.0, 0.0, 0.0)
    fit = curvature_form_fit(model("s6"), P6)
    assert fit.f == pytest.approx(1.0, abs=1e-6) and abs(fit.h) <= 1e-6 and fit.residual <= 1e-6
    fit = curvature_form_fit(model("fs3"), P6)
    assert fit.f == pytest.approx(1.0, abs=1e-6) and fit.h == pytest.approx(1.0, abs=1e-6)
    assert fit.residual <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.integers(2, 4))
def test_form_fit_recovers_coefficients(f, h, m):
    J = np.block([[np.zeros((m, m)), -np.eye(m)], [np.eye(m), np.zeros((m, m))]])
    eye = np.eye(2 * m)
    fit = fit_form(f * pi1_tensor(eye) + h * pi2_tensor(eye, J), J)
    assert fit.f == pytest.approx(f, abs=1e-12) and fit.h == pytest.approx(h, abs=1e-12)
    assert fit.residual <= 1e-12


@pytest.mark.parametrize("name", ALL_MODELS)
def test_inclusion_chain(name):
    M, pts = points(name, 5, seed=8)
    for p in pts:
        rep = class_residuals(M, p)
        if rep["K"].passed:
            assert rep["NK"].passed and rep["AK"].passed
        if rep["NK"].passed:
            assert rep["QK"].passed


@pytest.mark.parametrize("name", ALL_MODELS)
def test_decomposition_implies_ah2_on_models(name):
    M, pts = points(name, 5, seed=1)
    rng = np.random.default_rng(1)
    pkgs = [curvature_package(M, p) for p in pts]
    nu = antiholomorphic_constancy(pkgs, samples_per_point=20, rng=rng).estimate
    for pkg in pkgs:
        if const_antihol_identities(pkg, nu=nu)["eq_2_5"].passed:
            assert ah_residuals(pkg)["AH2"].passed


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4), st.floats(-3, 3))
def test_decomposition_implies_ah2_synthetic(seed, m, nu):
    """Tensors of the decomposed form satisfy identity 2) for any J-invariant symmetric S."""
    rng = np.random.default_rng(seed)
    n = 2 * m
    J = standard_j(m)
    A = rng.standard_normal((n, n))
    S = A + A.T
    S = 0.5 * (S + J.T @ S @ J)
    eye = np.eye(n)
    R = psi_tensor(S, eye, J) / 6 + nu * pi1_tensor(eye) - (2 * m - 1) / 3 * nu * pi2_tensor(eye, J)
    pkg = synthetic_package(R, J)
    assert ah_residuals(pkg)["AH2"].residual <= 1e-10 * max(1.0, np.abs(R).max())


@pytest.mark.parametrize("lam2", [0.25, 4.0, 9.0])
def test_scale_covariance(lam2):
    base = fubini_study(2, 4)
    scaled = scale_metric(base, lam2)
    p = np.array([0.2, -0.1, 0.3, 0.15])
    a, b = curvature_package(base, p), curvature_package(scaled, p)
    fa, fb = curvature_form_fit(a), curvature_form_fit(b)
    assert fb.f == pytest.approx(fa.f / lam2, abs=1e-9)
    assert fb.h == pytest.approx(fa.h / lam2, abs=1e-9)
    for stats in (antiholomorphic_constancy, holomorphic_constancy):
        sa = stats([a], samples_per_point=20, rng=np.random.default_rng(0))
        sb = stats([b], samples_per_point=20, rng=np.random.default_rng(0))
        assert sb.estimate == pytest.approx(sa.estimate / lam2, abs=1e-9)


def test_full_suite_names():
    rep = full_suite(curvature_package(model("fs3"), P6), nu=1.0)
    assert tuple(rep) == SUITE_NAMES
    assert rep.passed, rep.failures()
    # scale is max |R| over orthonormal frame components: the holomorphic curvature 4
    assert rep.scale == pytest.approx(4.0, abs=1e-9)


def test_requires_point():
    with pytest.raises(ValueError):
        class_residuals(model("fs3"))
    with pytest.raises(TypeError):
        class_residuals("fs3", P6)
