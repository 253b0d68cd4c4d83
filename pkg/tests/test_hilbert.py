import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm, fractional_matrix_power

from kolab.hilbert import SpectralModel, hs_norm


@pytest.fixture
def model():
    return SpectralModel.laplacian(6)


def test_laplacian_spectrum(model):
    assert np.allclose(model.eigenvalues, -(np.pi ** 2) * np.arange(1, 7) ** 2)
    assert model.dim_h == model.dim_u == 6


def test_eta_must_exceed_spectrum():
    with pytest.raises(ValueError):
        SpectralModel(np.array([-1.0, 2.0]), eta=1.0)


def test_semigroup_matches_dense_expm(model):
    v = np.linspace(-1, 1, 6)
    A = np.diag(model.eigenvalues)
    for t in (0.0, 1e-3, 0.3, 1.0):
        assert np.allclose(model.semigroup_apply(t, v), expm(t * A) @ v, rtol=1e-12, atol=1e-300)


def test_semigroup_rejects_negative_time(model):
    with pytest.raises(ValueError):
        model.semigroup_apply(-0.1, np.ones(6))


def test_fractional_power_matches_dense(model):
    v = np.arange(1.0, 7.0)
    M = np.diag(model.shifted)
    for r in (-0.4, 0.25, 0.5, 1.0):
        dense = np.real(fractional_matrix_power(M, r)) @ v
        assert np.allclose(model.frac_power_apply(r, v), dense, rtol=1e-10)
        assert math.isclose(model.norm_r(r, v), np.linalg.norm(dense), rel_tol=1e-10)


def brute_chi(model, r, n=200_001):
    t = np.linspace(1e-9, model.horizon, n)[:, None]
    vals = t ** r * model.shifted[None] ** r * np.exp(t * model.eigenvalues[None])
    return float(vals.max())


@pytest.mark.parametrize("r", [0.0, 0.1, 0.5, 0.9, 1.0])
def test_chi_against_grid_search(model, r):
    assert model.chi(r) == pytest.approx(brute_chi(model, r), rel=1e-6)


def test_chi_zero_is_one(model):
    assert model.chi(0.0) == 1.0


def test_chi_rejects_outside_unit_interval(model):
    with pytest.raises(ValueError):
        model.chi(1.5)


def test_rough_directions_are_top_modes(model):
    d = model.rough_directions(2)
    assert d[0][5] == 1.0 and d[1][4] == 1.0


def test_negative_norm_of_rough_direction_is_small(model):
    e = model.rough_directions(1)[0]
    assert model.norm_r(-0.4, e) == pytest.approx((1 + 36 * np.pi ** 2) ** -0.4)


def test_fingerprint_stable_and_sensitive():
    a = SpectralModel.laplacian(4)
    assert a.fingerprint() == SpectralModel.laplacian(4).fingerprint()
    assert a.fingerprint() != SpectralModel.laplacian(4, eta=2.0).fingerprint()


def test_hs_norm():
    assert hs_norm(np.eye(3)) == pytest.approx(math.sqrt(3))


@settings(max_examples=50)
@given(st.floats(0, 1), st.floats(0, 1))
def test_semigroup_property(s, t):
    m = SpectralModel.laplacian(5)
    v = np.ones(5)
    assert np.allclose(m.semigroup_apply(s + t, v), m.semigroup_apply(s, m.semigroup_apply(t, v)),
                       rtol=1e-12, atol=1e-300)


@settings(max_examples=50)
@given(st.floats(-1, 1), st.floats(-1, 1))
def test_fractional_powers_compose(r, s):
    m = SpectralModel.laplacian(5)
    v = np.linspace(0.5, 2, 5)
    assert np.allclose(m.frac_power_apply(r, m.frac_power_apply(s, v)), m.frac_power_apply(r + s, v), rtol=1e-10)
