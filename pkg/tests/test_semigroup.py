import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from kolab import coefficients as cf
from kolab import semigroup as sg
from kolab.errors import HypothesisError
from kolab.hilbert import SpectralModel

N = 8
MODEL = SpectralModel.laplacian(N)
ZERO, QB, PHI = cf.ZeroDrift(N), cf.ConstantDiffusion(np.eye(N)), cf.QuadraticNorm()
X = np.linspace(1.0, 0.3, N)
U1, U2 = MODEL.basis_vector(1), MODEL.basis_vector(2) + 0.5 * MODEL.basis_vector(1)


def smooth_setup():
    F = cf.SmoothBoundedDrift(1.5, np.full(N, 0.8), np.linspace(1.0, 0.2, N))
    return F, cf.ConstantDiffusion(0.5 * np.eye(N)), cf.CosFunctional(np.full(N, 0.5))


def test_estimate_from_samples_matches_numpy():
    v = np.random.default_rng(0).normal(size=1001)
    est = sg.Estimate.from_samples(v)
    assert est.value == pytest.approx(v.mean(), rel=1e-13)
    assert est.stderr == pytest.approx(v.std(ddof=1) / math.sqrt(v.size), rel=1e-12)
    assert sg.Estimate.from_samples([3.0]).stderr == 0.0


@pytest.mark.parametrize("t", [0.1, 0.5, 1.0])
def test_ou_value_within_band(t):
    est = sg.estimate_value(PHI, MODEL, ZERO, QB, t, X, samples=3000, seed=1)
    ref = sg.ou_value(MODEL, QB.q, X, t)
    assert abs(est.value - ref) <= 3.5 * est.stderr


@pytest.mark.parametrize("t", [0.1, 1.0])
def test_ou_derivatives(t):
    d1 = sg.estimate_derivative(1, PHI, MODEL, ZERO, QB, t, X, [U1], samples=3000, seed=2)
    assert abs(d1.value - sg.ou_derivative(MODEL, 1, X, [U1], t)) <= 3.5 * d1.stderr
    d2 = sg.estimate_derivative(2, PHI, MODEL, ZERO, QB, t, X, [U1, U2], samples=50, seed=2)
    assert d2.value == pytest.approx(sg.ou_derivative(MODEL, 2, X, [U1, U2], t), rel=1e-12)
    assert d2.stderr == pytest.approx(0.0, abs=1e-15)
    d3 = sg.estimate_derivative(3, PHI, MODEL, ZERO, QB, t, X, [U1, U2, U1], samples=10, seed=2)
    assert d3.value == 0.0


def test_ou_value_at_zero_time():
    assert sg.ou_value(MODEL, QB.q, X, 0.0) == pytest.approx(X @ X)
    est = sg.estimate_value(PHI, MODEL, ZERO, QB, 0.0, X, samples=4)
    assert est.value == pytest.approx(X @ X) and est.stderr == 0.0


def test_ou_value_with_mollifier():
    est = sg.estimate_value(PHI, MODEL, ZERO, QB, 0.5, X, samples=3000, eps=0.05, seed=4)
    assert abs(est.value - sg.ou_value(MODEL, QB.q, X, 0.5, eps=0.05)) <= 3.5 * est.stderr


def test_metadata_records_run():
    est = sg.estimate_value(PHI, MODEL, ZERO, QB, 0.1, X, samples=10, seed=9)
    m = est.metadata
    assert m["seed"] == 9 and m["steps"] == 26 and m["oracle_only"] and m["model"] == MODEL.fingerprint()


@pytest.mark.parametrize("k", [1, 2])
def test_fd_cross_check(k):
    F, B, phi = smooth_setup()
    dirs = [U1, U2][:k]
    x = np.full(N, 0.25)
    gaps = []
    for h in (0.125, 0.0625):
        chk = sg.fd_cross_check(k, phi, MODEL, F, B, 0.5, x, dirs, h, samples=300, seed=0)
        gaps.append(abs(chk.gap))
        assert abs(chk.gap) <= max(3.5 * chk.gap_stderr, h * h)
    assert gaps[1] < gaps[0]


def test_fd_cross_check_rejects_bad_inputs():
    F, B, phi = smooth_setup()
    with pytest.raises(ValueError):
        sg.fd_cross_check(3, phi, MODEL, F, B, 0.5, X, [U1] * 3, 0.1)
    with pytest.raises(ValueError):
        sg.fd_cross_check(1, phi, MODEL, F, B, 0.5, X, [U1], 0.0)


def test_results_independent_of_jobs():
    F, B, phi = smooth_setup()
    a = sg.estimate_derivative(2, phi, MODEL, F, B, 0.3, X, [U1, U2], samples=600, seed=3, jobs=1)
    b = sg.estimate_derivative(2, phi, MODEL, F, B, 0.3, X, [U1, U2], samples=600, seed=3, jobs=4)
    assert (a.value, a.stderr) == (b.value, b.stderr)


@pytest.mark.parametrize("delta,k", [((0.5,), 1), ((0.3, 0.2), 2), ((-0.1,), 1), ((0.1,), 2)])
def test_check_delta_rejects(delta, k):
    with pytest.raises(HypothesisError):
        sg.check_delta(delta, k)


@settings(max_examples=60)
@given(st.lists(st.floats(0, 0.49), min_size=1, max_size=4))
def test_check_delta_accepts_exactly_admissible(delta):
    if sum(delta) < 0.5:
        assert sg.check_delta(delta, len(delta)) == tuple(delta)
    else:
        with pytest.raises(HypothesisError, match="sum"):
            sg.check_delta(delta, len(delta))


def test_regularity_scan_structure():
    tab = sg.regularity_scan(1, (0.2,), PHI, MODEL, ZERO, QB, X, [1e-3, 1e-2, 1e-1], samples=200)
    assert [r["t"] for r in tab.rows] == [1e-3, 1e-2, 1e-1]
    e = MODEL.rough_directions(1)[0]
    norm = MODEL.norm_r(-0.2, e)
    for r in tab.rows:
        assert r["ratio"] == pytest.approx(r["t"] ** 0.2 * abs(r["value"]) / norm)
    assert {"blowup_exponent", "slope", "max_ratio"} <= set(tab.summary)


def test_regularity_scan_gate():
    with pytest.raises(HypothesisError):
        sg.regularity_scan(2, (0.3, 0.3), PHI, MODEL, ZERO, QB, X, [0.1], samples=4)


def test_lipschitz_scan_gate_and_zero_distance():
    F, B, phi = smooth_setup()
    with pytest.raises(HypothesisError, match="Lip"):
        sg.lipschitz_scan(1, (0.2,), phi, MODEL, cf.NemytskiiPoly(N, 1.0, math.inf), B, X, X + 1, [0.1])
    tab = sg.lipschitz_scan(1, (0.2,), phi, MODEL, F, B, X, X, [0.1, 0.5], samples=10)
    assert all(r["ratio"] == 0.0 for r in tab.rows)


def test_lipschitz_scan_linear_observable_ou():
    # D P_t phi(x) u = <v, e^{tA}u> for linear phi and F = 0: independent of x
    phi = cf.LinearFunctional(np.ones(N))
    tab = sg.lipschitz_scan(1, (0.1,), phi, MODEL, ZERO, QB, X, X + 0.3, [0.1, 1.0], samples=50)
    assert max(abs(r["value"]) for r in tab.rows) < 1e-14


def test_mollified_scan_includes_baseline():
    F, B, phi = smooth_setup()
    tab = sg.mollified_scan(1, (0.2,), phi, MODEL, F, B, X, [0.01, 0.1, 1.0], [0.1, 0.01], samples=200)
    assert set(tab.summary["maxima"]) == {0.1, 0.01, 0.0}
    assert tab.summary["gaps"][0.0] == 0.0
    assert tab.summary["spread"] >= 1.0
    with pytest.raises(ValueError):
        sg.mollified_scan(1, (0.2,), phi, MODEL, F, B, X, [0.1], [2.0], samples=4)


def test_is_ou_setting():
    F, B, phi = smooth_setup()
    assert sg.is_ou_setting(ZERO, QB, PHI)
    assert not sg.is_ou_setting(F, QB, PHI)


def test_time_outside_horizon_rejected():
    with pytest.raises(ValueError):
        sg.estimate_value(PHI, MODEL, ZERO, QB, 1.5, X)
