import numpy as np
import pytest

from kolab import coefficients as cf
from kolab.hilbert import SpectralModel
from kolab.kernels import ENV_FLAG, available_backends, default_backend, get_simulator
from kolab.kernels.tables import flat_tables, mask_of, subset_partitions
from kolab.noise import NoiseBlock, standard_normals
from kolab.partitions import bell
from kolab.sde_engine import (DerivativeRequest, SimulationGrid, couple_for_fd, simulate_bundle, simulate_samples,
                              steps_to)

N = 6
MODEL = SpectralModel.laplacian(N)
BACKENDS = available_backends()


def smooth():
    return cf.SmoothBoundedDrift(2.0, np.full(N, 0.9), np.linspace(1, 0.2, N))


def smooth_diff():
    return cf.SmoothBoundedDiffusion(0.4 * np.eye(N), 0.3, np.linspace(0.5, -0.5, N), np.eye(N))


def test_subset_partition_table_counts():
    table = subset_partitions(4)
    assert sorted(table) == list(range(1, 16))
    for mask, parts in table.items():
        assert len(parts) == bell(bin(mask).count("1"))
        for blocks in parts:
            union = 0
            for b in blocks:
                assert union & b == 0
                union |= b
            assert union == mask
    ptr, bptr, bmask = flat_tables(3)
    assert ptr[-1] == sum(len(p) for p in subset_partitions(3).values())
    assert mask_of({1, 3}) == 0b101


def test_zero_noise_zero_drift_is_semigroup():
    grid = SimulationGrid(64, 1.0)
    x = np.linspace(1, -1, N)
    req = DerivativeRequest(x, (np.ones(N),))
    b = simulate_bundle(MODEL, cf.ZeroDrift(N), cf.ConstantDiffusion(np.zeros((N, N))), req, grid,
                        NoiseBlock.zeros(64, N))
    for j, t in enumerate(grid.times):
        assert np.allclose(b.base[j], MODEL.semigroup_apply(t, x), rtol=1e-12, atol=1e-300)
        assert np.allclose(b.path((1,))[j], MODEL.semigroup_apply(t, np.ones(N)), rtol=1e-12, atol=1e-300)


def test_constant_drift_matches_variation_of_constants():
    # F = c constant: X_{m+1} = e^{dt A} X_m + e^{dt A} dt c, a geometric sum
    grid = SimulationGrid(10, 1.0)
    c = np.linspace(0.5, 1.5, N)
    lin = cf.LinearDrift(np.zeros((N, N)))
    F = cf.SmoothBoundedDrift(0.0, np.ones(N), np.ones(N))
    b = simulate_bundle(MODEL, F, cf.ConstantDiffusion(np.zeros((N, N))), DerivativeRequest(np.zeros(N)), grid,
                        NoiseBlock.zeros(10, N))
    assert np.allclose(b.base, 0.0)
    b = simulate_bundle(MODEL, lin, cf.ConstantDiffusion(np.diag(c)), DerivativeRequest(np.zeros(N)), grid,
                        NoiseBlock(np.ones((10, N)) * 0.1))
    q = np.exp(grid.dt * MODEL.eigenvalues)
    expected = c * 0.1 * q * (1 - q ** 10) / (1 - q)
    assert np.allclose(b.base[-1], expected, rtol=1e-12)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="numba not installed")
@pytest.mark.parametrize("k", [0, 1, 2, 3])
@pytest.mark.parametrize("drift", ["smooth", "nemytskii", "linear"])
def test_backends_agree(k, drift):
    F = {"smooth": smooth(), "nemytskii": cf.NemytskiiPoly(N, 1.0, 1.5),
         "linear": cf.LinearDrift(np.eye(N) * 0.5)}[drift]
    B = smooth_diff()
    dirs = tuple(MODEL.basis_vector(i + 1) for i in range(k))
    req = DerivativeRequest(np.full(N, 0.3), dirs, eps=0.01)
    outs = [simulate_samples(MODEL, F, B, req, 0.7, 64, seed=3, samples=9, backend=be) for be in ("numpy", "numba")]
    assert np.allclose(outs[0], outs[1], rtol=1e-11, atol=1e-13)


def test_subset_paths_consistent_across_orders():
    F, B = smooth(), smooth_diff()
    u1, u2 = MODEL.basis_vector(1), MODEL.basis_vector(2)
    one = simulate_samples(MODEL, F, B, DerivativeRequest(np.ones(N), (u1,)), 1.0, 32, 1, 5)
    two = simulate_samples(MODEL, F, B, DerivativeRequest(np.ones(N), (u1, u2)), 1.0, 32, 1, 5)
    assert np.array_equal(one[:, :, 0], two[:, :, 0])
    assert np.array_equal(one[:, :, 1], two[:, :, 1])


def test_linear_gaussian_moments():
    q = 0.5 * np.eye(N)
    x = np.ones(N)
    t = 0.2
    n = steps_to(t, 64, 1.0)
    out = simulate_samples(MODEL, cf.ZeroDrift(N), cf.ConstantDiffusion(q), DerivativeRequest(x), t, 64, 11, 4000)
    final = out[:, -1, 0]
    mean = MODEL.semigroup_apply(t, x)
    dt = t / n
    j = np.arange(1, n + 1)[:, None]
    var = (np.exp(2 * j * dt * MODEL.eigenvalues[None]) * 0.25).sum(axis=0) * dt
    se = np.sqrt(var / final.shape[0])
    assert np.all(np.abs(final.mean(axis=0) - mean) <= 4 * se)
    assert np.allclose(final.var(axis=0, ddof=1), var, rtol=0.1)


def test_strong_rate_with_coarsened_noise():
    F, B = smooth(), cf.ConstantDiffusion(0.5 * np.eye(N))
    x = np.full(N, 0.5)
    fine_steps = 1024
    levels = [16, 32, 64, 128]
    errs = np.zeros(len(levels))
    for s in range(40):
        noise = NoiseBlock.draw(5, s, fine_steps, 1.0 / fine_steps, N)
        ref = simulate_bundle(MODEL, F, B, DerivativeRequest(x), SimulationGrid(fine_steps), noise).base[-1]
        for i, lv in enumerate(levels):
            coarse = noise.coarsen(fine_steps // lv)
            end = simulate_bundle(MODEL, F, B, DerivativeRequest(x), SimulationGrid(lv), coarse).base[-1]
            errs[i] += np.sum((end - ref) ** 2)
    rms = np.sqrt(errs / 40)
    rate = -np.polyfit(np.log(levels), np.log(rms), 1)[0]
    assert rate >= 0.5 - 0.1


def test_couple_for_fd_linear_exact_and_nonlinear_first_order():
    grid = SimulationGrid(128)
    noise = NoiseBlock.draw(0, 0, 128, grid.dt, N)
    x, u = np.full(N, 0.2), MODEL.basis_vector(1)
    B = cf.ConstantDiffusion(0.5 * np.eye(N))
    lin = cf.LinearDrift(np.diag(np.linspace(-1, 1, N)))
    d = simulate_bundle(MODEL, lin, B, DerivativeRequest(x, (u,)), grid, noise).path((1,))
    plus, base = couple_for_fd(MODEL, lin, B, x, u, 0.125, grid, noise)
    assert np.allclose((plus - base) / 0.125, d, atol=1e-12)
    F = smooth()
    d = simulate_bundle(MODEL, F, B, DerivativeRequest(x, (u,)), grid, noise).path((1,))
    hs = [2.0 ** -j for j in range(4, 9)]
    errs = []
    for h in hs:
        plus, base = couple_for_fd(MODEL, F, B, x, u, h, grid, noise)
        errs.append(np.max(np.abs((plus - base) / h - d)))
    assert np.polyfit(np.log(hs), np.log(errs), 1)[0] == pytest.approx(1.0, abs=0.2)
    with pytest.raises(ValueError):
        couple_for_fd(MODEL, F, B, x, u, 0.0, grid, noise)


def test_jobs_do_not_change_results():
    F, B = smooth(), smooth_diff()
    req = DerivativeRequest(np.ones(N), (MODEL.basis_vector(2),))
    a = simulate_samples(MODEL, F, B, req, 0.5, 32, 9, 600, jobs=1)
    b = simulate_samples(MODEL, F, B, req, 0.5, 32, 9, 600, jobs=3)
    assert np.array_equal(a, b)
    c = simulate_samples(MODEL, F, B, req, 0.5, 32, 9, range(256, 600))
    assert np.array_equal(a[256:], c)


def test_noise_streams_independent_of_batch():
    z = standard_normals(1, 5, 10, 3)
    assert np.array_equal(z, standard_normals(1, 5, 10, 3))
    assert not np.array_equal(z, standard_normals(1, 6, 10, 3))
    assert not np.array_equal(z, standard_normals(2, 5, 10, 3))


def test_coarsen_preserves_brownian_endpoint():
    nb = NoiseBlock.draw(0, 0, 64, 1 / 64, 2)
    assert np.allclose(nb.coarsen(8).increments.sum(axis=0), nb.increments.sum(axis=0))
    with pytest.raises(ValueError):
        nb.coarsen(5)


def test_steps_to_hits_target_exactly():
    assert steps_to(1.0, 256, 1.0) == 256
    assert steps_to(0.1, 256, 1.0) == 26
    assert steps_to(0.0, 256, 1.0) == 0
    assert steps_to(1e-6, 256, 1.0) == 1
    with pytest.raises(ValueError):
        steps_to(1.5, 256, 1.0)


def test_request_validation():
    with pytest.raises(ValueError):
        DerivativeRequest(np.zeros(N), tuple(np.zeros(N) for _ in range(5)))
    with pytest.raises(ValueError):
        DerivativeRequest(np.zeros(N), (np.zeros(N + 1),))
    with pytest.raises(ValueError):
        DerivativeRequest(np.zeros(N), eps=-1.0)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        simulate_samples(MODEL, cf.ZeroDrift(N + 1), cf.ConstantDiffusion(np.eye(N)), DerivativeRequest(np.zeros(N)),
                         1.0, 8, 0, 2)


def test_env_flag_forces_numpy(monkeypatch):
    monkeypatch.setenv(ENV_FLAG, "numpy")
    assert default_backend() == "numpy"
    assert get_simulator() is get_simulator("numpy")
    monkeypatch.setenv(ENV_FLAG, "fortran")
    if "numba" in BACKENDS:
        with pytest.raises(ValueError):
            default_backend()


def test_mollifier_recorded_in_metadata():
    grid = SimulationGrid(4)
    b = simulate_bundle(MODEL, smooth(), smooth_diff(), DerivativeRequest(np.zeros(N), eps=0.1), grid,
                        NoiseBlock.zeros(4, N))
    assert b.metadata["eps"] == 0.1 and "mollifier" in b.metadata
