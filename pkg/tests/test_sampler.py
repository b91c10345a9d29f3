import math

import numpy as np
import pytest
from scipy import stats

from stableconc.levy_core import SpecError, SpectralMeasure, StableSpec, c_alpha, c_alpha_d, truncate
from stableconc.sampler import (
    CHUNK,
    RngStream,
    chambers_mallows_stuck,
    default_workers,
    empirical_cf,
    positive_stable,
    sample_discrete_spectral,
    sample_rotinv,
    sample_sas_1d,
    sample_spec,
    sample_Z_tail,
)

N = 200_000


def within(cf, target, k=3.0):
    err = np.abs(cf.value - target)
    tol = k * np.hypot(cf.stderr_re, cf.stderr_im) + 1e-12
    return np.all(err <= tol), err, tol


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.3, 1.8])
def test_sas_cf(alpha):
    sigma = 1.7
    batch = sample_sas_1d(alpha, sigma, N, RngStream(11))
    u = np.array([[0.1], [0.5], [1.0], [2.0]])
    ok, err, tol = within(empirical_cf(batch, u), np.exp(-np.abs(sigma * u[:, 0]) ** alpha))
    assert ok, (err, tol)


def test_cauchy_matches_exact_law():
    x = sample_sas_1d(1.0, 1.0, N, RngStream(5)).data[:, 0]
    assert stats.kstest(x, "cauchy").pvalue > 0.01
    tail = np.mean(x >= 100.0)
    exact = 0.5 - math.atan(100.0) / math.pi
    assert abs(tail - exact) <= 3 * math.sqrt(exact * (1 - exact) / N)


@pytest.mark.parametrize("alpha", [0.7, 1.5])
def test_stability_under_addition(alpha):
    g = np.random.default_rng(3)
    a, b, c = (chambers_mallows_stuck(alpha, g, 50_000) for _ in range(3))
    assert stats.ks_2samp((a + b) / 2 ** (1 / alpha), c).pvalue > 0.01


@pytest.mark.parametrize("beta", [0.3, 0.75, 0.95])
def test_positive_stable_laplace(beta):
    P = positive_stable(beta, np.random.default_rng(8), N)
    assert np.all(P > 0)
    for s in (0.5, 1.0, 3.0):
        v = np.exp(-s * P)
        assert abs(v.mean() - math.exp(-(s**beta))) <= 4 * v.std() / math.sqrt(N)


def test_determinism_and_substreams():
    a = sample_sas_1d(1.2, 1.0, CHUNK + 10, RngStream(42))
    b = sample_sas_1d(1.2, 1.0, CHUNK + 10, RngStream(42))
    assert np.array_equal(a.data, b.data)
    c = sample_sas_1d(1.2, 1.0, 100, RngStream(42))
    d = sample_sas_1d(1.2, 1.0, 100, RngStream(42, 1))
    assert not np.array_equal(c.data, d.data)
    assert a.sidecar()["seed"] == 42 and a.n == CHUNK + 10 and a.dim == 1


def test_worker_count_invariance():
    spec = StableSpec(1.8, 3, SpectralMeasure.uniform(2.0))
    n = 3 * CHUNK + 7
    runs = [sample_spec(spec, n, RngStream(9), workers=w).data for w in (1, 2, 8)]
    assert all(np.array_equal(runs[0], r) for r in runs[1:])


def test_default_workers_env(monkeypatch):
    monkeypatch.setenv("STABLECONC_THREADS", "4")
    assert default_workers() == 4
    monkeypatch.setenv("STABLECONC_THREADS", "many")
    with pytest.raises(SpecError):
        default_workers()
    monkeypatch.delenv("STABLECONC_THREADS")
    assert default_workers() == 1


def test_cauchy_spec_scale():
    batch = sample_spec(StableSpec.cauchy_1d(), N, RngStream(1))
    assert batch.generator == "sas1d"
    sigma = math.pi / 2
    cf = empirical_cf(batch, [[1.0]])
    assert abs(cf.value[0].real - math.exp(-sigma)) <= 3 / math.sqrt(N)


def test_single_pair_collapses_to_sas():
    spec = StableSpec(1.4, 1, SpectralMeasure.symmetric_pairs([(1.0,)], [0.8]))
    a = sample_discrete_spectral(spec, 1000, RngStream(6)).data
    b = sample_sas_1d(1.4, (2 * 0.8 * c_alpha(1.4)) ** (1 / 1.4), 1000, RngStream(6)).data
    assert np.allclose(a, b, rtol=1e-14, atol=0)


def test_spectral_axes_cf():
    alpha, w = 1.5, 0.5
    spec = StableSpec(alpha, 2, SpectralMeasure.symmetric_pairs([(1.0, 0.0), (0.0, 1.0)], [w, w]))
    batch = sample_discrete_spectral(spec, N, RngStream(12))
    u = np.array([[0.5, 0.0], [0.3, -0.8], [1.0, 1.0]])
    s_alpha = 2 * w * c_alpha(alpha)
    target = np.exp(-s_alpha * (np.abs(u) ** alpha).sum(axis=1))
    ok, err, tol = within(empirical_cf(batch, u), target)
    assert ok, (err, tol)


def test_spectral_rejects_asymmetric():
    spec = StableSpec(1.5, 1, SpectralMeasure.atoms([(1.0,)], [1.0]))
    with pytest.raises(SpecError, match="symmetric"):
        sample_discrete_spectral(spec, 10, RngStream(0))


@pytest.mark.parametrize("alpha,dim", [(1.8, 2), (1.0, 3), (0.6, 2)])
def test_rotinv_cf(alpha, dim):
    c = 1.3
    batch = sample_rotinv(alpha, dim, c, N, RngStream(21))
    rng = np.random.default_rng(0)
    dirs = rng.standard_normal((3, dim))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    u = dirs * np.array([0.5, 1.0, 2.0])[:, None]
    ok, err, tol = within(empirical_cf(batch, u), np.exp(-c * np.linalg.norm(u, axis=1) ** alpha))
    assert ok, (err, tol)


def test_rotinv_uniform_directions_rayleigh():
    X = sample_rotinv(1.8, 2, 1.0, N, RngStream(4)).data
    theta = np.arctan2(X[:, 1], X[:, 0])
    rbar = np.abs(np.exp(1j * theta).mean())
    assert math.exp(-N * rbar**2) > 0.01


def test_rotinv_from_spec_scale():
    spec = StableSpec(1.8, 2, SpectralMeasure.uniform(1.0))
    batch = sample_spec(spec, N, RngStream(2))
    target = math.exp(-c_alpha_d(1.8, 2) * 1.0)
    cf = empirical_cf(batch, [[1.0, 0.0]])
    assert abs(cf.value[0] - target) <= 3 * math.hypot(cf.stderr_re[0], cf.stderr_im[0])


def test_z_tail_nonzero_fraction():
    spec = StableSpec(1.0, 1, SpectralMeasure.symmetric_pairs([(1.0,)], [1.0]))
    batch = sample_Z_tail(spec, 2.0, N, RngStream(13))
    p = 1 - math.exp(-truncate(spec, 2.0).tail_mass)
    frac = np.mean(np.any(batch.data != 0, axis=1))
    assert abs(frac - p) <= 3 * math.sqrt(p * (1 - p) / N)


def test_z_tail_single_jumps_exceed_R():
    spec = StableSpec(1.3, 2, SpectralMeasure.uniform(0.5))
    R = 1.5
    rate = truncate(spec, R).tail_mass
    n = 50_000
    batch = sample_Z_tail(spec, R, n, RngStream(3))
    norms = np.linalg.norm(batch.data, axis=1)
    assert abs(np.mean(norms > 0) - (1 - math.exp(-rate))) <= 4 * math.sqrt(rate / n)
    # with a tiny rate nearly every nonzero row is a single jump, longer than R
    tiny = sample_Z_tail(spec, 200.0, n, RngStream(3))
    nz = np.linalg.norm(tiny.data, axis=1)
    assert np.all(nz[nz > 0] > 200.0)


def test_z_tail_large_radius_mostly_zero():
    spec = StableSpec.cauchy_1d()
    batch = sample_Z_tail(spec, 1e6, 10_000, RngStream(1))
    assert np.mean(batch.data == 0) > 0.999


def test_empirical_cf_basics():
    batch = sample_sas_1d(1.0, 1.0, 1000, RngStream(0))
    cf = empirical_cf(batch, [[0.0], [3.0]])
    assert cf.value[0] == 1 + 0j
    assert np.all(np.abs(cf.value) <= 1 + 1e-15)
    assert cf.stderr_bound == pytest.approx(1 / math.sqrt(1000))
    with pytest.raises(SpecError):
        empirical_cf(batch, [[1.0, 2.0]])


def test_sample_spec_errors():
    with pytest.raises(SpecError):
        sample_spec(StableSpec.cauchy_1d(), 0, RngStream(0))
    with pytest.raises(SpecError):
        sample_spec(StableSpec.cauchy_1d(), 10, RngStream(0), generator="rotinv")
    with pytest.raises(SpecError):
        sample_spec(StableSpec.cauchy_1d(), 10, RngStream(0), generator="ztail")
    with pytest.raises(SpecError):
        sample_spec(StableSpec(1.5, 2, SpectralMeasure.uniform(1.0)), 10, RngStream(0), generator="sas1d")
