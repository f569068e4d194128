import math

import numpy as np
import pytest

from gp_core import (ATOMIC_FAMILIES, GridTooLargeError, KernelSpec, KernelSpecError, LazySampler,
                     PosteriorState, envelope, factorize_grid, gram, induced_metric, info_gain,
                     gaussian_tail_bound, kernel_eval, sample_grid)


def test_unknown_family_is_rejected():
    with pytest.raises(KernelSpecError):
        KernelSpec('cosine')


def test_non_positive_lengthscale_is_rejected():
    with pytest.raises(KernelSpecError):
        KernelSpec.squared_exponential(lengthscale=0.0)


def test_unsupported_matern_nu():
    with pytest.raises(KernelSpecError):
        KernelSpec.matern(3.5)


@pytest.mark.parametrize('family', ATOMIC_FAMILIES)
def test_kernel_at_zero_distance_is_variance(family):
    k = KernelSpec.from_name(family, lengthscale=0.3, variance=2.0)
    assert kernel_eval(k, [0.4], [0.4]) == pytest.approx(2.0)


@pytest.mark.parametrize('family', ATOMIC_FAMILIES)
def test_gram_is_symmetric_psd(family, rng):
    k = KernelSpec.from_name(family, lengthscale=0.3)
    X = rng.uniform(size=(30, 2))
    K = gram(k, X)
    assert np.allclose(K, K.T)
    assert np.linalg.eigvalsh(K).min() > -1e-9


def test_triangle_vanishes_beyond_lengthscale():
    k = KernelSpec.triangle(lengthscale=0.25)
    assert kernel_eval(k, [0.0], [0.3]) == 0.0
    assert kernel_eval(k, [0.0], [0.125]) == pytest.approx(0.5)


def test_composite_kernels(se_kernel):
    other = KernelSpec.matern(1.5, lengthscale=0.5, variance=2.0)
    x, y = [0.1], [0.3]
    assert kernel_eval(se_kernel + other, x, y) == pytest.approx(
        kernel_eval(se_kernel, x, y) + kernel_eval(other, x, y))
    assert kernel_eval(se_kernel * other, x, y) == pytest.approx(
        kernel_eval(se_kernel, x, y) * kernel_eval(other, x, y))
    assert (se_kernel * other).prior_variance == pytest.approx(2.0)


def test_active_dims_ignore_other_coordinates():
    k = KernelSpec.squared_exponential(lengthscale=0.2, active_dims=(0,))
    assert kernel_eval(k, [0.1, 0.0], [0.1, 0.9]) == pytest.approx(1.0)


@pytest.mark.parametrize('family', ATOMIC_FAMILIES)
def test_envelope_bounds_induced_metric(family, rng):
    k = KernelSpec.from_name(family, lengthscale=0.3)
    env = envelope(k, dim=2)
    for _ in range(50):
        x, y = rng.uniform(size=2), rng.uniform(size=2)
        r = float(np.max(np.abs(x - y)))
        assert induced_metric(k, x, y) <= env(r) + 1e-12


def test_envelope_exponents(se_kernel):
    assert envelope(se_kernel).alpha == 1.0
    assert envelope(KernelSpec.matern(0.5)).alpha == 0.5
    assert envelope(KernelSpec.triangle()).alpha == 0.5


def test_empty_posterior_returns_prior(se_kernel):
    state = PosteriorState(se_kernel, noise_var=0.01)
    mu, sigma = state.query([0.5])
    assert mu == 0.0
    assert sigma == pytest.approx(1.0)


@pytest.mark.parametrize('noise_var', [0.0, 0.01])
def test_incremental_matches_dense(noise_var, matern_kernel, rng):
    state = PosteriorState(matern_kernel, noise_var=noise_var)
    points = rng.permutation(np.linspace(0.02, 0.98, 12))[:, None]
    for x in points:
        state.update(x, float(rng.normal()))
    X = rng.uniform(size=(40, 1))
    mu, sigma = state.query_many(X)
    mu_d, sigma_d = state.dense_query_many(X)
    assert np.allclose(mu, mu_d, atol=1e-6)
    assert np.allclose(sigma ** 2, sigma_d ** 2, atol=1e-6)


def test_repeated_observations_shrink_variance(se_kernel):
    sigma = 0.1
    state = PosteriorState(se_kernel, noise_var=sigma ** 2)
    for m in range(1, 20):
        state.update([0.3], 0.0)
        _, s = state.query([0.3])
        assert s <= sigma / math.sqrt(m) + 1e-12


def test_posterior_capacity_grows(se_kernel, rng):
    state = PosteriorState(se_kernel, noise_var=0.01, capacity=2)
    for x in rng.uniform(size=(10, 1)):
        state.update(x, 1.0)
    assert len(state) == 10
    assert state.points.shape == (10, 1)


def test_update_rejects_wrong_dimension(se_kernel):
    state = PosteriorState(se_kernel, noise_var=0.01)
    state.update([0.1], 0.0)
    with pytest.raises(ValueError):
        state.update([0.1, 0.2], 0.0)


def test_update_rejects_non_finite(se_kernel):
    with pytest.raises(ValueError):
        PosteriorState(se_kernel, noise_var=0.01).update([0.1], math.nan)


def test_sample_grid_is_reproducible(se_kernel):
    grid = np.linspace(0, 1, 64)[:, None]
    a = sample_grid(se_kernel, grid, seed=7)
    b = sample_grid(se_kernel, grid, seed=7)
    assert a.shape == (64,)
    assert np.array_equal(a, b)
    assert sample_grid(se_kernel, grid, seed=7, size=3).shape == (64, 3)


def test_factorize_grid_rejects_large_grids(se_kernel):
    with pytest.raises(GridTooLargeError):
        factorize_grid(se_kernel, np.zeros((4097, 1)))


def test_lazy_sampler_is_consistent(se_kernel):
    sampler = LazySampler(se_kernel, seed=3)
    first = sampler.sample([0.25])
    assert sampler.sample([0.25]) == first
    sampler.sample([0.5])
    assert sampler.max_revealed >= first


def test_gaussian_tail_bound_edges():
    assert gaussian_tail_bound(0.0, 1.0) == 1.0
    assert gaussian_tail_bound(1.0, 0.0) == 0.0
    assert gaussian_tail_bound(0.0, 0.0) == 1.0
    assert gaussian_tail_bound(3.0, 1.0) == pytest.approx(2.0 * math.exp(-4.5))


def test_gaussian_tail_bound_holds_for_lazy_draws(se_kernel):
    x1, x2 = np.array([0.3]), np.array([0.45])
    d = induced_metric(se_kernel, x1, x2)
    draws = 2000
    gaps = np.empty(draws)
    for seed in range(draws):
        sampler = LazySampler(se_kernel, seed=seed)
        gaps[seed] = abs(sampler.sample(x1) - sampler.sample(x2))
    for a in (0.5 * d, d, 2.0 * d, 3.0 * d):
        bound = gaussian_tail_bound(a, d)
        frequency = float(np.mean(gaps >= a))
        assert frequency <= bound + 3.0 * math.sqrt(bound * (1.0 - bound) / draws) + 1e-12


def test_matern52_envelope_sweep():
    # 1 - (1 + a + a^2/3) e^-a <= a^2/6 para todo a >= 0
    a = np.linspace(0.0, 20.0, 2001)
    assert np.all(1.0 - (1.0 + a + a * a / 3.0) * np.exp(-a) <= a * a / 6.0 + 1e-15)
    k = KernelSpec.matern(2.5, lengthscale=0.3)
    env = envelope(k)
    assert env.alpha == 1.0
    assert env.delta_k == math.inf
    for r in np.linspace(0.0, 1.0, 201):
        assert induced_metric(k, np.array([0.0]), np.array([r])) <= env(r) + 1e-12


def test_lazy_sampler_keeps_empty_posterior(se_kernel):
    posterior = PosteriorState(se_kernel, noise_var=0.0)
    sampler = LazySampler(se_kernel, seed=5, posterior=posterior)
    value = sampler.sample([0.4])
    assert len(posterior) == 1
    mu, sigma = posterior.query([0.4])
    assert mu == pytest.approx(value, abs=1e-6)
    assert sigma < 1e-4


def test_info_gain_single_point(se_kernel):
    noise_var = 0.25
    expected = 0.5 * math.log(1.0 + 1.0 / noise_var)
    assert info_gain(se_kernel, [[0.5]], noise_var) == pytest.approx(expected)


def test_info_gain_is_monotone(se_kernel, rng):
    points = rng.uniform(size=(10, 1))
    gains = [info_gain(se_kernel, points[:m], 0.01) for m in range(1, 11)]
    assert all(b >= a - 1e-12 for a, b in zip(gains, gains[1:]))
