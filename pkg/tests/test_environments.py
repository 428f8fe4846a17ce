import numpy as np
import pytest

from milk.environments.builder import EnvironmentSampler, EnvironmentWeights, build_environments, cyclic_shift
from milk.environments.dirichlet import sample_dirichlet, sample_log_gamma
from milk.errors import ContractError, ParameterError

ALPHA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)


@pytest.mark.parametrize("alpha", ALPHA_GRID)
def test_dirichlet_samples_lie_on_simplex(alpha, rng):
    samples = sample_dirichlet(np.full(3, alpha), rng, size=100_000)
    assert samples.shape == (100_000, 3)
    assert np.all(np.isfinite(samples))
    assert np.all(samples >= 0)
    assert np.max(np.abs(samples.sum(axis=1) - 1.0)) <= 1e-9


def test_dirichlet_mean(rng):
    alpha = np.array([1.0, 2.0, 3.0])
    samples = sample_dirichlet(alpha, rng, size=100_000)
    np.testing.assert_allclose(samples.mean(axis=0), alpha / alpha.sum(), atol=0.01)


def test_small_alpha_concentrates_on_a_vertex(rng):
    samples = sample_dirichlet(np.full(2, 0.01), rng, size=10_000)
    assert np.mean(samples.max(axis=1) > 0.99) > 0.9


def test_gamma_mean(rng):
    log_g = sample_log_gamma(np.full(200_000, 2.5), rng)
    assert np.exp(log_g).mean() == pytest.approx(2.5, rel=0.02)


def test_invalid_alpha(rng):
    with pytest.raises(ParameterError):
        sample_dirichlet(np.array([1.0, 0.0]), rng)
    with pytest.raises(ParameterError):
        sample_dirichlet(np.array([1.0, -2.0]), rng)


def test_cyclic_shift_rotates_argmax():
    theta = np.array([0.5, 0.3, 0.2])
    assert cyclic_shift(theta).tolist() == [0.2, 0.5, 0.3]

    shifted = [theta]
    for _ in range(3):
        shifted.append(cyclic_shift(shifted[-1]))
    np.testing.assert_array_equal(shifted[3], theta)
    assert sorted(int(np.argmax(t)) for t in shifted[:3]) == [0, 1, 2]


def test_full_environment_set(rng):
    envs = build_environments(3, 0.5, rng, "full")
    assert len(envs) == 4
    np.testing.assert_allclose(envs[0].theta, np.full(3, 1 / 3))
    np.testing.assert_array_equal(envs[2].theta, np.roll(envs[1].theta, 1))
    np.testing.assert_array_equal(envs[3].theta, np.roll(envs[1].theta, 2))
    assert [env.env_id for env in envs] == [0, 1, 2, 3]


def test_variants(rng):
    assert len(build_environments(3, 1.0, rng, "no_e0")) == 3
    assert all(env.env_id != 0 for env in build_environments(3, 1.0, rng, "no_e0"))
    assert len(build_environments(3, 1.0, rng, "no_cyclic_shift")) == 4
    single = build_environments(3, 1.0, rng, "single")
    assert len(single) == 1
    np.testing.assert_allclose(single[0].theta, np.full(3, 1 / 3))


def test_invalid_environment_requests(rng):
    with pytest.raises(ParameterError):
        build_environments(1, 1.0, rng)
    with pytest.raises(ParameterError):
        build_environments(2, 1.0, rng, "shuffled")
    with pytest.raises(ParameterError):
        build_environments(2, [1.0, 1.0, 1.0], rng)


def test_frozen_sampler_reuses_weights(rng):
    frozen = EnvironmentSampler(2, 1.0, rng, "frozen")
    assert frozen.next() is frozen.next()
    fresh = EnvironmentSampler(2, 1.0, rng, "full")
    assert not np.array_equal(fresh.next().thetas(), fresh.next().thetas())


def test_environment_weights_contract():
    with pytest.raises(ContractError):
        EnvironmentWeights(1, np.array([0.7, 0.7]))


def test_small_alpha_environments_are_nearly_single_modality(rng):
    maxima = np.array([build_environments(2, 0.01, rng, "full")[1].theta.max() for _ in range(10_000)])
    assert np.mean(maxima > 0.9) > 0.5
