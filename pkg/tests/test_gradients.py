import numpy as np
import pytest

from milk.environments.builder import build_environments
from milk.load_config.load_config import TrainConfig
from milk.objective.gradcheck import TrialSize, default_trials, finite_diff_check, random_instance, relative_error
from milk.objective.gradients import alignment_grad, backward, env_loss_weights


def test_default_gradient_check_passes():
    report = finite_diff_check()
    assert len(report.trials) >= 20
    assert any(t["beta"] == 1000.0 and t["lambda"] > 0 and t["missing"] for t in report.trials)
    assert set(report.per_group) == {"user_embeddings", "W", "b"}
    assert report.max_rel_error <= 1e-4
    assert report.passed(1e-4)


def test_corrupted_gradient_is_detected():
    def corrupted(*args):
        grads = backward(*args)
        grads.weights[0] *= 0.9
        return grads

    report = finite_diff_check(trials=default_trials()[:2], gradient_fn=corrupted)
    assert report.max_rel_error > 1e-4
    assert report.per_group["W"] > 1e-4


def test_gradient_check_for_three_modalities():
    size = TrialSize(n_users=3, n_items=7, M=3, d=2, d_x=3)
    trials = [{"config": TrainConfig(beta=100.0, lambda_=0.3, gamma_reg=1e-2, alpha=0.3), "missing": True}]
    assert finite_diff_check(trials, size=size, seed=3).max_rel_error <= 1e-4


def test_env_loss_weights():
    weights = env_loss_weights(np.array([1.0, 3.0]), beta=0.0)
    np.testing.assert_allclose(weights, [0.5, 0.5])
    weights = env_loss_weights(np.array([1.0, 3.0]), beta=2.0)
    # 1/2 + 2·2·(L_e − 2)/2
    np.testing.assert_allclose(weights, [-1.5, 2.5])


def test_alignment_grad_ignores_unavailable_modalities(rng):
    reps = rng.standard_normal((3, 2, 4))
    grad = alignment_grad(reps, np.array([[1, 1], [1, 0], [0, 1]]))
    assert np.all(grad[1:] == 0)
    np.testing.assert_allclose(grad[0, 0], 2.0 * (reps[0, 0] - reps[0, 1]))


def test_untouched_users_get_zero_gradient():
    rng = np.random.default_rng(0)
    params, features, mask, batch = random_instance(TrialSize(n_users=6, batch_size=3), rng)
    envs = build_environments(2, 1.0, rng)
    grads = backward(params, batch, envs, features, mask, TrainConfig(beta=5.0, lambda_=0.1, gamma_reg=0.01))
    untouched = np.setdiff1d(np.arange(6), batch.users)
    assert len(untouched) > 0
    assert np.all(grads.user_embeddings[untouched] == 0)


def test_relative_error_floor():
    assert relative_error(np.zeros(3), np.zeros(3)) == 0.0
    assert relative_error(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 0.0
    assert relative_error(np.array([2.0]), np.array([1.0])) == pytest.approx(0.5)
