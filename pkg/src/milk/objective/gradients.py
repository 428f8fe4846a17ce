"""total_loss 的解析梯度。

方差惩罚通过 ∂total/∂L_e = 1/|E| + 2β(L_e − L̄)/|E| 耦合各环境；
对齐项的梯度只在两个模态都可用的 (物品, 模态对) 上产生，补全出来的向量不参与。
"""
import numpy as np
from scipy.special import expit

from ..datamodel.features import AvailabilityMask, ModalityFeatureBank
from ..environments.builder import EnvironmentSet
from ..load_config.load_config import TrainConfig
from ..model.forward import pair_weights
from ..model.params import ModelParams
from .losses import BatchForward
from .sampling import TripleBatch


def env_loss_weights(env_losses: np.ndarray, beta: float) -> np.ndarray:
    n_envs = len(env_losses)
    return 1.0 / n_envs + 2.0 * beta * (env_losses - env_losses.mean()) / n_envs


def alignment_grad(reps: np.ndarray, mask_rows: np.ndarray) -> np.ndarray:
    """∂L_align/∂c，形状与 reps 相同 (n, M, d)。"""
    upper = pair_weights(mask_rows)
    n_terms = upper.sum()
    if n_terms == 0:
        return np.zeros_like(reps)
    sym = upper + upper.transpose(0, 2, 1)
    degree = sym.sum(axis=2)
    return 2.0 / n_terms * (degree[:, :, None] * reps - np.einsum("jmk,jkd->jmd", sym, reps))


def backward_from(fwd: BatchForward, config: TrainConfig) -> ModelParams:
    params = fwd.params
    batch = fwd.batch
    grads = params.zeros_like()
    n_triples = len(batch)

    # dL_e/dΔ_t = −σ(−Δ_t)/B，再乘以环境权重
    coef = -expit(-fwd.margins) / n_triples
    coef *= env_loss_weights(fwd.env_losses, config.beta)[:, None]

    user_grad = np.zeros_like(fwd.user_vecs)
    item_grad = np.zeros((len(fwd.envs), len(fwd.items), params.d))
    for e in range(len(fwd.envs)):
        user_grad += coef[e][:, None] * fwd.diff_z[e]
        contrib = coef[e][:, None] * fwd.user_vecs
        np.add.at(item_grad[e], fwd.pos_idx, contrib)
        np.add.at(item_grad[e], fwd.neg_idx, -contrib)
    np.add.at(grads.user_embeddings, batch.users, user_grad)

    rep_grad = np.einsum("em,end->nmd", fwd.thetas, item_grad)
    if config.lambda_ > 0:
        rep_grad += config.lambda_ * alignment_grad(fwd.reps, fwd.mask_rows)

    for m in range(params.M):
        grads.weights[m] += rep_grad[:, m, :].T @ fwd.item_features[m]
        grads.biases[m] += rep_grad[:, m, :].sum(axis=0)

    if config.gamma_reg > 0:
        touched = fwd.touched_users
        grads.user_embeddings[touched] += 2.0 * config.gamma_reg * params.user_embeddings[touched]
        for m in range(params.M):
            grads.weights[m] += 2.0 * config.gamma_reg * params.weights[m]
            grads.biases[m] += 2.0 * config.gamma_reg * params.biases[m]
    return grads


def backward(params: ModelParams, batch: TripleBatch, envs: EnvironmentSet, features: ModalityFeatureBank, mask: AvailabilityMask, config: TrainConfig) -> ModelParams:
    """返回与 params 同形状的梯度，批次未涉及的用户行为零。"""
    return backward_from(BatchForward(params, batch, envs, features, mask), config)
