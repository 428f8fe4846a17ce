"""不变性训练目标：每个环境的 BPR 损失、方差惩罚与对齐、L2 正则的组合。

total = mean_e L_e + β·Var_e(L_e) + λ·L_align + γ·‖Φ_batch‖²，方差为总体方差。
"""
from dataclasses import dataclass, field
from typing import Dict, List, Sequence

import numpy as np

from ..datamodel.features import AvailabilityMask, ModalityFeatureBank
from ..environments.builder import EnvironmentSet, EnvironmentWeights
from ..errors import ContractError
from ..load_config.load_config import TrainConfig
from ..model.forward import alignment_loss, extract_items, fuse, predict
from ..model.params import ModelParams
from .sampling import TripleBatch


@dataclass
class LossBreakdown:
    env_losses: np.ndarray
    mean_env_loss: float
    env_variance: float
    align_loss: float
    reg_loss: float
    total: float
    coefficients: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "env_losses": [float(v) for v in self.env_losses],
            "mean_env_loss": self.mean_env_loss,
            "env_variance": self.env_variance,
            "align_loss": self.align_loss,
            "reg_loss": self.reg_loss,
            "total": self.total,
        }

    def recompose(self) -> float:
        c = self.coefficients
        return (
            self.mean_env_loss
            + c.get("beta", 0.0) * self.env_variance
            + c.get("lambda", 0.0) * self.align_loss
            + c.get("gamma_reg", 0.0) * self.reg_loss
        )


def softplus(x: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, x)


def bpr_from_margins(margins: np.ndarray) -> float:
    """mean −ln σ(Δ) = mean softplus(−Δ)"""
    return float(np.mean(softplus(-np.asarray(margins, dtype=np.float64))))


def invariant_loss(env_losses: Sequence[float], beta: float) -> float:
    """mean(L_e) + β · 总体方差(L_e)

    Raises
    ------
    ContractError
        只有一个环境却要求方差惩罚
    """
    losses = np.asarray(env_losses, dtype=np.float64)
    if len(losses) == 0:
        raise ContractError("至少需要一个环境的损失")
    if len(losses) < 2 and beta > 0:
        raise ContractError("单一环境下方差惩罚没有意义 (beta > 0)")
    return float(losses.mean() + beta * losses.var())


class BatchForward:
    """一个批次在一组环境下的前向结果，total_loss 与 backward 共用。

    所有环境共享同一批三元组与负样本，只有融合权重不同。
    """
    def __init__(self, params: ModelParams, batch: TripleBatch, envs: EnvironmentSet, features: ModalityFeatureBank, mask: AvailabilityMask):
        self.params = params
        self.batch = batch
        self.envs = envs
        self.items = batch.items()
        self.pos_idx = np.searchsorted(self.items, batch.pos_items)
        self.neg_idx = np.searchsorted(self.items, batch.neg_items)
        self.item_features = [x[self.items] for x in features.matrices]
        self.mask_rows = mask.entries[self.items]

        # (n, M, d)：批次内每个物品只计算一次
        self.reps = extract_items(params, features, self.items)
        self.user_vecs = params.user_embeddings[batch.users]
        self.thetas = envs.thetas()

        self.diff_z: List[np.ndarray] = []
        margins = []
        for env in envs:
            z = fuse(self.reps, env.theta)
            diff = z[self.pos_idx] - z[self.neg_idx]
            self.diff_z.append(diff)
            margins.append(predict(self.user_vecs, diff))
        self.margins = np.stack(margins)
        self.env_losses = np.array([bpr_from_margins(m) for m in self.margins])

    @property
    def touched_users(self) -> np.ndarray:
        return np.unique(self.batch.users)

    def align(self) -> float:
        return alignment_loss(self.reps, self.mask_rows)

    def reg(self) -> float:
        p = self.params
        total = float(np.sum(p.user_embeddings[self.touched_users] ** 2))
        for w, b in zip(p.weights, p.biases):
            total += float(np.sum(w ** 2) + np.sum(b ** 2))
        return total

    def breakdown(self, config: TrainConfig) -> LossBreakdown:
        mean_env = float(self.env_losses.mean())
        variance = float(self.env_losses.var())
        if len(self.env_losses) < 2 and config.beta > 0:
            raise ContractError("单一环境下方差惩罚没有意义 (beta > 0)")
        align = self.align() if config.lambda_ > 0 else 0.0
        reg = self.reg() if config.gamma_reg > 0 else 0.0
        total = invariant_loss(self.env_losses, config.beta) + config.lambda_ * align + config.gamma_reg * reg
        return LossBreakdown(
            env_losses=self.env_losses.copy(),
            mean_env_loss=mean_env,
            env_variance=variance,
            align_loss=align,
            reg_loss=reg,
            total=total,
            coefficients={"beta": config.beta, "lambda": config.lambda_, "gamma_reg": config.gamma_reg},
        )


def env_bpr_loss(params: ModelParams, batch: TripleBatch, features: ModalityFeatureBank, env: EnvironmentWeights) -> float:
    """单个环境的 BPR 损失：按 env 权重融合后打分，取 −ln σ(ŷ_ij − ŷ_ij') 的平均。"""
    items = batch.items()
    reps = extract_items(params, features, items)
    z = fuse(reps, env.theta)
    diff = z[np.searchsorted(items, batch.pos_items)] - z[np.searchsorted(items, batch.neg_items)]
    return bpr_from_margins(predict(params.user_embeddings[batch.users], diff))


def total_loss(params: ModelParams, batch: TripleBatch, envs: EnvironmentSet, features: ModalityFeatureBank, mask: AvailabilityMask, config: TrainConfig) -> LossBreakdown:
    return BatchForward(params, batch, envs, features, mask).breakdown(config)
