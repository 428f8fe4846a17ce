import logging
from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..errors import ParameterError
from .features import ModalityFeatureBank
from .interactions import InteractionSet

logger = logging.getLogger(__name__)


@dataclass
class SyntheticSpec:
    """合成基准的生成参数。

    潜因子的 k 个维度按顺序均分给 M 个模态：模态 m 以增益 1 观察自己那一块，以增益 cross_gain
    观察其余各块，再经随机投影加上标准差为 noise_std 的高斯噪声。默认 cross_gain=0.3、noise_std=0.3，
    单个模态只能较粗糙地恢复另一模态负责的潜因子，缺失一个模态会带来明显的信息损失。
    cross_gain=1 时各模态是同一潜因子的不同投影；shared_projection 为 True 时所有模态共用同一个投影矩阵，
    且不做分块衰减。
    """
    n_users: int = 500
    n_items: int = 300
    k: int = 8
    dims: List[int] = field(default_factory=lambda: [32, 32])
    noise_std: float = 0.3
    interactions_per_user: int = 20
    seed: int = 0
    shared_projection: bool = False
    cross_gain: float = 0.3

    def __post_init__(self):
        if self.k < 1:
            raise ParameterError(f"潜在维度 k 应 ≥ 1，实际为 {self.k}")
        if self.interactions_per_user < 1 or self.interactions_per_user > self.n_items:
            raise ParameterError(f"interactions_per_user 应在 [1, {self.n_items}] 内")
        if not self.dims or any(d < self.k for d in self.dims):
            raise ParameterError(f"每个模态的特征维度都应 ≥ k={self.k}，实际为 {self.dims}")
        if self.noise_std < 0:
            raise ParameterError("noise_std 应为非负数")
        if not 0 <= self.cross_gain <= 1:
            raise ParameterError(f"cross_gain 应在 [0, 1] 内，实际为 {self.cross_gain}")
        if self.shared_projection and len(set(self.dims)) != 1:
            raise ParameterError("共用投影时所有模态维度必须相同")

    @property
    def M(self) -> int:
        return len(self.dims)


def latent_gains(spec: SyntheticSpec) -> np.ndarray:
    """(M, k) 的增益矩阵：第 m 行在模态 m 负责的潜因子块上为 1，其余为 cross_gain。"""
    if spec.shared_projection:
        return np.ones((spec.M, spec.k))
    gains = np.full((spec.M, spec.k), spec.cross_gain)
    for m, block in enumerate(np.array_split(np.arange(spec.k), spec.M)):
        gains[m, block] = 1.0
    return gains


def generate_synthetic(spec: SyntheticSpec) -> Tuple[InteractionSet, ModalityFeatureBank]:
    """生成可由内容解释的隐式反馈数据。

    物品潜因子 z*_j 与用户潜因子 u*_i 取自标准正态；模态特征 x^m_j = P^m (g^m ⊙ z*_j) + ε，
    g^m 见 `latent_gains`；每个用户取 u*_i·z*_j 加 Gumbel 噪声后得分最高的 interactions_per_user 个物品为正样本。
    """
    rng = np.random.default_rng(spec.seed)
    item_latent = rng.standard_normal((spec.n_items, spec.k))
    user_latent = rng.standard_normal((spec.n_users, spec.k))

    projections = []
    for m, dim in enumerate(spec.dims):
        if spec.shared_projection and m > 0:
            projections.append(projections[0])
        else:
            projections.append(rng.standard_normal((dim, spec.k)) / np.sqrt(spec.k))

    matrices = []
    for projection, gains in zip(projections, latent_gains(spec)):
        x = (item_latent * gains) @ projection.T
        if spec.noise_std > 0:
            x = x + spec.noise_std * rng.standard_normal(x.shape)
        matrices.append(x)

    scores = user_latent @ item_latent.T + rng.gumbel(size=(spec.n_users, spec.n_items))
    top = np.argpartition(-scores, spec.interactions_per_user - 1, axis=1)[:, :spec.interactions_per_user]
    users = np.repeat(np.arange(spec.n_users), spec.interactions_per_user)
    interactions = InteractionSet(spec.n_users, spec.n_items, np.stack([users, top.ravel()], axis=1))

    logger.info(
        f"合成数据: {spec.n_users} 用户, {spec.n_items} 物品, {spec.M} 个模态, {len(interactions)} 条交互, "
        f"cross_gain={spec.cross_gain}, noise_std={spec.noise_std}"
    )
    return interactions, ModalityFeatureBank(matrices)
