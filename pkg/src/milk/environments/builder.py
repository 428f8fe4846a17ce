import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from ..errors import ContractError, ParameterError
from ..model.forward import SIMPLEX_TOL, equal_weights
from .dirichlet import sample_dirichlet

logger = logging.getLogger(__name__)

VARIANTS = ("full", "no_e0", "no_cyclic_shift", "frozen", "single")


@dataclass(frozen=True)
class EnvironmentWeights:
    env_id: int
    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.ndim != 1 or np.any(theta < 0) or abs(theta.sum() - 1.0) > SIMPLEX_TOL:
            raise ContractError(f"环境 {self.env_id} 的权重 {theta} 不在单纯形上")
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class EnvironmentSet:
    members: tuple

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, index: int) -> EnvironmentWeights:
        return self.members[index]

    def thetas(self) -> np.ndarray:
        """(|E|, M) 的权重矩阵。"""
        return np.stack([env.theta for env in self.members])


def cyclic_shift(theta: Sequence[float]) -> np.ndarray:
    """(θ¹,…,θ^M) → (θ^M, θ¹,…,θ^{M−1})"""
    return np.roll(np.asarray(theta, dtype=np.float64), 1)


def _alpha_vector(alpha: float | Sequence[float], M: int) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim == 0:
        alpha = np.full(M, float(alpha))
    if alpha.shape != (M,):
        raise ParameterError(f"alpha 的长度 {alpha.shape} 与模态数 {M} 不一致")
    return alpha


def _shifted(theta_1: np.ndarray, M: int) -> List[np.ndarray]:
    thetas = [theta_1]
    for _ in range(M - 1):
        thetas.append(cyclic_shift(thetas[-1]))
    return thetas


def build_environments(M: int, alpha: float | Sequence[float], rng: np.random.Generator, variant: str = "full") -> EnvironmentSet:
    """构造一次迭代使用的融合权重环境。

    full: 环境 0 为等权重，Θ₁ ~ Dirichlet(α)，Θ₂..Θ_M 为 Θ₁ 的逐次循环移位；
    no_e0: 去掉环境 0；no_cyclic_shift: 环境 0 加 M 个独立的 Dirichlet 样本；
    single: 只有等权重环境 (ERM)。frozen 的采样方式与 full 相同，复用由 EnvironmentSampler 负责。
    """
    if M < 2:
        raise ParameterError(f"环境构造需要至少 2 个模态，实际为 {M}")
    if variant not in VARIANTS:
        raise ParameterError(f"未知的环境构造方式 {variant}，可选 {VARIANTS}")

    if variant == "single":
        return EnvironmentSet((EnvironmentWeights(0, equal_weights(M)),))

    alpha = _alpha_vector(alpha, M)
    if variant == "no_cyclic_shift":
        mixed = list(sample_dirichlet(alpha, rng, size=M))
    else:
        mixed = _shifted(sample_dirichlet(alpha, rng), M)

    members = [] if variant == "no_e0" else [EnvironmentWeights(0, equal_weights(M))]
    members.extend(EnvironmentWeights(e, theta) for e, theta in enumerate(mixed, start=1))
    return EnvironmentSet(tuple(members))


class EnvironmentSampler:
    """训练循环持有的环境来源：每个优化步调用一次 next()。

    frozen 只在第一次调用时采样，之后一直复用；其余方式每步重新采样。
    """
    def __init__(self, M: int, alpha: float | Sequence[float], rng: np.random.Generator, variant: str = "full"):
        self.M = M
        self.alpha = alpha
        self.rng = rng
        self.variant = variant
        self._frozen: Optional[EnvironmentSet] = None

    def next(self) -> EnvironmentSet:
        if self.variant == "frozen":
            if self._frozen is None:
                self._frozen = build_environments(self.M, self.alpha, self.rng, "full")
                logger.info(f"固定环境权重: {self._frozen.thetas().round(4).tolist()}")
            return self._frozen
        return build_environments(self.M, self.alpha, self.rng, self.variant)
