import logging
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from ..errors import DimensionError, DivergenceError
from ..model.params import ModelParams

logger = logging.getLogger(__name__)

BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8


@dataclass
class OptimizerState:
    """与 ModelParams 逐张量对应的一阶/二阶矩估计和步数。"""
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0

    @classmethod
    def for_params(cls, params: ModelParams) -> "OptimizerState":
        tensors = params.tensors()
        return cls(
            m={k: np.zeros_like(t) for k, t in tensors.items()},
            v={k: np.zeros_like(t) for k, t in tensors.items()},
        )


def adam_step(state: OptimizerState, params: ModelParams, gradients: ModelParams, lr: float) -> None:
    """原地执行一步带偏差校正的 Adam 更新。

    Raises
    ------
    DivergenceError
        梯度中出现 NaN/Inf，此时参数与状态都不被修改
    """
    grads = gradients.tensors()
    bad = {k: int(np.count_nonzero(~np.isfinite(g))) for k, g in grads.items()}
    bad = {k: n for k, n in bad.items() if n}
    if bad:
        logger.error(f"第 {state.step + 1} 步梯度出现非有限值: {bad}")
        raise DivergenceError(f"梯度中出现 NaN/Inf: {bad}", diagnostics={"step": state.step + 1, "non_finite": bad})

    tensors = params.tensors()
    for name, param in tensors.items():
        if state.m[name].shape != param.shape or grads[name].shape != param.shape:
            raise DimensionError(f"{name} 的梯度或优化器状态形状与参数 {param.shape} 不一致")

    state.step += 1
    # 偏差校正项每步只计算一次
    bc1 = 1.0 - BETA1 ** state.step
    bc2 = 1.0 - BETA2 ** state.step
    step_size = lr / bc1

    for name, param in tensors.items():
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= BETA1
        m += (1.0 - BETA1) * g
        v *= BETA2
        v += (1.0 - BETA2) * (g * g)
        param -= step_size * m / (np.sqrt(v / bc2) + EPSILON)
