"""Dirichlet 采样。

Gamma 变量使用 Marsaglia–Tsang 挤压法，形状参数小于 1 时用 boost 变换
G(α) = G(α+1)·U^{1/α}。全部计算在对数域进行：α=0.01 时 U^{100} 会下溢为 0，
对数域归一化保证结果始终落在单纯形上。
"""
import numpy as np
from scipy.special import softmax

from ..errors import ParameterError


def sample_log_gamma(shape: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """逐元素返回 log G，G ~ Gamma(shape, 1)。"""
    shape = np.asarray(shape, dtype=np.float64)
    if np.any(shape <= 0) or not np.all(np.isfinite(shape)):
        raise ParameterError(f"Gamma 形状参数必须为正数，实际为 {shape}")

    boosted = shape < 1
    a = np.where(boosted, shape + 1.0, shape)
    d = a - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)

    log_g = np.empty_like(a)
    pending = np.ones(a.shape, dtype=bool)
    while pending.any():
        idx = np.flatnonzero(pending)
        x = rng.standard_normal(len(idx))
        v = (1.0 + c.flat[idx] * x) ** 3
        u = rng.random(len(idx))
        positive = v > 0
        safe_v = np.where(positive, v, 1.0)
        squeeze = u < 1.0 - 0.0331 * x ** 4
        accept = positive & (
            squeeze | (np.log(u) < 0.5 * x ** 2 + d.flat[idx] * (1.0 - safe_v + np.log(safe_v)))
        )
        done = idx[accept]
        log_g.flat[done] = np.log(d.flat[done]) + np.log(safe_v[accept])
        pending.flat[done] = False

    if boosted.any():
        idx = np.flatnonzero(boosted)
        u = rng.random(len(idx))
        # 1 - U ∈ (0, 1]，避免 log(0)
        log_g.flat[idx] += np.log1p(-u) / shape.flat[idx]
    return log_g


def sample_dirichlet(alpha: np.ndarray, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Dirichlet(α) 采样：独立 Gamma(α_m, 1) 按总和归一化。size 给定时返回 (size, M)。

    Raises
    ------
    ParameterError
        任一 α_m ≤ 0
    """
    alpha = np.asarray(alpha, dtype=np.float64)
    if alpha.ndim != 1 or len(alpha) < 1:
        raise ParameterError(f"alpha 应为一维向量，实际形状 {alpha.shape}")
    if np.any(alpha <= 0):
        raise ParameterError(f"Dirichlet 参数必须全部为正数，实际为 {alpha}")

    shape = alpha if size is None else np.broadcast_to(alpha, (size, len(alpha)))
    log_g = sample_log_gamma(shape, rng)
    return softmax(log_g, axis=-1)
