"""前向计算：模态提取、跨模态对齐损失、加权融合与内积打分。

批量形式的模态表示统一为形状 (n, M, d) 的数组，reps[j, m] 即 c^m_j。
"""
import numpy as np

from ..datamodel.features import ModalityFeatureBank
from ..errors import ContractError, DimensionError
from .params import ModelParams

SIMPLEX_TOL = 1e-9


def extract(params: ModelParams, m: int, x: np.ndarray) -> np.ndarray:
    """c = W^m x + b^m"""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != params.dims[m]:
        raise DimensionError(f"模态 {m} 的特征长度应为 {params.dims[m]}，实际为 {x.shape[-1]}")
    return x @ params.weights[m].T + params.biases[m]


def extract_items(params: ModelParams, features: ModalityFeatureBank, items: np.ndarray) -> np.ndarray:
    """对一组物品提取全部模态的表示，返回 (len(items), M, d)。"""
    if features.dims != params.dims:
        raise DimensionError(f"特征维度 {features.dims} 与模型 {params.dims} 不一致")
    return np.stack(
        [extract(params, m, features.matrices[m][items]) for m in range(params.M)],
        axis=1,
    )


def pair_weights(mask_rows: np.ndarray) -> np.ndarray:
    """(n, M, M) 的 a_jm·a_jm' 上三角指示，只保留 m < m' 的模态对。"""
    a = np.asarray(mask_rows, dtype=np.float64)
    both = a[:, :, None] * a[:, None, :]
    return np.triu(both, k=1)


def alignment_loss(reps: np.ndarray, mask_rows: np.ndarray) -> float:
    """两两模态表示的平方距离，只统计两个模态都可用的 (物品, 模态对)，取平均。"""
    reps = np.asarray(reps, dtype=np.float64)
    if reps.shape[0] == 0:
        raise DimensionError("对齐损失需要非空批次")
    weights = pair_weights(mask_rows)
    n_terms = weights.sum()
    if n_terms == 0:
        return 0.0
    diff = reps[:, :, None, :] - reps[:, None, :, :]
    sq_dist = np.einsum("jabk,jabk->jab", diff, diff)
    return float((weights * sq_dist).sum() / n_terms)


def check_simplex(weights: np.ndarray) -> np.ndarray:
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 1 or np.any(weights < 0) or abs(weights.sum() - 1.0) > SIMPLEX_TOL:
        raise ContractError(f"融合权重 {weights} 不在单纯形上")
    return weights


def fuse(reps: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """z = Σ_m θ^m c^m，reps 可以是单个物品 (M, d) 或批量 (n, M, d)。"""
    weights = check_simplex(weights)
    reps = np.asarray(reps, dtype=np.float64)
    if reps.shape[-2] != len(weights):
        raise DimensionError(f"权重长度 {len(weights)} 与模态数 {reps.shape[-2]} 不一致")
    return np.einsum("m,...md->...d", weights, reps)


def equal_weights(M: int) -> np.ndarray:
    return np.full(M, 1.0 / M)


def predict(u: np.ndarray, z: np.ndarray) -> float | np.ndarray:
    """ŷ = u·z，支持按行批量计算。"""
    u = np.asarray(u, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if u.shape[-1] != z.shape[-1]:
        raise DimensionError(f"用户向量长度 {u.shape[-1]} 与物品向量长度 {z.shape[-1]} 不一致")
    scores = np.einsum("...d,...d->...", u, z)
    return float(scores) if scores.ndim == 0 else scores
