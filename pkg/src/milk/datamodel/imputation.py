import logging
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from ..errors import FitError, ImputeError
from .features import AvailabilityMask, ModalityFeatureBank
from .split import DatasetBundle

logger = logging.getLogger(__name__)

MAP_RIDGE = 1e-6

CrossModalMaps = Dict[Tuple[int, int], np.ndarray]


@dataclass
class TrainReference:
    """补全统计量的来源：只使用 warm 物品中该模态可用的行，避免泄露测试信息。"""
    features: ModalityFeatureBank
    mask: AvailabilityMask
    items: np.ndarray

    @classmethod
    def from_bundle(cls, bundle: DatasetBundle) -> "TrainReference":
        return cls(bundle.features, bundle.train_mask, bundle.warm_items)

    def available_rows(self, m: int) -> np.ndarray:
        items = self.items
        return items[self.mask.entries[items, m] == 1]

    def column_means(self) -> list[np.ndarray]:
        means = []
        for m, x in enumerate(self.features.matrices):
            rows = self.available_rows(m)
            if not len(rows):
                raise ImputeError(f"训练物品中没有模态 {m} 可用的行，无法计算均值")
            means.append(x[rows].mean(axis=0))
        return means


def fit_cross_modal_map(features: ModalityFeatureBank, mask: AvailabilityMask, items: Optional[np.ndarray] = None, ridge: float = MAP_RIDGE) -> CrossModalMaps:
    """对每个有序模态对 (m, m') 拟合线性映射 B，使 x^m B ≈ x^m'。

    目标为 (1/n)‖X_m B − X_m'‖² + ridge·‖B‖²，只使用两个模态都可用的物品。

    Raises
    ------
    FitError
        成对物品数少于源模态维度
    """
    items = np.arange(features.n_items) if items is None else np.asarray(items)
    maps: CrossModalMaps = {}
    for m in range(features.M):
        for m_target in range(features.M):
            if m == m_target:
                continue
            both = mask.entries[items, m].astype(bool) & mask.entries[items, m_target].astype(bool)
            paired = items[both]
            d_source = features.dims[m]
            if len(paired) < max(d_source, 1):
                raise FitError(
                    f"模态 {m}→{m_target} 只有 {len(paired)} 个成对物品，至少需要 {d_source} 个"
                )
            source = features.matrices[m][paired]
            target = features.matrices[m_target][paired]
            n = len(paired)
            gram = source.T @ source / n + ridge * np.eye(d_source)
            maps[(m, m_target)] = linalg.solve(gram, source.T @ target / n, assume_a="pos")
            logger.debug(f"拟合映射 {m}→{m_target}，成对物品 {n}")
    return maps


def impute(features: ModalityFeatureBank, mask: AvailabilityMask, strategy: str, train_reference: Optional[TrainReference] = None, maps: Optional[CrossModalMaps] = None) -> ModalityFeatureBank:
    """用给定策略替换 mask=0 的特征行，mask=1 的行保持不变。

    zero 填零向量；mean 填训练参考中该模态可用行的列均值；
    map 用同一物品编号最小的可用模态经跨模态映射得到。
    """
    if mask.entries.shape != (features.n_items, features.M):
        raise ImputeError(f"可用性矩阵形状 {mask.entries.shape} 与特征库不一致")
    if strategy not in ("zero", "mean", "map"):
        raise ImputeError(f"未知的补全策略 {strategy}")
    if strategy in ("mean", "map") and train_reference is None:
        raise ImputeError(f"{strategy} 补全需要训练参考统计量")

    out = features.copy()
    missing = mask.entries == 0
    if not missing.any():
        return out

    if strategy == "zero":
        for m, x in enumerate(out.matrices):
            x[missing[:, m]] = 0.0

    elif strategy == "mean":
        means = train_reference.column_means()
        for m, x in enumerate(out.matrices):
            x[missing[:, m]] = means[m]

    else:
        if maps is None:
            maps = fit_cross_modal_map(train_reference.features, train_reference.mask, train_reference.items)
        for item in np.flatnonzero(missing.any(axis=1)):
            available = np.flatnonzero(mask.entries[item] == 1)
            if not len(available):
                raise ImputeError(f"物品 {item} 没有可用的源模态")
            source = int(available[0])
            x_source = features.matrices[source][item]
            for m in np.flatnonzero(missing[item]):
                out.matrices[m][item] = x_source @ maps[(source, int(m))]

    logger.info(f"{strategy} 补全完成，共替换 {int(missing.sum())} 个模态行")
    return out


def prepare_features(bundle: DatasetBundle, strategy: str) -> Tuple[ModalityFeatureBank, ModalityFeatureBank]:
    """返回 (训练用特征, 评估用特征)，两者的统计量都只来自 warm 物品。"""
    reference = TrainReference.from_bundle(bundle)
    maps = None
    if strategy == "map":
        maps = fit_cross_modal_map(reference.features, reference.mask, reference.items)
    train_features = impute(bundle.features, bundle.train_mask, strategy, reference, maps)
    eval_features = impute(bundle.features, bundle.test_mask, strategy, reference, maps)
    return train_features, eval_features
