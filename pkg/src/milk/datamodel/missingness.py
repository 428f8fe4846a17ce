import logging
from dataclasses import dataclass

import numpy as np

from ..errors import ProtocolError
from .features import AvailabilityMask
from .split import DatasetBundle, floor_count

logger = logging.getLogger(__name__)


@dataclass
class MissingnessParams:
    train_missing_ratio: float = 0.3
    test_missing_ratio: float = 0.5
    max_missing_per_item: int = 1


# 标准缺失协议
FTMT = MissingnessParams(train_missing_ratio=0.0, test_missing_ratio=0.5, max_missing_per_item=1)
MTMT = MissingnessParams(train_missing_ratio=0.3, test_missing_ratio=0.5, max_missing_per_item=1)
FTFT = MissingnessParams(train_missing_ratio=0.0, test_missing_ratio=0.0, max_missing_per_item=1)

_STANDARD = {"FTFT": FTFT, "FTMT": FTMT, "MTMT": MTMT}


def _check(params: MissingnessParams, M: int):
    for name in ("train_missing_ratio", "test_missing_ratio"):
        ratio = getattr(params, name)
        if not 0 <= ratio <= 1:
            raise ProtocolError(f"{name} 应在 [0, 1] 内，实际为 {ratio}")
    if params.train_missing_ratio == 0 and params.test_missing_ratio == 0:
        return
    if params.max_missing_per_item >= M:
        raise ProtocolError(
            f"max_missing_per_item={params.max_missing_per_item} 会去掉全部 {M} 个模态"
        )
    if params.max_missing_per_item < 1:
        raise ProtocolError("缺失比例大于 0 时 max_missing_per_item 至少为 1")


def _drop_modalities(entries: np.ndarray, items: np.ndarray, ratio: float, max_missing: int, rng: np.random.Generator) -> np.ndarray:
    """在 items 中选取 ⌊ratio · |items|⌋ 个物品，平均分配到缺失 1..max_missing 个模态的分组。"""
    n_selected = floor_count(ratio, len(items))
    if n_selected == 0:
        return entries
    M = entries.shape[1]
    selected = rng.choice(items, size=n_selected, replace=False)
    # 余数分给缺失数较少的分组
    base, extra = divmod(n_selected, max_missing)
    group_sizes = [base + (1 if k < extra else 0) for k in range(max_missing)]

    start = 0
    for n_missing, size in enumerate(group_sizes, start=1):
        for item in selected[start:start + size]:
            dropped = rng.choice(M, size=n_missing, replace=False)
            entries[item, dropped] = 0
        start += size
    return entries


def apply_missingness(bundle: DatasetBundle, protocol: str, params: MissingnessParams | None = None, seed: int = 0) -> DatasetBundle:
    """按协议模拟模态缺失，返回带新可用性矩阵的数据集。

    FTFT 全部可用；FTMT 训练全可用，验证/测试物品各有 50% 随机缺失一个模态；
    MTMT 在 FTMT 的基础上让 30% 的 warm 物品缺失一个模态；custom 使用 params 给出的比例与缺失数。
    验证与测试物品分别独立地套用相同的比例。
    """
    if protocol in _STANDARD:
        params = _STANDARD[protocol]
    elif protocol == "custom":
        if params is None:
            raise ProtocolError("custom 协议需要提供 MissingnessParams")
    else:
        raise ProtocolError(f"未知的缺失协议 {protocol}")

    M = bundle.M
    _check(params, M)
    rng = np.random.default_rng(seed)

    train_entries = np.ones((bundle.n_items, M), dtype=np.int8)
    test_entries = np.ones((bundle.n_items, M), dtype=np.int8)

    _drop_modalities(train_entries, bundle.warm_items, params.train_missing_ratio, params.max_missing_per_item, rng)
    for items in (bundle.val_items, bundle.test_items):
        _drop_modalities(test_entries, items, params.test_missing_ratio, params.max_missing_per_item, rng)

    train_mask = AvailabilityMask(train_entries)
    test_mask = AvailabilityMask(test_entries)
    logger.info(
        f"缺失协议 {protocol}: 训练缺失物品 {int((train_mask.missing_counts() > 0).sum())}, "
        f"新物品缺失 {int((test_mask.missing_counts() > 0).sum())}"
    )
    return bundle.with_masks(train_mask, test_mask, protocol=protocol)
