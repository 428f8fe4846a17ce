import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from ..errors import DataError, SplitError
from .features import AvailabilityMask, ModalityFeatureBank
from .interactions import InteractionSet

logger = logging.getLogger(__name__)


@dataclass
class DatasetBundle:
    """新物品划分后的数据集。

    item id 始终保持全局编号，train 只包含 warm 物品上的交互；
    train_mask 描述 warm 物品的模态可用性，test_mask 描述验证/测试物品的模态可用性。
    """
    train: InteractionSet
    warm_items: np.ndarray
    val_items: np.ndarray
    test_items: np.ndarray
    val_pairs: InteractionSet
    test_pairs: InteractionSet
    features: ModalityFeatureBank
    train_mask: AvailabilityMask
    test_mask: AvailabilityMask
    seed: int = 0
    new_ratio: float = 0.2
    protocol: str = "FTFT"

    def __post_init__(self):
        self.validate()

    @property
    def n_users(self) -> int:
        return self.train.n_users

    @property
    def n_items(self) -> int:
        return self.train.n_items

    @property
    def M(self) -> int:
        return self.features.M

    @property
    def trained_users(self) -> np.ndarray:
        """划分后仍有训练交互的用户，只有他们拥有训练过的嵌入。"""
        return self.train.users

    def split_items(self, split: str) -> np.ndarray:
        if split == "val":
            return self.val_items
        if split == "test":
            return self.test_items
        raise DataError(f"未知的划分 {split}，可选 val / test")

    def split_pairs(self, split: str) -> InteractionSet:
        if split == "val":
            return self.val_pairs
        if split == "test":
            return self.test_pairs
        raise DataError(f"未知的划分 {split}，可选 val / test")

    def validate(self):
        universe = np.concatenate([self.warm_items, self.val_items, self.test_items])
        if len(universe) != self.n_items or len(np.unique(universe)) != self.n_items:
            raise SplitError("warm / val / test 物品集合没有构成物品全集的划分")
        new_items = np.concatenate([self.val_items, self.test_items])
        if len(self.train) and np.isin(self.train.pairs[:, 1], new_items).any():
            raise SplitError("训练集中出现了新物品的交互")
        if self.features.n_items != self.n_items:
            raise SplitError(f"特征行数 {self.features.n_items} 与物品数 {self.n_items} 不一致")
        for mask in (self.train_mask, self.test_mask):
            if mask.entries.shape != (self.n_items, self.M):
                raise SplitError(f"可用性矩阵形状 {mask.entries.shape} 应为 {(self.n_items, self.M)}")

    def with_masks(self, train_mask: AvailabilityMask, test_mask: AvailabilityMask, protocol: Optional[str] = None) -> "DatasetBundle":
        return DatasetBundle(
            train=self.train,
            warm_items=self.warm_items,
            val_items=self.val_items,
            test_items=self.test_items,
            val_pairs=self.val_pairs,
            test_pairs=self.test_pairs,
            features=self.features,
            train_mask=train_mask,
            test_mask=test_mask,
            seed=self.seed,
            new_ratio=self.new_ratio,
            protocol=protocol or self.protocol,
        )

    def manifest(self) -> Dict[str, Any]:
        return {
            "seed": int(self.seed),
            "new_ratio": float(self.new_ratio),
            "protocol": self.protocol,
            "n_users": int(self.n_users),
            "n_items": int(self.n_items),
            "M": int(self.M),
            "warm_items": self.warm_items.tolist(),
            "val_items": self.val_items.tolist(),
            "test_items": self.test_items.tolist(),
        }


def floor_count(ratio: float, n: int) -> int:
    """⌊ratio · n⌋，容忍浮点乘法的舍入误差 (0.29 · 100 应为 29)。"""
    return int(np.floor(ratio * n + 1e-9))


def _assemble(interactions: InteractionSet, features: ModalityFeatureBank, val_items: np.ndarray, test_items: np.ndarray, seed: int, new_ratio: float) -> DatasetBundle:
    val_items = np.sort(np.asarray(val_items, dtype=np.int64))
    test_items = np.sort(np.asarray(test_items, dtype=np.int64))
    new_items = np.concatenate([val_items, test_items])
    warm_items = np.setdiff1d(np.arange(interactions.n_items), new_items)

    item_col = interactions.pairs[:, 1]
    val_hit = np.isin(item_col, val_items)
    test_hit = np.isin(item_col, test_items)
    train = interactions.restrict(~(val_hit | test_hit))

    dropped = len(interactions.users) - len(train.users)
    if dropped:
        logger.warning(f"{dropped} 个用户在划分后没有训练交互，已从训练中移除")

    full_mask = AvailabilityMask.full(interactions.n_items, features.M)
    return DatasetBundle(
        train=train,
        warm_items=warm_items,
        val_items=val_items,
        test_items=test_items,
        val_pairs=interactions.restrict(val_hit),
        test_pairs=interactions.restrict(test_hit),
        features=features,
        train_mask=full_mask,
        test_mask=full_mask.copy(),
        seed=seed,
        new_ratio=new_ratio,
        protocol="FTFT",
    )


def make_new_item_split(interactions: InteractionSet, features: ModalityFeatureBank, new_ratio: float, seed: int) -> DatasetBundle:
    """随机抽取 ⌊new_ratio · n_items⌋ 个物品作为新物品，一半验证一半测试，并删除它们的全部交互。

    Raises
    ------
    SplitError
        比例不在 (0, 1) 内，或新物品少于 2 个
    """
    if not 0 < new_ratio < 1:
        raise SplitError(f"new_ratio 应在 (0, 1) 内，实际为 {new_ratio}")
    if features.n_items != interactions.n_items:
        raise SplitError(f"特征行数 {features.n_items} 与物品数 {interactions.n_items} 不一致")

    n_new = floor_count(new_ratio, interactions.n_items)
    if n_new < 2:
        raise SplitError(f"new_ratio={new_ratio} 在 {interactions.n_items} 个物品上只产生 {n_new} 个新物品")

    rng = np.random.default_rng(seed)
    new_items = rng.choice(interactions.n_items, size=n_new, replace=False)
    n_val = n_new // 2
    bundle = _assemble(interactions, features, new_items[:n_val], new_items[n_val:], seed, new_ratio)
    logger.info(
        f"新物品划分完成: warm {len(bundle.warm_items)}, val {len(bundle.val_items)}, "
        f"test {len(bundle.test_items)}, 训练交互 {len(bundle.train)}"
    )
    return bundle


def bundle_from_manifest(interactions: InteractionSet, features: ModalityFeatureBank, manifest: Dict[str, Any], train_mask: Optional[AvailabilityMask] = None, test_mask: Optional[AvailabilityMask] = None) -> DatasetBundle:
    """按 manifest 记录的物品划分重建数据集，不消耗任何随机数。"""
    try:
        val_items = np.array(manifest["val_items"], dtype=np.int64)
        test_items = np.array(manifest["test_items"], dtype=np.int64)
        seed = int(manifest["seed"])
    except (KeyError, TypeError, ValueError) as e:
        raise SplitError(f"manifest 缺少必要字段: {e}") from e

    if int(manifest.get("n_items", interactions.n_items)) != interactions.n_items:
        raise SplitError(f"manifest 记录 {manifest.get('n_items')} 个物品，数据中有 {interactions.n_items} 个")

    bundle = _assemble(interactions, features, val_items, test_items, seed, float(manifest.get("new_ratio", 0.2)))
    if train_mask is not None or test_mask is not None:
        bundle = bundle.with_masks(
            train_mask or bundle.train_mask,
            test_mask or bundle.test_mask,
            protocol=manifest.get("protocol", bundle.protocol),
        )
    return bundle
