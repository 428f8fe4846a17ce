import logging
from dataclasses import dataclass

import numpy as np

from ..datamodel.interactions import InteractionSet
from ..errors import EmptyDatasetError

logger = logging.getLogger(__name__)

MAX_REJECTIONS = 100


@dataclass
class TripleBatch:
    users: np.ndarray
    pos_items: np.ndarray
    neg_items: np.ndarray

    def __len__(self) -> int:
        return len(self.users)

    def items(self) -> np.ndarray:
        """批次中出现的物品 (去重、升序)。"""
        return np.unique(np.concatenate([self.pos_items, self.neg_items]))


class TripleSampler:
    """BPR 三元组采样器。

    正样本按训练交互均匀抽取；负样本在 warm 物品中均匀抽取并拒绝用户的正样本，
    连续 MAX_REJECTIONS 次被拒后改为从该用户的非正样本集合中直接抽取。
    """
    def __init__(self, train: InteractionSet, warm_items: np.ndarray | None = None):
        if not len(train):
            raise EmptyDatasetError("训练集中没有任何交互，无法采样")
        self.train = train
        self.warm_items = np.arange(train.n_items) if warm_items is None else np.asarray(warm_items, dtype=np.int64)
        self._keys = train.pair_keys()

        # 与全部 warm 物品都有交互的用户没有可用负样本
        n_pos_warm = {
            user: int(np.isin(items, self.warm_items).sum())
            for user, items in train.per_user_index.items()
        }
        saturated = {user for user, n in n_pos_warm.items() if n >= len(self.warm_items)}
        self._eligible_pairs = np.flatnonzero(~np.isin(train.pairs[:, 0], list(saturated)))
        if saturated:
            logger.warning(f"{len(saturated)} 个用户与全部 warm 物品都有交互，采样时跳过")
        if not len(self._eligible_pairs):
            raise EmptyDatasetError("没有任何用户存在可用的负样本")

    def _is_positive(self, users: np.ndarray, items: np.ndarray) -> np.ndarray:
        keys = users * self.train.n_items + items
        pos = np.searchsorted(self._keys, keys)
        pos = np.minimum(pos, len(self._keys) - 1)
        return self._keys[pos] == keys

    def sample(self, batch_size: int, rng: np.random.Generator) -> TripleBatch:
        picked = self._eligible_pairs[rng.integers(len(self._eligible_pairs), size=batch_size)]
        users = self.train.pairs[picked, 0]
        pos_items = self.train.pairs[picked, 1]

        neg_items = self.warm_items[rng.integers(len(self.warm_items), size=batch_size)]
        rejected = np.flatnonzero(self._is_positive(users, neg_items))
        for _ in range(MAX_REJECTIONS):
            if not len(rejected):
                break
            neg_items[rejected] = self.warm_items[rng.integers(len(self.warm_items), size=len(rejected))]
            rejected = rejected[self._is_positive(users[rejected], neg_items[rejected])]

        for t in rejected:
            candidates = np.setdiff1d(self.warm_items, self.train.positives(users[t]), assume_unique=True)
            neg_items[t] = candidates[rng.integers(len(candidates))]
        if len(rejected):
            logger.debug(f"{len(rejected)} 个三元组在拒绝采样后改为扫描候选集")

        return TripleBatch(users, pos_items, neg_items)


def sample_triples(train: InteractionSet, batch_size: int, rng: np.random.Generator, warm_items: np.ndarray | None = None) -> TripleBatch:
    return TripleSampler(train, warm_items).sample(batch_size, rng)
