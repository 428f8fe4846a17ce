import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

import numpy as np

from ..errors import DimensionError, EmptyDatasetError, ParseError

logger = logging.getLogger(__name__)

# 原始 id 的使用率低于该阈值时才重新编号
REINDEX_DENSITY = 0.5


@dataclass
class InteractionSet:
    """隐式反馈交互集合。

    pairs 为 (n, 2) 的 int64 数组，按 (user, item) 字典序排列且无重复；
    per_user_index 是 pairs 的逆视图，user -> 升序正样本 item 数组。
    raw_user_ids / raw_item_ids 在发生重新编号时记录原始 id，否则为 None。
    """
    n_users: int
    n_items: int
    pairs: np.ndarray
    per_user_index: Dict[int, np.ndarray] = field(default_factory=dict)
    raw_user_ids: Optional[np.ndarray] = None
    raw_item_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        self.pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        if self.pairs.size:
            if self.pairs[:, 0].min() < 0 or self.pairs[:, 0].max() >= self.n_users:
                raise DimensionError(f"user id 超出范围 [0, {self.n_users})")
            if self.pairs[:, 1].min() < 0 or self.pairs[:, 1].max() >= self.n_items:
                raise DimensionError(f"item id 超出范围 [0, {self.n_items})")
        self.pairs = np.unique(self.pairs, axis=0)
        self.per_user_index = _build_index(self.pairs)

    def __len__(self) -> int:
        return len(self.pairs)

    @property
    def users(self) -> np.ndarray:
        """至少有一条交互的用户 (升序)。"""
        return np.array(sorted(self.per_user_index), dtype=np.int64)

    def positives(self, user: int) -> np.ndarray:
        return self.per_user_index.get(int(user), np.empty(0, dtype=np.int64))

    def pair_keys(self) -> np.ndarray:
        """user * n_items + item 编码后的有序键，用于向量化的成员判断。"""
        return self.pairs[:, 0] * self.n_items + self.pairs[:, 1]

    def restrict(self, keep_mask: np.ndarray) -> "InteractionSet":
        return InteractionSet(
            n_users=self.n_users,
            n_items=self.n_items,
            pairs=self.pairs[keep_mask],
            raw_user_ids=self.raw_user_ids,
            raw_item_ids=self.raw_item_ids,
        )

    def with_n_items(self, n_items: int) -> "InteractionSet":
        if n_items < self.n_items:
            raise DimensionError(f"物品数不能从 {self.n_items} 缩小到 {n_items}")
        return InteractionSet(self.n_users, n_items, self.pairs, raw_user_ids=self.raw_user_ids, raw_item_ids=self.raw_item_ids)


def _build_index(pairs: np.ndarray) -> Dict[int, np.ndarray]:
    if not len(pairs):
        return {}
    users, starts = np.unique(pairs[:, 0], return_index=True)
    bounds = np.append(starts, len(pairs))
    return {
        int(user): pairs[bounds[k]:bounds[k + 1], 1].copy()
        for k, user in enumerate(users)
    }


def _compact(ids: np.ndarray) -> tuple[np.ndarray, Optional[np.ndarray], int]:
    universe = int(ids.max()) + 1
    uniq = np.unique(ids)
    if len(uniq) >= REINDEX_DENSITY * universe:
        return ids, None, universe
    return np.searchsorted(uniq, ids), uniq, len(uniq)


def read_text(path: str | Path) -> str:
    """按 UTF-8 读取整个文本文件。

    Raises
    ------
    ParseError
        文件不是合法的 UTF-8，附带出错字节所在的行号
    """
    path = Path(path)
    blob = path.read_bytes()
    try:
        return blob.decode("utf-8")
    except UnicodeDecodeError as e:
        line_no = blob.count(b"\n", 0, e.start) + 1
        logger.error(f"{path} 第 {line_no} 行不是合法的 UTF-8")
        raise ParseError(path, line_no, f"不是合法的 UTF-8 文本 (字节偏移 {e.start})") from e


def load_interactions(path: str | Path) -> InteractionSet:
    """读取 `user<TAB>item` 格式的交互文件。

    Raises
    ------
    ParseError
        行格式错误或编码错误，附带行号
    EmptyDatasetError
        文件中没有任何交互
    """
    path = Path(path)
    rows = []
    for line_no, line in enumerate(read_text(path).split("\n"), start=1):
        line = line.rstrip("\r")
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            logger.error(f"{path} 第 {line_no} 行格式错误: {line!r}")
            raise ParseError(path, line_no, f"应为 'user<TAB>item'，实际为 {line!r}")
        try:
            user, item = int(parts[0]), int(parts[1])
        except ValueError as e:
            raise ParseError(path, line_no, f"id 应为整数: {line!r}") from e
        if user < 0 or item < 0:
            raise ParseError(path, line_no, f"id 应为非负整数: {line!r}")
        rows.append((user, item))

    if not rows:
        raise EmptyDatasetError(f"{path} 中没有任何交互！")

    raw = np.array(rows, dtype=np.int64)
    users, raw_users, n_users = _compact(raw[:, 0])
    items, raw_items, n_items = _compact(raw[:, 1])
    interactions = InteractionSet(
        n_users=n_users,
        n_items=n_items,
        pairs=np.stack([users, items], axis=1),
        raw_user_ids=raw_users,
        raw_item_ids=raw_items,
    )

    if len(interactions) < len(rows):
        logger.warning(f"{path} 中有 {len(rows) - len(interactions)} 条重复交互已合并")
    logger.info(f"读取交互 {path}: {n_users} 用户, {n_items} 物品, {len(interactions)} 条交互")
    return interactions


def write_interactions(interactions: InteractionSet, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for user, item in interactions.pairs:
            f.write(f"{user}\t{item}\n")
    logger.info(f"交互已写入 {path}")
