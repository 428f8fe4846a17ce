import math
from typing import Iterable, Sequence

import numpy as np


def rank_items(scores: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    """按分数降序排列候选物品，同分时 item id 小者在前。scores 可为 (n,) 或 (n_users, n)。"""
    scores = np.asarray(scores, dtype=np.float64)
    candidates = np.asarray(candidates)
    # 先按 id 升序，再做稳定排序，保证同分的次序由 id 决定
    order_by_id = np.argsort(candidates, kind="stable")
    sorted_scores = scores[..., order_by_id]
    order = np.argsort(-sorted_scores, axis=-1, kind="stable")
    return candidates[order_by_id][order]


def recall_at_k(ranking: Sequence[int], relevant: Iterable[int], k: int) -> float:
    relevant = set(relevant)
    if not relevant:
        raise ValueError("relevant 不能为空")
    hits = sum(1 for item in list(ranking)[:k] if item in relevant)
    return hits / len(relevant)


def ndcg_at_k(ranking: Sequence[int], relevant: Iterable[int], k: int) -> float:
    relevant = set(relevant)
    if not relevant:
        raise ValueError("relevant 不能为空")
    dcg = 0.0
    for rank, item in enumerate(list(ranking)[:k], start=1):
        if item in relevant:
            dcg += 1.0 / math.log2(rank + 1)
    idcg = sum(1.0 / math.log2(rank + 1) for rank in range(1, min(len(relevant), k) + 1))
    return dcg / idcg


def ranked_hits(order: np.ndarray, relevant: np.ndarray, k: int) -> np.ndarray:
    """order 与 relevant 都按候选位置索引，返回前 k 位的 (n_users, k) 命中矩阵。"""
    return np.take_along_axis(relevant, order[:, :k], axis=1)


def batch_recall_ndcg(hits: np.ndarray, n_relevant: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """由命中矩阵向量化计算每个用户的 Recall@K 与 NDCG@K。"""
    hits = hits[:, :k].astype(np.float64)
    discounts = 1.0 / np.log2(np.arange(2, hits.shape[1] + 2))
    recall = hits.sum(axis=1) / n_relevant
    dcg = hits @ discounts
    ideal_len = np.minimum(n_relevant, k)
    ideal_cum = np.concatenate([[0.0], np.cumsum(1.0 / np.log2(np.arange(2, k + 2)))])
    idcg = ideal_cum[ideal_len]
    return recall, dcg / idcg
