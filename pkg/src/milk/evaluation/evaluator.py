import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..datamodel.features import AvailabilityMask, ModalityFeatureBank
from ..datamodel.split import DatasetBundle
from ..errors import EmptyReportError
from ..model.params import ModelParams
from .inference import infer_new_item_scores
from .metrics import batch_recall_ndcg, ranked_hits

logger = logging.getLogger(__name__)

GROUPS = ("full", "missing_one", "missing_two")


@dataclass
class MetricReport:
    """metrics[str(K)] = {"recall": …, "ndcg": …}；groups 的结构相同，另带 n_users。"""
    protocol: str
    split: str
    seed: int
    n_users: int
    metrics: Dict[str, Dict[str, float]]
    groups: Dict[str, Dict[str, object]] = field(default_factory=dict)
    variant: Optional[str] = None
    per_user: Dict[str, Dict[str, Dict[str, np.ndarray]]] = field(default_factory=dict, repr=False)
    group_members: Dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    def metric(self, name: str, k: int) -> float:
        return self.metrics[str(k)][name]

    def to_dict(self) -> Dict[str, object]:
        data: Dict[str, object] = {
            "protocol": self.protocol,
            "split": self.split,
            "K": self.metrics,
            "groups": self.groups,
            "n_users": self.n_users,
            "seed": self.seed,
        }
        if self.variant is not None:
            data["variant"] = self.variant
        return data

    def rows(self) -> List[Dict[str, object]]:
        """CSV 行：每个 (分组, 指标, K) 一行，overall 表示全部物品。"""
        variant = self.variant or "default"
        rows = []
        for k, values in self.metrics.items():
            for name, value in values.items():
                rows.append({"variant": variant, "group": "overall", "metric": f"{name}@{k}", "value": value})
        for group, payload in self.groups.items():
            for k, values in payload.get("K", {}).items():
                for name, value in values.items():
                    rows.append({"variant": variant, "group": group, "metric": f"{name}@{k}", "value": value})
        return rows


def item_groups(mask: AvailabilityMask, items: np.ndarray) -> np.ndarray:
    """0 = full，1 = missing_one，2 = 缺失两个及以上。"""
    return np.minimum(mask.missing_counts()[items], 2)


def _metrics_from_order(order: np.ndarray, relevant: np.ndarray, ks: Sequence[int]) -> Dict[str, Dict[str, np.ndarray]]:
    n_relevant = relevant.sum(axis=1)
    out = {}
    for k in ks:
        hits = ranked_hits(order, relevant, k)
        recall, ndcg = batch_recall_ndcg(hits, n_relevant, k)
        out[str(k)] = {"recall": recall, "ndcg": ndcg}
    return out


def _summarize(per_user: Dict[str, Dict[str, np.ndarray]]) -> Dict[str, Dict[str, float]]:
    return {k: {name: float(values.mean()) for name, values in v.items()} for k, v in per_user.items()}


def evaluate(bundle: DatasetBundle, params: ModelParams, features: ModalityFeatureBank, split: str = "test", ks: Sequence[int] = (10, 20), group_breakdown: bool = False, keep_per_user: bool = False) -> MetricReport:
    """在某个划分的新物品池上做全排序评估。

    候选集只包含该划分的新物品；只评估在该划分上至少有一个正样本且有训练嵌入的用户。
    打分只依赖参数与特征，不读取被评估的交互。

    Raises
    ------
    EmptyReportError
        没有可评估的用户
    """
    candidates = np.sort(bundle.split_items(split))
    pairs = bundle.split_pairs(split)
    trained = set(bundle.trained_users.tolist())
    users = np.array([u for u in pairs.users.tolist() if u in trained], dtype=np.int64)
    skipped = len(pairs.users) - len(users)
    if skipped:
        logger.warning(f"{split} 中有 {skipped} 个用户没有训练嵌入，已跳过")
    if not len(users) or not len(candidates):
        raise EmptyReportError(f"{split} 划分上没有可评估的用户")

    relevant = np.zeros((len(users), len(candidates)), dtype=bool)
    for row, user in enumerate(users):
        relevant[row, np.searchsorted(candidates, pairs.positives(user))] = True

    scores, _ = infer_new_item_scores(params, features, users, candidates)
    # candidates 升序，稳定排序即可保证同分时 id 小者在前
    order = np.argsort(-scores, axis=1, kind="stable")
    per_user = _metrics_from_order(order, relevant, ks)
    report = MetricReport(
        protocol=bundle.protocol,
        split=split,
        seed=bundle.seed,
        n_users=len(users),
        metrics=_summarize(per_user),
    )
    if keep_per_user:
        report.per_user["overall"] = per_user

    if group_breakdown:
        labels = item_groups(bundle.test_mask, candidates)
        for g, name in enumerate(GROUPS):
            group_relevant = relevant & (labels == g)[None, :]
            has_group = group_relevant.any(axis=1)
            if not has_group.any():
                report.groups[name] = {"K": {}, "n_users": 0}
                continue
            group_per_user = _metrics_from_order(order[has_group], group_relevant[has_group], ks)
            report.groups[name] = {"K": _summarize(group_per_user), "n_users": int(has_group.sum())}
            if keep_per_user:
                report.per_user[name] = group_per_user
                report.group_members[name] = np.flatnonzero(has_group)

    logger.info(f"{split} 评估完成: {len(users)} 个用户, {len(candidates)} 个候选物品, {report.metrics}")
    return report


def write_report(report: MetricReport, out_dir: str | Path, name: str) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    json_path = out_dir / f"{name}.json"
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=4, ensure_ascii=False)
    write_rows(report.rows(), out_dir / f"{name}.csv")
    return json_path


def write_rows(rows: List[Dict[str, object]], path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if not rows:
        path.write_text("", encoding="utf-8")
        return
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
