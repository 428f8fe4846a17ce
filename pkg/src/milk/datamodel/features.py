import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from ..errors import DataError, DimensionError, ParseError
from .interactions import InteractionSet, read_text

logger = logging.getLogger(__name__)

FEATURE_MAGIC = b"MFEA0001"
_HEADER = np.dtype("<u4")
_VALUES = np.dtype("<f4")


@dataclass
class ModalityFeatureBank:
    """按模态存放的稠密特征矩阵，matrices[m] 形状为 (n_items, dims[m])。"""
    matrices: List[np.ndarray]

    def __post_init__(self):
        self.matrices = [np.asarray(x, dtype=np.float64) for x in self.matrices]
        if not self.matrices:
            raise DimensionError("特征库至少需要一个模态")
        n_items = self.matrices[0].shape[0]
        for m, x in enumerate(self.matrices):
            if x.ndim != 2 or x.shape[0] != n_items:
                raise DimensionError(f"模态 {m} 的特征矩阵形状 {x.shape} 与物品数 {n_items} 不一致")
            if not np.all(np.isfinite(x)):
                raise DataError(f"模态 {m} 的特征中含有 NaN/Inf")

    @property
    def M(self) -> int:
        return len(self.matrices)

    @property
    def n_items(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def dims(self) -> List[int]:
        return [x.shape[1] for x in self.matrices]

    def rows(self, items: np.ndarray) -> "ModalityFeatureBank":
        return ModalityFeatureBank([x[items] for x in self.matrices])

    def copy(self) -> "ModalityFeatureBank":
        return ModalityFeatureBank([x.copy() for x in self.matrices])


@dataclass
class AvailabilityMask:
    """物品 × 模态的 0/1 可用性矩阵，每个物品至少有一个可用模态。"""
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 2:
            raise DimensionError(f"可用性矩阵应为二维，实际形状 {entries.shape}")
        if not np.isin(entries, (0, 1)).all():
            raise DataError("可用性矩阵只能包含 0/1")
        self.entries = entries.astype(np.int8)
        empty = np.flatnonzero(self.entries.sum(axis=1) == 0)
        if len(empty):
            raise DataError(f"{len(empty)} 个物品没有任何可用模态，例如物品 {int(empty[0])}")

    @classmethod
    def full(cls, n_items: int, M: int) -> "AvailabilityMask":
        return cls(np.ones((n_items, M), dtype=np.int8))

    @property
    def n_items(self) -> int:
        return self.entries.shape[0]

    @property
    def M(self) -> int:
        return self.entries.shape[1]

    def missing_counts(self) -> np.ndarray:
        return self.M - self.entries.sum(axis=1).astype(np.int64)

    def copy(self) -> "AvailabilityMask":
        return AvailabilityMask(self.entries.copy())


def _load_binary(path: Path) -> np.ndarray:
    blob = path.read_bytes()
    if blob[:8] != FEATURE_MAGIC:
        raise DataError(f"{path} 不是 MFEA 特征文件 (magic 不匹配)")
    if len(blob) < 16:
        raise DimensionError(f"{path} 头部不完整")
    n_rows, dim = (int(v) for v in np.frombuffer(blob, dtype=_HEADER, count=2, offset=8))
    n_values = (len(blob) - 16) // _VALUES.itemsize
    if n_values != n_rows * dim or (len(blob) - 16) % _VALUES.itemsize:
        raise DimensionError(
            f"{path} 头部声明 {n_rows}×{dim}，实际包含 {n_values} 个数值"
        )
    matrix = np.frombuffer(blob, dtype=_VALUES, offset=16).reshape(n_rows, dim)
    return matrix.astype(np.float64)


def _load_numeric_csv(path: Path, dtype, what: str) -> np.ndarray:
    text = read_text(path)
    if not text.strip():
        raise DimensionError(f"{path} 中没有任何{what}")
    try:
        return np.loadtxt(text.splitlines(), delimiter=",", dtype=dtype, ndmin=2)
    except ValueError as e:
        logger.error(f"{path} 解析失败: {e}")
        raise ParseError(path, None, f"无法解析的{what}: {e}") from e


def load_feature_matrix(path: str | Path, fmt: Optional[str] = None, expected_rows: Optional[int] = None) -> np.ndarray:
    """读取单个模态的特征矩阵，fmt 为 None 时按后缀推断 (.csv 为 CSV，其余为二进制)。"""
    path = Path(path)
    fmt = fmt or ("csv" if path.suffix.lower() == ".csv" else "binary")
    if fmt == "csv":
        matrix = _load_numeric_csv(path, np.float64, "特征行")
    elif fmt == "binary":
        matrix = _load_binary(path)
    else:
        raise DataError(f"未知的特征格式 {fmt}")

    if not np.all(np.isfinite(matrix)):
        logger.error(f"{path} 中含有 NaN/Inf")
        raise DataError(f"{path} 中含有 NaN/Inf")
    if expected_rows is not None and matrix.shape[0] != expected_rows:
        raise DimensionError(f"{path} 有 {matrix.shape[0]} 行，应为 {expected_rows} 行")
    logger.info(f"读取特征 {path}: {matrix.shape[0]}×{matrix.shape[1]}")
    return matrix


def load_features(paths: str | Path | Sequence[str | Path], fmt: Optional[str] = None, expected_rows: Optional[int] = None) -> ModalityFeatureBank:
    """每个路径对应一个模态，按给定顺序组成特征库。"""
    if isinstance(paths, (str, Path)):
        paths = [paths]
    return ModalityFeatureBank([load_feature_matrix(p, fmt, expected_rows) for p in paths])


def align_features(bank: ModalityFeatureBank, interactions: InteractionSet) -> ModalityFeatureBank:
    """让特征行与交互集合的物品编号对齐。

    交互发生重新编号时按原始 id 取行；否则要求特征行数不少于交互中的物品数。
    """
    if interactions.raw_item_ids is not None:
        if bank.n_items <= int(interactions.raw_item_ids.max()):
            raise DimensionError(
                f"特征只有 {bank.n_items} 行，无法覆盖原始物品 id {int(interactions.raw_item_ids.max())}"
            )
        return bank.rows(interactions.raw_item_ids)
    if bank.n_items < interactions.n_items:
        raise DimensionError(f"特征行数 {bank.n_items} 少于交互中的物品数 {interactions.n_items}")
    return bank


def write_feature_matrix(matrix: np.ndarray, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    matrix = np.ascontiguousarray(matrix, dtype=_VALUES)
    header = np.array(matrix.shape, dtype=_HEADER)
    with open(path, "wb") as f:
        f.write(FEATURE_MAGIC)
        f.write(header.tobytes())
        f.write(matrix.tobytes())
    logger.info(f"特征已写入 {path} ({matrix.shape[0]}×{matrix.shape[1]})")


def load_mask(path: str | Path) -> AvailabilityMask:
    """读取 n_items × M 的 0/1 可用性矩阵 CSV。"""
    return AvailabilityMask(_load_numeric_csv(Path(path), np.int64, "可用性矩阵 (只能包含 0/1)"))


def write_mask(mask: AvailabilityMask, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(path, mask.entries.astype(np.int64), fmt="%d", delimiter=",", encoding="utf-8")
