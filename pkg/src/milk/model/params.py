import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence

import numpy as np

from ..errors import DataError, DimensionError

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"MCKP0001"
INIT_STD = 0.01
_HEADER = np.dtype("<u4")
_VALUES = np.dtype("<f4")


@dataclass
class ModelParams:
    """用户嵌入表 U (n_users × d) 与每个模态的仿射提取器 W^m (d × d_x^m)、b^m (d)。"""
    user_embeddings: np.ndarray
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases):
            raise DimensionError("W 与 b 的模态数不一致")
        d = self.d
        for m, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape[0] != d or b.shape != (d,):
                raise DimensionError(f"模态 {m} 的提取器形状 W{w.shape} b{b.shape} 与 d={d} 不一致")

    @property
    def n_users(self) -> int:
        return self.user_embeddings.shape[0]

    @property
    def d(self) -> int:
        return self.user_embeddings.shape[1]

    @property
    def M(self) -> int:
        return len(self.weights)

    @property
    def dims(self) -> List[int]:
        return [w.shape[1] for w in self.weights]

    def tensors(self) -> Dict[str, np.ndarray]:
        """按名字返回全部参数张量 (引用而非拷贝)，优化器与梯度检验都按这个顺序遍历。"""
        named = {"user_embeddings": self.user_embeddings}
        for m in range(self.M):
            named[f"W{m}"] = self.weights[m]
            named[f"b{m}"] = self.biases[m]
        return named

    def copy(self) -> "ModelParams":
        return ModelParams(
            self.user_embeddings.copy(),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def zeros_like(self) -> "ModelParams":
        return ModelParams(
            np.zeros_like(self.user_embeddings),
            [np.zeros_like(w) for w in self.weights],
            [np.zeros_like(b) for b in self.biases],
        )

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(t)) for t in self.tensors().values())


def init_params(n_users: int, dims: Sequence[int], d: int = 64, seed: int | np.random.SeedSequence = 0) -> ModelParams:
    """所有权重取自 N(0, 0.01²)，偏置为零。"""
    if d < 1:
        raise DimensionError(f"表示维度 d 应 ≥ 1，实际为 {d}")
    rng = np.random.default_rng(seed)
    return ModelParams(
        user_embeddings=INIT_STD * rng.standard_normal((n_users, d)),
        weights=[INIT_STD * rng.standard_normal((d, dim)) for dim in dims],
        biases=[np.zeros(d) for _ in dims],
    )


def save_checkpoint(params: ModelParams, path: str | Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = np.array([params.n_users, params.d, params.M, *params.dims], dtype=_HEADER)
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(header.tobytes())
        for tensor in params.tensors().values():
            f.write(np.ascontiguousarray(tensor, dtype=_VALUES).tobytes())
    logger.info(f"检查点已保存至 {path}")


def load_checkpoint(path: str | Path) -> ModelParams:
    path = Path(path)
    blob = path.read_bytes()
    if blob[:8] != CHECKPOINT_MAGIC:
        raise DataError(f"{path} 不是 MCKP 检查点文件 (magic 不匹配)")
    n_users, d, M = (int(v) for v in np.frombuffer(blob, dtype=_HEADER, count=3, offset=8))
    dims = [int(v) for v in np.frombuffer(blob, dtype=_HEADER, count=M, offset=20)]
    offset = 20 + 4 * M

    def take(shape):
        nonlocal offset
        count = int(np.prod(shape))
        if offset + count * _VALUES.itemsize > len(blob):
            raise DimensionError(f"{path} 数据不完整")
        values = np.frombuffer(blob, dtype=_VALUES, count=count, offset=offset)
        offset += count * _VALUES.itemsize
        return values.reshape(shape).astype(np.float64)

    user_embeddings = take((n_users, d))
    weights, biases = [], []
    for dim in dims:
        weights.append(take((d, dim)))
        biases.append(take((d,)))
    if offset != len(blob):
        raise DimensionError(f"{path} 末尾存在多余数据")
    logger.info(f"读取检查点 {path}: n_users={n_users}, d={d}, M={M}")
    return ModelParams(user_embeddings, weights, biases)
