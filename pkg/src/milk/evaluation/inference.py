import logging
from typing import Tuple

import numpy as np

from ..datamodel.features import ModalityFeatureBank
from ..model.forward import equal_weights, extract_items, fuse
from ..model.params import ModelParams

logger = logging.getLogger(__name__)


def new_item_representations(params: ModelParams, features: ModalityFeatureBank, items: np.ndarray) -> np.ndarray:
    """z_j = (1/M) Σ_m extract(m, x̃^m_j)，与训练时环境 0 的融合完全相同。"""
    return fuse(extract_items(params, features, items), equal_weights(params.M))


def infer_new_item_scores(params: ModelParams, features: ModalityFeatureBank, users: np.ndarray, items: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """对 (用户, 新物品) 打分。features 应已按训练参考统计量补全。

    超出嵌入表范围的用户被跳过并记录警告，返回 (分数矩阵, 实际打分的用户)。
    """
    users = np.asarray(users, dtype=np.int64)
    known = (users >= 0) & (users < params.n_users)
    if not known.all():
        logger.warning(f"{int((~known).sum())} 个用户不在嵌入表中，已跳过")
        users = users[known]
    z = new_item_representations(params, features, np.asarray(items, dtype=np.int64))
    return params.user_embeddings[users] @ z.T, users
