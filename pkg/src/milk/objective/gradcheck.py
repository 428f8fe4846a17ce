"""解析梯度与中心差分的对照检验。

相对误差按参数组计算：‖g_analytic − g_fd‖ / max(‖g_analytic‖, ‖g_fd‖, 1e-8)。
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from ..datamodel.features import AvailabilityMask, ModalityFeatureBank
from ..datamodel.interactions import InteractionSet
from ..environments.builder import EnvironmentSet, build_environments
from ..load_config.load_config import TrainConfig
from ..model.params import ModelParams
from .gradients import backward
from .losses import total_loss
from .sampling import TripleBatch, TripleSampler

logger = logging.getLogger(__name__)

FD_STEP = 1e-4
NORM_FLOOR = 1e-8

GradientFn = Callable[[ModelParams, TripleBatch, EnvironmentSet, ModalityFeatureBank, AvailabilityMask, TrainConfig], ModelParams]


@dataclass
class TrialSize:
    n_users: int = 4
    n_items: int = 6
    M: int = 2
    d: int = 3
    d_x: int = 5
    batch_size: int = 8


@dataclass
class GradCheckReport:
    max_rel_error: float
    per_group: Dict[str, float]
    trials: List[Dict[str, object]] = field(default_factory=list)

    def passed(self, tol: float) -> bool:
        return self.max_rel_error <= tol

    def to_dict(self) -> Dict[str, object]:
        return {"max_rel_err": self.max_rel_error, "per_group": self.per_group, "trials": self.trials}


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric), NORM_FLOOR)
    return float(np.linalg.norm(analytic - numeric) / denom)


def numeric_gradient(params: ModelParams, loss_fn: Callable[[ModelParams], float], h: float = FD_STEP) -> Dict[str, np.ndarray]:
    """对每个参数元素做中心差分，原地扰动后恢复。"""
    grads = {}
    for name, tensor in params.tensors().items():
        grad = np.zeros_like(tensor)
        flat = tensor.reshape(-1)
        grad_flat = grad.reshape(-1)
        for i in range(flat.size):
            original = flat[i]
            flat[i] = original + h
            f_plus = loss_fn(params)
            flat[i] = original - h
            f_minus = loss_fn(params)
            flat[i] = original
            grad_flat[i] = (f_plus - f_minus) / (2.0 * h)
        grads[name] = grad
    return grads


def random_instance(size: TrialSize, rng: np.random.Generator, missing: bool = True):
    """随机小实例：参数、特征、可用性矩阵与一个合法批次。"""
    dims = [size.d_x] * size.M
    params = ModelParams(
        user_embeddings=rng.standard_normal((size.n_users, size.d)),
        weights=[0.5 * rng.standard_normal((size.d, dim)) for dim in dims],
        biases=[0.1 * rng.standard_normal(size.d) for _ in dims],
    )
    features = ModalityFeatureBank([rng.standard_normal((size.n_items, dim)) for dim in dims])
    entries = np.ones((size.n_items, size.M), dtype=np.int8)
    if missing:
        for item in rng.choice(size.n_items, size=size.n_items // 2, replace=False):
            entries[item, rng.integers(size.M)] = 0
    mask = AvailabilityMask(entries)

    pairs = []
    for user in range(size.n_users):
        n_pos = int(rng.integers(1, size.n_items - 1))
        pairs.extend((user, int(item)) for item in rng.choice(size.n_items, size=n_pos, replace=False))
    train = InteractionSet(size.n_users, size.n_items, np.array(pairs))
    batch = TripleSampler(train).sample(size.batch_size, rng)
    return params, features, mask, batch


def default_trials() -> List[Dict[str, object]]:
    """覆盖 β>0、λ>0、极端 β 与缺失模态的默认检验组合。"""
    base = dict(gamma_reg=1e-3, alpha=0.5)
    trials = []
    for beta, lambda_ in ((0.0, 0.0), (1.0, 0.0), (0.0, 0.5), (10.0, 0.5), (1000.0, 0.05)):
        for variant in ("full", "no_cyclic_shift"):
            for missing in (False, True):
                trials.append({"config": TrainConfig(beta=beta, lambda_=lambda_, env_variant=variant, **base), "missing": missing})
    return trials


def finite_diff_check(trials: Optional[Sequence[Dict[str, object]]] = None, size: Optional[TrialSize] = None, seed: int = 0, gradient_fn: GradientFn = backward, h: float = FD_STEP) -> GradCheckReport:
    """在随机小实例上比较解析梯度与中心差分，返回最大相对误差与各参数组的最坏误差。"""
    trials = default_trials() if trials is None else trials
    size = size or TrialSize()
    rng = np.random.default_rng(seed)
    per_group: Dict[str, float] = {}
    records = []

    for index, trial in enumerate(trials):
        config: TrainConfig = trial["config"]
        params, features, mask, batch = random_instance(size, rng, missing=bool(trial.get("missing", True)))
        envs = build_environments(size.M, config.alpha, rng, config.env_variant)

        analytic = gradient_fn(params, batch, envs, features, mask, config).tensors()
        numeric = numeric_gradient(params, lambda p: total_loss(p, batch, envs, features, mask, config).total, h)

        errors = {name: relative_error(analytic[name], numeric[name]) for name in numeric}
        for name, err in errors.items():
            group = name.rstrip("0123456789")
            per_group[group] = max(per_group.get(group, 0.0), err)
        worst = max(errors.values())
        records.append({
            "trial": index,
            "beta": config.beta,
            "lambda": config.lambda_,
            "variant": config.env_variant,
            "missing": bool(trial.get("missing", True)),
            "max_rel_err": worst,
        })
        logger.debug(f"梯度检验 #{index}: {errors}")

    max_err = max(per_group.values()) if per_group else 0.0
    logger.info(f"梯度检验完成: {len(records)} 组, 最大相对误差 {max_err:.3e}")
    return GradCheckReport(max_rel_error=max_err, per_group=per_group, trials=records)
