import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..datamodel.features import ModalityFeatureBank
from ..datamodel.imputation import prepare_features
from ..datamodel.split import DatasetBundle
from ..environments.builder import EnvironmentSampler
from ..errors import DivergenceError, EmptyReportError
from ..evaluation.evaluator import evaluate
from ..load_config.load_config import TrainConfig
from ..model.params import ModelParams, init_params
from .adam import OptimizerState, adam_step
from .gradients import backward_from
from .losses import BatchForward, LossBreakdown
from .sampling import TripleSampler

logger = logging.getLogger(__name__)

_SCALAR_FIELDS = ("mean_env_loss", "env_variance", "align_loss", "reg_loss", "total")


@dataclass
class TrainResult:
    params: ModelParams
    history: List[Dict[str, object]] = field(default_factory=list)
    best_epoch: int = 0
    best_metric: float = float("-inf")
    stopped_early: bool = False


def _epoch_summary(breakdowns: List[LossBreakdown]) -> Dict[str, object]:
    summary: Dict[str, object] = {
        name: float(np.mean([getattr(b, name) for b in breakdowns])) for name in _SCALAR_FIELDS
    }
    summary["env_losses"] = np.mean([b.env_losses for b in breakdowns], axis=0).tolist()
    return summary


def train(bundle: DatasetBundle, config: TrainConfig, features: Optional[Tuple[ModalityFeatureBank, ModalityFeatureBank]] = None, on_epoch: Optional[Callable[[Dict[str, object]], None]] = None) -> TrainResult:
    """按 (采样 → 构造环境 → 损失 → 反向 → Adam) 的顺序训练，每个优化步重新构造一次环境。

    每 eval_every 个 epoch 在验证集上计算 Recall@select_k，保留最优参数，
    连续 patience 次评估没有提升即提前停止。

    Raises
    ------
    DivergenceError
        损失或参数出现 NaN/Inf，异常中携带最近一次的最优参数
    """
    train_features, eval_features = features or prepare_features(bundle, config.imputation)

    init_seed, loop_seed = np.random.SeedSequence(config.seed).spawn(2)
    params = init_params(bundle.n_users, bundle.features.dims, config.d, init_seed)
    state = OptimizerState.for_params(params)
    rng = np.random.default_rng(loop_seed)
    sampler = TripleSampler(bundle.train, bundle.warm_items)
    env_sampler = EnvironmentSampler(bundle.M, config.alpha, rng, config.env_variant)
    n_batches = max(1, math.ceil(len(bundle.train) / config.batch_size))

    result = TrainResult(params=params.copy())
    metric_name = f"recall@{config.select_k}"
    can_validate = True
    bad_evals = 0
    logger.info(
        f"开始训练: variant={config.env_variant}, beta={config.beta}, lambda={config.lambda_}, "
        f"alpha={config.alpha}, {n_batches} 批/epoch"
    )

    for epoch in range(1, config.max_epochs + 1):
        breakdowns = []
        for _ in range(n_batches):
            batch = sampler.sample(config.batch_size, rng)
            envs = env_sampler.next()
            fwd = BatchForward(params, batch, envs, train_features, bundle.train_mask)
            breakdown = fwd.breakdown(config)
            if not math.isfinite(breakdown.total):
                logger.error(f"第 {epoch} 个 epoch 损失发散: {breakdown.to_dict()}")
                raise DivergenceError(
                    f"第 {epoch} 个 epoch 损失为 {breakdown.total}",
                    last_good=result.params,
                    diagnostics={"epoch": epoch, "step": state.step, **breakdown.to_dict()},
                )
            grads = backward_from(fwd, config)
            try:
                adam_step(state, params, grads, config.lr)
            except DivergenceError as e:
                e.last_good = result.params
                raise
            if not params.is_finite():
                raise DivergenceError(f"第 {epoch} 个 epoch 参数出现 NaN/Inf", last_good=result.params, diagnostics={"epoch": epoch, "step": state.step})
            breakdowns.append(breakdown)

        record: Dict[str, object] = {"epoch": epoch, **_epoch_summary(breakdowns)}

        if can_validate and epoch % config.eval_every == 0:
            try:
                report = evaluate(bundle, params, eval_features, "val", ks=(config.select_k,))
            except EmptyReportError:
                logger.warning("验证集上没有可评估的用户，关闭提前停止，保留最后一个 epoch 的参数")
                can_validate = False
            else:
                value = report.metric("recall", config.select_k)
                record[f"val_{metric_name}"] = value
                record[f"val_ndcg@{config.select_k}"] = report.metric("ndcg", config.select_k)
                if value > result.best_metric:
                    result.best_metric = value
                    result.best_epoch = epoch
                    result.params = params.copy()
                    bad_evals = 0
                else:
                    bad_evals += 1

        if not can_validate:
            result.params = params.copy()
            result.best_epoch = epoch

        result.history.append(record)
        if on_epoch is not None:
            on_epoch(record)

        if can_validate and bad_evals >= config.patience:
            logger.info(f"验证指标连续 {config.patience} 次未提升，在第 {epoch} 个 epoch 提前停止")
            result.stopped_early = True
            break

    if config.max_epochs == 0:
        result.params = params.copy()
    logger.info(f"训练结束: 最优 epoch {result.best_epoch}, val {metric_name}={result.best_metric}")
    return result


def env_loss_spread(bundle: DatasetBundle, params: ModelParams, config: TrainConfig, features: Optional[ModalityFeatureBank] = None, n_batches: int = 20, seed: int = 0) -> float:
    """max_e L_e − min_e L_e 在 n_batches 个固定 batch 上的平均值。

    batch 与环境权重只由 seed 决定，同一 seed 下不同参数的结果可以直接比较。
    """
    if features is None:
        features = prepare_features(bundle, config.imputation)[0]
    rng = np.random.default_rng(seed)
    sampler = TripleSampler(bundle.train, bundle.warm_items)
    env_sampler = EnvironmentSampler(bundle.M, config.alpha, rng, config.env_variant)
    spreads = []
    for _ in range(n_batches):
        batch = sampler.sample(config.batch_size, rng)
        fwd = BatchForward(params, batch, env_sampler.next(), features, bundle.train_mask)
        spreads.append(float(np.ptp(fwd.env_losses)))
    return float(np.mean(spreads))


def write_history(history: List[Dict[str, object]], path: str | Path):
    """每个 epoch 一行 JSON。"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for record in history:
            f.write(json.dumps(record, ensure_ascii=False) + "\n")
