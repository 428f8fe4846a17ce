import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..datamodel.imputation import prepare_features
from ..datamodel.split import DatasetBundle
from ..errors import ConfigError
from ..load_config.load_config import TrainConfig
from ..objective.trainer import train
from .evaluator import MetricReport, evaluate

logger = logging.getLogger(__name__)

# 变体名 → 对基础配置的改动
_VARIANT_CHANGES: Dict[str, Dict[str, object]] = {
    "full": {},
    "no_cmam": {"lambda_": 0.0},
    "no_ceim": {"env_variant": "single", "beta": 0.0},
    "no_both": {"lambda_": 0.0, "env_variant": "single", "beta": 0.0},
    "env:no_e0": {"env_variant": "no_e0"},
    "env:no_cs": {"env_variant": "no_cyclic_shift"},
    "env:frozen": {"env_variant": "frozen"},
    "impute:zero": {"lambda_": 0.0, "env_variant": "single", "beta": 0.0, "imputation": "zero"},
    "impute:mean": {"lambda_": 0.0, "env_variant": "single", "beta": 0.0, "imputation": "mean"},
    "impute:map": {"lambda_": 0.0, "env_variant": "single", "beta": 0.0, "imputation": "map"},
}
VARIANTS = tuple(_VARIANT_CHANGES)

TABLES: Dict[str, tuple] = {
    "modules": ("full", "no_cmam", "no_ceim", "no_both"),
    "envs": ("full", "env:no_e0", "env:no_cs", "env:frozen"),
    "impute": ("impute:zero", "impute:mean", "impute:map", "full"),
}

ALPHA_GRID = (0.01, 0.1, 1.0, 10.0, 100.0)
BETA_GRID = (0.0, 1.0, 10.0, 100.0, 1000.0)
LAMBDA_GRID = (0.0, 0.01, 0.05, 0.1, 0.5)
SWEEP_GRIDS: Dict[str, Sequence[float]] = {"alpha": ALPHA_GRID, "beta": BETA_GRID, "lambda": LAMBDA_GRID}


def variant_config(base: TrainConfig, variant: str) -> TrainConfig:
    """把变体名映射为训练配置。

    Raises
    ------
    ConfigError
        未知的变体名
    """
    if variant not in _VARIANT_CHANGES:
        raise ConfigError(f"未知的消融变体 '{variant}'，可选 {VARIANTS}")
    return base.replace(**_VARIANT_CHANGES[variant])


def table_variants(table: str) -> List[str]:
    if table == "all":
        seen: List[str] = []
        for rows in TABLES.values():
            seen.extend(v for v in rows if v not in seen)
        return seen
    if table not in TABLES:
        raise ConfigError(f"未知的消融表 '{table}'，可选 {tuple(TABLES) + ('all',)}")
    return list(TABLES[table])


@dataclass
class AblationResult:
    reports: Dict[str, MetricReport] = field(default_factory=dict)

    def rows(self) -> List[Dict[str, object]]:
        """每个变体一行，列为 overall 的各项指标。"""
        rows = []
        for variant, report in self.reports.items():
            row: Dict[str, object] = {"variant": variant}
            for k, values in report.metrics.items():
                for name, value in values.items():
                    row[f"{name}@{k}"] = value
            rows.append(row)
        return rows


def run_ablation(bundle: DatasetBundle, base_config: TrainConfig, variants: Sequence[str], ks: Sequence[int] = (10, 20), on_variant: Optional[Callable[[str], None]] = None) -> AblationResult:
    """在同一划分、同一种子下依次训练并评估各个变体。"""
    configs = {variant: variant_config(base_config, variant) for variant in variants}
    result = AblationResult()
    for variant, config in configs.items():
        if on_variant is not None:
            on_variant(variant)
        logger.info(f"消融变体 {variant}: {config}")
        features = prepare_features(bundle, config.imputation)
        trained = train(bundle, config, features=features)
        report = evaluate(bundle, trained.params, features[1], "test", ks=ks, group_breakdown=True)
        report.variant = variant
        result.reports[variant] = report
    return result


def run_sweep(bundle: DatasetBundle, base_config: TrainConfig, parameters: Sequence[str] = ("alpha", "beta", "lambda"), ks: Sequence[int] = (10, 20), grids: Optional[Dict[str, Sequence[float]]] = None, on_run: Optional[Callable[[str, float], None]] = None) -> Tuple[List[Dict[str, object]], Dict[str, MetricReport]]:
    """逐个超参数扫描，其余设置保持基础配置。

    返回 (parameter, value, 指标...) 行，以及以 "parameter=value" 为键的各次报告。
    """
    grids = grids or SWEEP_GRIDS
    rows: List[Dict[str, object]] = []
    reports: Dict[str, MetricReport] = {}
    for parameter in parameters:
        if parameter not in grids:
            raise ConfigError(f"不支持扫描的超参数 '{parameter}'，可选 {tuple(grids)}")
        key = "lambda_" if parameter == "lambda" else parameter
        for value in grids[parameter]:
            if on_run is not None:
                on_run(parameter, value)
            config = base_config.replace(**{key: float(value)})
            features = prepare_features(bundle, config.imputation)
            trained = train(bundle, config, features=features)
            report = evaluate(bundle, trained.params, features[1], "test", ks=ks)
            report.variant = f"{parameter}={value}"
            row: Dict[str, object] = {"parameter": parameter, "value": value}
            for k, values in report.metrics.items():
                for name, metric in values.items():
                    row[f"{name}@{k}"] = metric
            rows.append(row)
            reports[report.variant] = report
            logger.info(f"扫描 {parameter}={value}: {report.metrics}")
    return rows, reports
