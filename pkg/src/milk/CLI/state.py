import logging
from functools import wraps
from pathlib import Path
from typing import Any, Dict, List, Optional

import typer
from rich import print as rprint

from ..datamodel.features import AvailabilityMask, align_features, load_features, load_mask, write_mask
from ..datamodel.interactions import load_interactions
from ..datamodel.missingness import MissingnessParams, apply_missingness
from ..datamodel.split import DatasetBundle, bundle_from_manifest, make_new_item_split
from ..errors import ConfigError, DimensionError, MilkError
from ..load_config.load_config import RunConfig, load_run_config, manifestConfig, runConfigFile

logger = logging.getLogger(__name__)

DATA_DIR = "data"
INTERACTIONS_FILE = "interactions.tsv"
TRAIN_MASK_FILE = "train_mask.csv"
TEST_MASK_FILE = "test_mask.csv"
CHECKPOINT_FILE = Path("ckpt") / "best.ckpt"
HISTORY_FILE = "history.jsonl"
METRICS_DIR = "metrics"


# 维护全局命令行参数
class State:
    """状态类，用于在 MILK CLI 内共享全局选项 (--config / --seed / --out)
    """
    def __init__(self):
        self.config_path: Optional[Path] = None
        self.overrides: Dict[str, Any] = {}

    def reset(self):
        self.config_path = None
        self.overrides = {}

    def run_config(self, **command_overrides) -> RunConfig:
        """合并 默认值 < 配置文件 < 全局选项 < 子命令选项，得到本次运行的配置"""
        return load_run_config(self.config_path, {**self.overrides, **command_overrides})

    def replay_run_config(self, **command_overrides) -> RunConfig:
        """未给出 --config 时以 <out>/config.json 代替配置文件层，沿用训练时保存的配置 (如补全策略)"""
        if self.config_path is None:
            stored = runConfigFile(self.run_config().out_dir).config_path
            if stored.is_file():
                logger.info(f"沿用已保存的运行配置 {stored}")
                return load_run_config(stored, {**self.overrides, **command_overrides})
        return self.run_config(**command_overrides)


state = State()


def save_run_config(run: RunConfig):
    runConfigFile(run.out_dir).update_config(run.to_dict())


def feature_paths(run: RunConfig) -> List[Path]:
    if run.features:
        return [Path(p) for p in run.features]
    paths = sorted((Path(run.out_dir) / DATA_DIR).glob("modality_*.mfea"))
    if not paths:
        raise ConfigError(f"未指定特征文件，且 {Path(run.out_dir) / DATA_DIR} 下没有 modality_*.mfea")
    return paths


def interactions_path(run: RunConfig) -> Path:
    if run.interactions:
        return Path(run.interactions)
    return Path(run.out_dir) / DATA_DIR / INTERACTIONS_FILE


def _require(path: Path, what: str) -> Path:
    if not path.is_file():
        raise ConfigError(f"{what} {path} 不存在！")
    return path


def missingness_params(run: RunConfig) -> Optional[MissingnessParams]:
    if run.protocol != "custom":
        return None
    return MissingnessParams(run.train_missing_ratio, run.test_missing_ratio, run.max_missing_per_item)


def load_dataset(run: RunConfig):
    """读取交互与特征，并让特征行与物品编号对齐"""
    interactions = load_interactions(_require(interactions_path(run), "交互文件"))
    features = load_features([_require(p, "特征文件") for p in feature_paths(run)])
    features = align_features(features, interactions)
    if interactions.raw_item_ids is None and features.n_items > interactions.n_items:
        # 末尾没有交互的物品仍属于物品全集
        interactions = interactions.with_n_items(features.n_items)
    return interactions, features


def build_bundle(run: RunConfig) -> DatasetBundle:
    """按配置做新物品划分并施加缺失协议"""
    interactions, features = load_dataset(run)
    bundle = make_new_item_split(interactions, features, run.new_ratio, run.seed)
    bundle = apply_missingness(bundle, run.protocol, missingness_params(run), seed=run.seed)
    if run.mask:
        # 数据自带的可用性与协议模拟的缺失取交集
        natural = load_mask(_require(Path(run.mask), "可用性矩阵")).entries
        if natural.shape != bundle.train_mask.entries.shape:
            raise DimensionError(f"可用性矩阵形状 {natural.shape} 与数据 {bundle.train_mask.entries.shape} 不一致")
        bundle = bundle.with_masks(
            AvailabilityMask(bundle.train_mask.entries & natural),
            AvailabilityMask(bundle.test_mask.entries & natural),
        )
    return bundle


def write_split(bundle: DatasetBundle, out_dir: str | Path):
    out_dir = Path(out_dir)
    manifestConfig(out_dir).update_config(bundle.manifest())
    write_mask(bundle.train_mask, out_dir / TRAIN_MASK_FILE)
    write_mask(bundle.test_mask, out_dir / TEST_MASK_FILE)


def load_bundle(run: RunConfig) -> DatasetBundle:
    """输出目录中已有 manifest.json 时按其重放划分，否则现场划分"""
    out_dir = Path(run.out_dir)
    manifest = manifestConfig(out_dir).load_config()
    if not manifest:
        logger.info("未找到划分记录，按当前配置重新划分")
        return build_bundle(run)

    interactions, features = load_dataset(run)
    train_mask_path = out_dir / TRAIN_MASK_FILE
    test_mask_path = out_dir / TEST_MASK_FILE
    train_mask = load_mask(train_mask_path) if train_mask_path.is_file() else None
    test_mask = load_mask(test_mask_path) if test_mask_path.is_file() else None
    logger.info(f"按 {out_dir / 'manifest.json'} 重放划分")
    return bundle_from_manifest(interactions, features, manifest, train_mask, test_mask)


def handle_errors(func):
    """把 MilkError 转换为带退出码的 typer.Exit，并打印红色提示"""
    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except MilkError as e:
            logger.error(f"{type(e).__name__}: {e}")
            rprint(f"[red]{type(e).__name__}:[/red] {e}")
            raise typer.Exit(code=e.exit_code) from e
    return wrapper
