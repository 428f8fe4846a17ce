import dataclasses
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from ..errors import ConfigError

logger = logging.getLogger(__name__)

ENV_VARIANTS = ("full", "no_e0", "no_cyclic_shift", "frozen", "single")
IMPUTATION_STRATEGIES = ("zero", "mean", "map")
PROTOCOLS = ("FTFT", "FTMT", "MTMT", "custom")


class BaseConfig:
    """基本的json加载逻辑，初始化接受一个json文件路径
    """
    def __init__(self, config_path: str | Path):
        self.config_path: Path = Path(config_path)
        self.config_name: str = self.config_path.name

    def load_config(self) -> dict:
        """加载并读取配置

        Returns
        -------
        dict
            返回一个记录配置的dict，文件缺失或损坏时返回空dict
        """

        config = None
        try:
            with open(self.config_path, encoding='utf-8') as f:
                config = json.load(f)
            logger.info(f"配置文件 '{self.config_name}' 加载成功")
        except FileNotFoundError:
            logger.warning(f"配置文件 '{self.config_name}' 未找到！")
        except (json.JSONDecodeError, UnicodeDecodeError): # 处理 JSON 格式或编码错误
            logger.warning(f"配置文件 '{self.config_name}' 可能为空或格式错误！")
        except OSError as e: # 捕获其他 IO 错误
            logger.warning(f"配置读取失败，IO错误: {e}")

        if config is None:
            return {}

        return config

    def update_config(self, config_data: dict):
        """更新配置文件内容，父目录不存在时自动创建

        Parameters
        ----------
        config_data : dict
            新的完整配置内容

        Raises
        ------
        OSError
            写入失败时抛出
        """

        self.config_path.parent.mkdir(parents = True, exist_ok = True)
        try:
            with open(self.config_path, "w", encoding='utf-8') as f:
                json.dump(config_data, f, indent=4, ensure_ascii=False)

            logger.info(f"{self.config_name} 写入成功，路径 {self.config_path}")

        except OSError as e:
            logger.warning(f"{self.config_name} 写入失败！")
            raise OSError from e


class manifestConfig(BaseConfig):
    def __init__(self, out_dir: str | Path):
        super().__init__(Path(out_dir) / "manifest.json")


class runConfigFile(BaseConfig):
    def __init__(self, out_dir: str | Path):
        super().__init__(Path(out_dir) / "config.json")


@dataclass
class TrainConfig:
    beta: float = 1000.0
    lambda_: float = 0.05
    alpha: float = 0.01
    gamma_reg: float = 1e-5
    lr: float = 0.001
    d: int = 64
    batch_size: int = 2048
    max_epochs: int = 200
    patience: int = 10
    eval_every: int = 1
    seed: int = 0
    env_variant: str = "full"
    imputation: str = "mean"
    select_k: int = 20

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.beta < 0 or self.lambda_ < 0 or self.gamma_reg < 0:
            raise ConfigError("beta / lambda / gamma_reg 应为非负数！")
        if self.alpha <= 0:
            raise ConfigError(f"alpha 应为正数，实际为 {self.alpha}")
        if self.lr <= 0:
            raise ConfigError(f"lr 应为正数，实际为 {self.lr}")
        if self.d < 1 or self.batch_size < 1 or self.max_epochs < 0:
            raise ConfigError("d / batch_size 应 ≥ 1，max_epochs 应 ≥ 0")
        if self.patience < 1 or self.eval_every < 1:
            raise ConfigError("patience / eval_every 应 ≥ 1")
        if self.env_variant not in ENV_VARIANTS:
            raise ConfigError(f"未知的环境构造方式 {self.env_variant}，可选 {ENV_VARIANTS}")
        if self.imputation not in IMPUTATION_STRATEGIES:
            raise ConfigError(f"未知的补全策略 {self.imputation}，可选 {IMPUTATION_STRATEGIES}")

    def replace(self, **changes) -> "TrainConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class RunConfig:
    """一次实验的完整配置：训练参数 + 路径 + 协议。所有键都可以在 JSON 中给出，也可以由命令行覆盖。"""
    train: TrainConfig = field(default_factory=TrainConfig)
    out_dir: str = "runs/default"
    interactions: Optional[str] = None
    features: List[str] = field(default_factory=list)
    mask: Optional[str] = None
    protocol: str = "FTMT"
    train_missing_ratio: float = 0.3
    test_missing_ratio: float = 0.5
    max_missing_per_item: int = 1
    new_ratio: float = 0.2
    ks: List[int] = field(default_factory=lambda: [10, 20])
    variants: List[str] = field(default_factory=lambda: ["full", "no_cmam", "no_ceim", "no_both"])
    # 合成数据参数
    n_users: int = 500
    n_items: int = 300
    latent_dim: int = 8
    feature_dims: List[int] = field(default_factory=lambda: [32, 32])
    noise_std: float = 0.3
    cross_gain: float = 0.3
    interactions_per_user: int = 20
    shared_projection: bool = False

    def __post_init__(self):
        if self.protocol not in PROTOCOLS:
            raise ConfigError(f"未知的缺失协议 {self.protocol}，可选 {PROTOCOLS}")
        if not 0 < self.new_ratio < 1:
            raise ConfigError(f"new_ratio 应在 (0, 1) 内，实际为 {self.new_ratio}")
        if not self.ks or any(k < 1 for k in self.ks):
            raise ConfigError("Ks 应为正整数列表")

    @property
    def seed(self) -> int:
        return self.train.seed

    def to_dict(self) -> Dict[str, Any]:
        data = dataclasses.asdict(self)
        train = data.pop("train")
        train["lambda"] = train.pop("lambda_")
        data.update(train)
        return data


_TRAIN_KEYS = {f.name for f in dataclasses.fields(TrainConfig)}
_RUN_KEYS = {f.name for f in dataclasses.fields(RunConfig)} - {"train"}


def build_run_config(*layers: Optional[Dict[str, Any]]) -> RunConfig:
    """按顺序合并多层配置 (默认值 < 配置文件 < 命令行)，值为 None 的键被忽略。"""
    train_kwargs: Dict[str, Any] = {}
    run_kwargs: Dict[str, Any] = {}
    for layer in layers:
        for key, value in (layer or {}).items():
            if value is None:
                continue
            if key == "lambda":
                key = "lambda_"
            if key in _TRAIN_KEYS:
                train_kwargs[key] = value
            elif key in _RUN_KEYS:
                run_kwargs[key] = value
            else:
                raise ConfigError(f"未知的配置项 '{key}'")
    try:
        return RunConfig(train=TrainConfig(**train_kwargs), **run_kwargs)
    except TypeError as e:
        raise ConfigError(f"配置项类型有误: {e}") from e


def load_run_config(config_path: Optional[str | Path], overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    file_layer: Dict[str, Any] = {}
    if config_path is not None:
        if not Path(config_path).is_file():
            raise ConfigError(f"配置文件 {config_path} 不存在！")
        try:
            with open(config_path, encoding="utf-8") as f:
                file_layer = json.load(f)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise ConfigError(f"配置文件 {config_path} 不是合法的 UTF-8 JSON: {e}") from e
        if not isinstance(file_layer, dict):
            raise ConfigError(f"配置文件 {config_path} 顶层应为 JSON 对象")
    return build_run_config(file_layer, overrides)
