import logging
import os
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Optional


def default_log_dir() -> Path:
    env_dir = os.environ.get("MILK_LOG_DIR")
    if env_dir:
        return Path(env_dir)
    return Path.home() / ".milk_logs"


def setup_global_logging(log_dir: Optional[Path] = None, level: int = logging.INFO):
    """
    设置全局日志系统
    """

    # 全局日志文件配置
    log_dir = Path(log_dir) if log_dir is not None else default_log_dir()
    log_dir.mkdir(parents=True, exist_ok=True)
    log_file = log_dir / "milk.log"

    # 日志文件格式
    log_format = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    # 初始化日志记录器
    logger = logging.getLogger()
    logger.setLevel(level)
    if any(isinstance(h, RotatingFileHandler) for h in logger.handlers):
        return log_file

    # 初始化日志处理器
    log_file_handler = RotatingFileHandler(
        log_file,
        maxBytes = 5 * 1024 * 1024,
        backupCount = 3,
        encoding = 'utf-8'
    )
    log_file_handler.setFormatter(log_format)
    log_file_handler.setLevel(logging.DEBUG)

    logger.addHandler(log_file_handler)

    return log_file
