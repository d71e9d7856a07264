"""
日志模块

包级日志记录器与计时工具，日志统一写到 stderr，stdout 留给 CSV / JSON 输出
"""

import logging
import sys
import time
from contextlib import contextmanager
from typing import Dict, Iterator, Optional

from routh_reduction.utils.config import config

ROOT_LOGGER = "routh_reduction"
LOG_FORMAT = "%(asctime)s | %(levelname)-8s | %(name)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


def _handlers() -> Iterator[logging.Handler]:
    yield logging.StreamHandler(sys.stderr)
    if config.log_file:
        yield logging.FileHandler(config.log_file, encoding="utf-8")


def get_logger(name: Optional[str] = None) -> logging.Logger:
    """
    获取日志记录器

    Args:
        name: 日志记录器名称，通常使用 __name__

    Returns:
        配置好的日志记录器，级别取 config.log_level
    """
    logger = logging.getLogger(name or ROOT_LOGGER)
    if logger.handlers:
        return logger

    level = getattr(logging, config.log_level.upper(), logging.INFO)
    logger.setLevel(level)
    formatter = logging.Formatter(fmt=LOG_FORMAT, datefmt=DATE_FORMAT)
    for handler in _handlers():
        handler.setLevel(level)
        handler.setFormatter(formatter)
        logger.addHandler(handler)
    return logger


def set_log_level(level: str) -> None:
    """
    设置包内所有日志记录器的级别

    Args:
        level: 日志级别 (DEBUG, INFO, WARNING, ERROR, CRITICAL)
    """
    resolved = getattr(logging, level.upper())
    for name, logger in list(logging.root.manager.loggerDict.items()):
        if name != ROOT_LOGGER and not name.startswith(ROOT_LOGGER + "."):
            continue
        if isinstance(logger, logging.Logger):
            logger.setLevel(resolved)
            for handler in logger.handlers:
                handler.setLevel(resolved)


@contextmanager
def log_duration(logger: logging.Logger, label: str, level: int = logging.INFO) -> Iterator[Dict[str, float]]:
    """
    记录代码块耗时

    用法:
        with log_duration(logger, "全系统积分") as timing:
            ...
        elapsed = timing["elapsed"]
    """
    timing: Dict[str, float] = {"elapsed": 0.0}
    started = time.perf_counter()
    try:
        yield timing
    finally:
        timing["elapsed"] = time.perf_counter() - started
        logger.log(level, f"{label}: 用时 {timing['elapsed']:.3f}s")
