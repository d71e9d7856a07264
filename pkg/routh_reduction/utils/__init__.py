"""工具模块 - 配置、日志、异常"""

from routh_reduction.utils.config import Config, ScenarioConfig, config, load_config
from routh_reduction.utils.logger import get_logger, set_log_level

__all__ = ["Config", "ScenarioConfig", "config", "load_config", "get_logger", "set_log_level"]
