"""
配置管理模块

支持从环境变量、配置文件加载配置，并解析 CLI 使用的扁平 key = value 场景文件
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

from routh_reduction.utils.errors import ConfigError


def _optional_float(name: str) -> Optional[float]:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return None
    return float(raw)


@dataclass
class Config:
    """应用配置"""

    # 数值差分配置（None 表示按分量自动缩放）
    fd_step: Optional[float] = None
    hessian_step: Optional[float] = None

    # 积分配置
    dt: float = 1e-3
    t0: float = 0.0
    t1: float = 5.0

    # 采样配置
    seed: int = 0
    n_samples: int = 20

    # 并发配置
    max_workers: int = 4

    # 路径配置
    output_dir: str = "."

    # 日志配置
    log_level: str = "INFO"
    log_file: Optional[str] = None

    @classmethod
    def from_env(cls) -> "Config":
        """从环境变量加载配置"""
        return cls(
            fd_step=_optional_float("RR_FD_STEP"),
            hessian_step=_optional_float("RR_HESSIAN_STEP"),
            dt=float(os.getenv("RR_DT", 1e-3)),
            t0=float(os.getenv("RR_T0", 0.0)),
            t1=float(os.getenv("RR_T1", 5.0)),
            seed=int(os.getenv("RR_SEED", 0)),
            n_samples=int(os.getenv("RR_N_SAMPLES", 20)),
            max_workers=int(os.getenv("RR_MAX_WORKERS", 4)),
            output_dir=os.getenv("RR_OUTPUT_DIR", "."),
            log_level=os.getenv("RR_LOG_LEVEL", "INFO"),
            log_file=os.getenv("RR_LOG_FILE"),
        )

    @classmethod
    def from_file(cls, path: str) -> "Config":
        """从 JSON 文件加载配置"""
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        return cls(**data)

    def to_file(self, path: str) -> None:
        """保存配置到 JSON 文件"""
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.__dict__, f, indent=2)

    def __post_init__(self) -> None:
        """后处理：确保输出目录存在"""
        Path(self.output_dir).mkdir(parents=True, exist_ok=True)


# 全局配置实例
config = Config.from_env()


def load_config(config_path: Optional[str] = None) -> Config:
    """
    加载配置

    优先级：配置文件 > 环境变量 > 默认值

    Args:
        config_path: JSON 配置文件路径

    Returns:
        配置实例
    """
    global config

    fresh = Config.from_env()

    if config_path and os.path.exists(config_path):
        file_config = Config.from_file(config_path)
        for key, value in file_config.__dict__.items():
            if value is not None:
                setattr(fresh, key, value)

    # 原地更新，已导入的 config 引用同样生效
    for key, value in fresh.__dict__.items():
        setattr(config, key, value)
    return config


@dataclass
class ScenarioConfig:
    """
    场景配置（扁平 key = value 文本）

    支持的键:
        system            内置系统名称
        params.<name>     系统参数（实数）
        initial.q         初始位形，逗号分隔
        initial.v         初始速度，逗号分隔
        run.t0 / run.t1 / run.dt / run.seed
        run.mu            动量值，逗号分隔
    """

    system: Optional[str] = None
    params: Dict[str, float] = field(default_factory=dict)
    initial_q: Optional[List[float]] = None
    initial_v: Optional[List[float]] = None
    t0: Optional[float] = None
    t1: Optional[float] = None
    dt: Optional[float] = None
    seed: Optional[int] = None
    mu: Optional[List[float]] = None

    @staticmethod
    def _vector(key: str, raw: str) -> List[float]:
        try:
            return [float(part) for part in raw.split(",") if part.strip()]
        except ValueError:
            raise ConfigError(f"键 {key} 的取值不是实数列表: {raw!r}")

    @staticmethod
    def _scalar(key: str, raw: str) -> float:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"键 {key} 的取值不是实数: {raw!r}")

    @classmethod
    def parse(cls, text: str) -> "ScenarioConfig":
        """
        解析场景文本

        Args:
            text: 文件内容

        Returns:
            场景配置

        Raises:
            ConfigError: 行格式错误或出现未知键
        """
        scenario = cls()
        for lineno, raw_line in enumerate(text.splitlines(), start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"第 {lineno} 行缺少 '=': {raw_line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if not value:
                raise ConfigError(f"第 {lineno} 行的键 {key} 没有取值")

            if key == "system":
                scenario.system = value
            elif key.startswith("params."):
                name = key[len("params."):]
                if not name:
                    raise ConfigError(f"第 {lineno} 行参数名为空")
                scenario.params[name] = cls._scalar(key, value)
            elif key == "initial.q":
                scenario.initial_q = cls._vector(key, value)
            elif key == "initial.v":
                scenario.initial_v = cls._vector(key, value)
            elif key == "run.t0":
                scenario.t0 = cls._scalar(key, value)
            elif key == "run.t1":
                scenario.t1 = cls._scalar(key, value)
            elif key == "run.dt":
                scenario.dt = cls._scalar(key, value)
            elif key == "run.seed":
                scenario.seed = int(cls._scalar(key, value))
            elif key == "run.mu":
                scenario.mu = cls._vector(key, value)
            else:
                raise ConfigError(f"第 {lineno} 行出现未知键: {key}")
        return scenario

    @classmethod
    def from_file(cls, path: str) -> "ScenarioConfig":
        """从场景文件加载"""
        if not os.path.exists(path):
            raise ConfigError(f"场景文件不存在: {path}")
        with open(path, "r", encoding="utf-8") as f:
            return cls.parse(f.read())
