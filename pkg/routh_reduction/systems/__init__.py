"""内置系统 - 示例系统及其注册表"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List

from routh_reduction.systems.base import SystemBundle
from routh_reduction.systems.heavy_top import heavy_top_magnetic
from routh_reduction.systems.pp_wave import pp_wave
from routh_reduction.systems.rigid_body import free_rigid_body
from routh_reduction.systems.tippe_top import tippe_top
from routh_reduction.systems.toy import toy_cyclic


@dataclass
class SystemEntry:
    """注册表条目"""

    name: str
    description: str
    factory: Callable[..., SystemBundle]
    defaults: Dict[str, float] = field(default_factory=dict)

    def build(self, **params: Any) -> SystemBundle:
        unknown = set(params) - set(self.defaults)
        if unknown:
            raise KeyError(f"系统 '{self.name}' 不支持参数: {', '.join(sorted(unknown))}")
        return self.factory(**{**self.defaults, **params})


# 系统注册表
SYSTEMS: Dict[str, SystemEntry] = {
    "toy": SystemEntry(
        name="toy",
        description="循环变量玩具系统，非 G-正则",
        factory=toy_cyclic,
        defaults={"breaking": 0.0},
    ),
    "rigid-body": SystemEntry(
        name="rigid-body",
        description="自由刚体，SO(3) 左作用，约化到 S²",
        factory=free_rigid_body,
        defaults={"I1": 1.0, "I2": 2.0, "I3": 3.0, "mu": 2.0},
    ),
    "heavy-top": SystemEntry(
        name="heavy-top",
        description="磁场中的重陀螺，S¹ 作用，机械联络",
        factory=heavy_top_magnetic,
        defaults={"m": 1.0, "g": 9.81, "epsilon": 0.1, "I1": 1.0, "I3": 0.5, "omega_B": 0.0},
    ),
    "tippe-top": SystemEntry(
        name="tippe-top",
        description="Tippe Top，摩擦下 Jellet 积分守恒",
        factory=tippe_top,
        defaults={"m": 1.0, "g": 9.81, "R": 1.0, "epsilon": 0.3, "A": 0.4, "C": 0.5, "friction": 0.02},
    ),
    "pp-wave": SystemEntry(
        name="pp-wave",
        description="pp-波测地线，H = x² − y²，线性约束系统",
        factory=pp_wave,
        defaults={},
    ),
}


def get_system(name: str, **params: Any) -> SystemBundle:
    """
    构造内置系统

    Args:
        name: 系统名称
        **params: 覆盖默认值的参数

    Returns:
        系统对象

    Raises:
        KeyError: 系统或参数不存在
    """
    if name not in SYSTEMS:
        available = ", ".join(SYSTEMS.keys())
        raise KeyError(f"系统 '{name}' 不存在。可用系统: {available}")
    return SYSTEMS[name].build(**params)


def list_systems() -> List[str]:
    """获取所有系统名称列表"""
    return list(SYSTEMS.keys())


def get_system_descriptions() -> Dict[str, str]:
    """获取系统名称和描述的映射"""
    return {name: entry.description for name, entry in SYSTEMS.items()}


__all__ = [
    "SYSTEMS",
    "SystemBundle",
    "SystemEntry",
    "free_rigid_body",
    "get_system",
    "get_system_descriptions",
    "heavy_top_magnetic",
    "list_systems",
    "pp_wave",
    "tippe_top",
    "toy_cyclic",
]
