"""
内置系统的公共结构
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Tuple

import numpy as np

from routh_reduction.core.calculus import Chart, ChartState
from routh_reduction.core.connection import PrincipalConnection, QuotientChart
from routh_reduction.core.lagrangian import LagrangianSystem
from routh_reduction.core.symmetry import GroupAction, InvarianceReport, check_invariance
from routh_reduction.utils.errors import NotInvariantError
from routh_reduction.utils.logger import get_logger

logger = get_logger(__name__)


@dataclass
class SystemBundle:
    """
    打包好的内置系统

    Attributes:
        name: 注册名
        description: 描述
        sys: 拉格朗日系统
        action: 群作用
        quotient: 平凡化（商坐标卡）
        connections: 可用的主联络，键为联络名
        default_connection_name: 默认联络名
        params: 参数
        reference_formulas: 解析公式（测试用的参照）
        default_state: 默认初始状态
        default_mu: 默认动量值
        horizon: 默认积分终止时间
        g_regular: 预期的 G-正则性分类，None 表示不作判断
        verify: 构造时是否强制不变性检验
    """

    name: str
    description: str
    sys: LagrangianSystem
    action: GroupAction
    quotient: QuotientChart
    connections: Dict[str, PrincipalConnection]
    default_connection_name: str
    params: Dict[str, float]
    reference_formulas: Dict[str, Callable[..., object]] = field(default_factory=dict)
    default_state: Optional[ChartState] = None
    default_mu: Optional[np.ndarray] = None
    horizon: float = 5.0
    g_regular: Optional[bool] = None
    verify: bool = True
    invariance: Optional[InvarianceReport] = None

    def __post_init__(self) -> None:
        if self.default_connection_name not in self.connections:
            raise KeyError(f"联络 '{self.default_connection_name}' 不在系统 {self.name} 的联络表中")
        if self.verify:
            report = check_invariance(self.sys, self.action)
            if not report.passed:
                raise NotInvariantError(f"内置系统 {self.name} 未通过不变性检验", report.to_dict())
            self.invariance = report
            logger.debug(f"系统 {self.name} 不变性检验通过: {report.max_violations}")

    @property
    def default_connection(self) -> PrincipalConnection:
        return self.connections[self.default_connection_name]

    def connection(self, name: Optional[str] = None) -> PrincipalConnection:
        """
        按名称取联络

        Raises:
            KeyError: 联络不存在
        """
        name = name or self.default_connection_name
        if name not in self.connections:
            available = ", ".join(self.connections.keys())
            raise KeyError(f"联络 '{name}' 不存在。可用联络: {available}")
        return self.connections[name]


def empty_chart(name: str) -> Chart:
    return Chart(name, ())


def translation_quotient(
    base: Chart,
    base_index: Tuple[int, ...],
    gauge_index: Tuple[int, ...],
) -> QuotientChart:
    """
    坐标平移作用的平凡化：x 取 base_index 处的坐标，规范坐标取 gauge_index 处的坐标

    适用于 𝔤_μ = 𝔤 的交换情形，纤维 y 为空。
    """
    dim = len(base_index) + len(gauge_index)
    bi = np.array(base_index, dtype=int)
    gi = np.array(gauge_index, dtype=int)

    def project(q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(q, dtype=float)[bi], np.zeros(0)

    def project_tangent(q: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(v, dtype=float)[bi], np.zeros(0)

    def lift(x: np.ndarray, y: np.ndarray, h: np.ndarray) -> np.ndarray:
        q = np.zeros(dim)
        q[bi] = x
        q[gi] = h
        return q

    def lift_tangent(x: np.ndarray, y: np.ndarray, h: np.ndarray, xd: np.ndarray, yd: np.ndarray) -> np.ndarray:
        v = np.zeros(dim)
        v[bi] = xd
        return v

    def gauge(q: np.ndarray) -> np.ndarray:
        return np.asarray(q, dtype=float)[gi]

    return QuotientChart(
        base=base,
        fibre=empty_chart("pt"),
        gauge_dim=len(gauge_index),
        project=project,
        project_tangent=project_tangent,
        lift=lift,
        lift_tangent=lift_tangent,
        gauge=gauge,
        group_element=gauge,
    )
