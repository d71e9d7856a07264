"""
循环变量玩具系统

L = (q̇¹)² + q̇¹q̇² − V(q¹)，q² 方向平移对称，J_L = q̇¹。
速度 Hessian 非退化，但锁定惯性为零，系统不是 G-正则的。
"""

from typing import Callable, Optional

import numpy as np

from routh_reduction.core.calculus import Chart, ChartState, fd_gradient
from routh_reduction.core.connection import coordinate_connection
from routh_reduction.core.lagrangian import KineticForm, LagrangianSystem
from routh_reduction.core.symmetry import ActionSide, GroupAction, LieGroup
from routh_reduction.systems.base import SystemBundle, translation_quotient

METRIC = np.array([[2.0, 1.0], [1.0, 0.0]])


def harmonic(q1: float) -> float:
    return 0.5 * q1 * q1


def harmonic_grad(q1: float) -> float:
    return q1


def toy_cyclic(
    V: Optional[Callable[[float], float]] = None,
    breaking: float = 0.0,
) -> SystemBundle:
    """
    构造玩具系统

    Args:
        V: 势能 V(q¹)，默认 ½(q¹)²
        breaking: 破坏对称的附加势 ½·breaking·(q²)²，非零时跳过构造期的不变性断言
    """
    V_grad = harmonic_grad if V is None or V is harmonic else None
    V = V or harmonic
    chart = Chart("toy", ("q1", "q2"))

    def potential(q: np.ndarray) -> float:
        return float(V(float(q[0]))) + 0.5 * breaking * float(q[1]) ** 2

    def potential_grad(q: np.ndarray) -> np.ndarray:
        if V_grad is not None:
            dV = V_grad(float(q[0]))
        else:
            dV = float(fd_gradient(lambda p: float(V(float(p[0]))), q[:1])[0])
        return np.array([dV, breaking * float(q[1])])

    kinetic = KineticForm(
        metric=lambda q: METRIC,
        potential=potential,
        metric_grad=lambda q: np.zeros((2, 2, 2)),
        potential_grad=potential_grad,
    )
    sys = LagrangianSystem.from_kinetic(chart, kinetic, name="toy")
    action = GroupAction(
        group=LieGroup.abelian(1),
        chart=chart,
        side=ActionSide.RIGHT,
        act=lambda g, q: np.asarray(q, dtype=float) + np.array([0.0, float(g[0])]),
        generators=lambda q: np.array([[0.0], [1.0]]),
    )
    quotient = translation_quotient(Chart("toy/G", ("q1",)), (0,), (1,))
    flat = coordinate_connection(action, quotient)

    def closed_form(t: np.ndarray) -> np.ndarray:
        """V = ½(q¹)²、初值 (0, 0 | 1, 0) 的精确解 q¹ = t, q² = −t³/6"""
        t = np.asarray(t, dtype=float)
        return np.stack([t, -(t**3) / 6.0], axis=-1)

    return SystemBundle(
        name="toy",
        description="循环变量玩具系统 L = q̇₁² + q̇₁q̇₂ − V(q₁)，非 G-正则",
        sys=sys,
        action=action,
        quotient=quotient,
        connections={"flat": flat},
        default_connection_name="flat",
        params={"breaking": breaking},
        reference_formulas={
            "momentum": lambda s: float(s.v[0]),
            "closed_form": closed_form,
        },
        default_state=ChartState(chart, np.zeros(2), np.array([1.0, 0.0])),
        default_mu=np.array([1.0]),
        horizon=5.0,
        g_regular=False,
        verify=breaking == 0.0,
    )
