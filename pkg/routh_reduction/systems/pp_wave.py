"""
pp-波时空的测地线

度量 H(u, x, y)du² + 2dudv + dx² + dy²，∂_v 是类光 Killing 场。
约化后得到关于纤维变量线性的内蕴约束系统，约束为 u̇ = μ。
"""

from typing import Callable, Optional

import numpy as np

from routh_reduction.core.calculus import Chart, ChartState
from routh_reduction.core.connection import coordinate_connection
from routh_reduction.core.lagrangian import KineticForm, LagrangianSystem
from routh_reduction.core.symmetry import ActionSide, GroupAction, LieGroup
from routh_reduction.systems.base import SystemBundle, translation_quotient

ProfileFn = Callable[[float, float, float], float]
ProfileGrad = Callable[[float, float, float], np.ndarray]


def saddle_profile(u: float, x: float, y: float) -> float:
    return x * x - y * y


def saddle_profile_grad(u: float, x: float, y: float) -> np.ndarray:
    """(∂_u H, ∂_x H, ∂_y H)"""
    return np.array([0.0, 2.0 * x, -2.0 * y])


def pp_wave(H: Optional[ProfileFn] = None, H_grad: Optional[ProfileGrad] = None) -> SystemBundle:
    """
    构造 pp-波测地线系统

    Args:
        H: 波形函数 H(u, x, y)，默认 x² − y²
        H_grad: H 的梯度，缺省时对自定义 H 用有限差分
    """
    if H is None:
        H, H_grad = saddle_profile, saddle_profile_grad
    profile = H

    def metric(q: np.ndarray) -> np.ndarray:
        M = np.zeros((4, 4))
        M[0, 0] = profile(q[0], q[2], q[3])
        M[0, 1] = M[1, 0] = 1.0
        M[2, 2] = M[3, 3] = 1.0
        return M

    gradient = H_grad

    def metric_grad(q: np.ndarray) -> np.ndarray:
        dH = np.asarray(gradient(q[0], q[2], q[3]), dtype=float)  # type: ignore[misc]
        out = np.zeros((4, 4, 4))
        out[0, 0, 0], out[2, 0, 0], out[3, 0, 0] = dH
        return out

    chart = Chart("null", ("u", "v", "x", "y"))
    kinetic = KineticForm(
        metric=metric,
        metric_grad=metric_grad if gradient is not None else None,
        potential_grad=lambda q: np.zeros(4),
    )
    sys = LagrangianSystem.from_kinetic(chart, kinetic, name="pp-wave")
    action = GroupAction(
        group=LieGroup.abelian(1),
        chart=chart,
        side=ActionSide.RIGHT,
        act=lambda h, q: np.asarray(q, dtype=float) + np.array([0.0, float(h[0]), 0.0, 0.0]),
        generators=lambda q: np.array([[0.0], [1.0], [0.0], [0.0]]),
    )
    quotient = translation_quotient(Chart("pp-wave/R", ("u", "x", "y")), (0, 2, 3), (1,))
    flat = coordinate_connection(action, quotient)

    def reduced_routhian(u: float, x: float, y: float, xdot: float, ydot: float, mu: float) -> float:
        """𝓡̄^μ = ½(μ²H + ẋ² + ẏ²)，约束 u̇ = μ"""
        return 0.5 * (mu**2 * profile(u, x, y) + xdot**2 + ydot**2)

    def momentum(s: ChartState) -> float:
        return float(s.v[0])

    mu = 1.0
    s0 = ChartState(chart, np.array([0.0, 0.0, 0.5, 0.3]), np.array([mu, 0.0, 0.1, -0.2]))

    return SystemBundle(
        name="pp-wave",
        description="pp-波测地线，v 方向类光平移对称，约化为线性约束系统",
        sys=sys,
        action=action,
        quotient=quotient,
        connections={"flat": flat},
        default_connection_name="flat",
        params={"mu": mu},
        reference_formulas={
            "profile": profile,
            "reduced_routhian": reduced_routhian,
            "momentum": momentum,
        },
        default_state=s0,
        default_mu=np.array([mu]),
        horizon=2.0,
        g_regular=False,
    )
