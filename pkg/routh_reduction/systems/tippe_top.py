"""
Tippe Top

球形陀螺在平面上滚滑，坐标 (φ, θ, ψ)。S¹ 作用 (φ + Rα, θ, ψ − εα)，
对应的动量为 Jellet 积分；摩擦力满足不变性条件，因此 Jellet 积分在耗散下守恒。
"""

from typing import Tuple

import numpy as np

from routh_reduction.core.calculus import Chart, ChartState
from routh_reduction.core.connection import QuotientChart, coordinate_connection
from routh_reduction.core.lagrangian import ForceTerm, KineticForm, LagrangianSystem
from routh_reduction.core.symmetry import ActionSide, GroupAction, LieGroup
from routh_reduction.systems.base import SystemBundle, empty_chart

POLE_TOLERANCE = 1e-3


def tippe_top(
    m: float = 1.0,
    g: float = 9.81,
    R: float = 1.0,
    epsilon: float = 0.3,
    A: float = 0.4,
    C: float = 0.5,
    friction: float = 0.02,
) -> SystemBundle:
    """
    构造 Tippe Top

    Args:
        m, g: 质量与重力加速度
        R: 球半径
        epsilon: 球心到质心的距离
        A, C: 主惯量
        friction: 滑动摩擦系数 μ_f
    """
    if A <= 0 or C <= 0:
        raise ValueError(f"主惯量必须为正: A={A}, C={C}")
    norm = epsilon**2 + R**2

    def metric(q: np.ndarray) -> np.ndarray:
        s, c = np.sin(q[1]), np.cos(q[1])
        return np.array(
            [
                [A * s**2 + C * c**2, 0.0, C * c],
                [0.0, epsilon**2 * m * s**2 + A, 0.0],
                [C * c, 0.0, C],
            ]
        )

    def metric_grad(q: np.ndarray) -> np.ndarray:
        s, c = np.sin(q[1]), np.cos(q[1])
        d_theta = np.array(
            [
                [2.0 * (A - C) * s * c, 0.0, -C * s],
                [0.0, 2.0 * epsilon**2 * m * s * c, 0.0],
                [-C * s, 0.0, 0.0],
            ]
        )
        return np.stack([np.zeros((3, 3)), d_theta, np.zeros((3, 3))])

    def friction_force(s: ChartState) -> np.ndarray:
        sn, c = np.sin(s.q[1]), np.cos(s.q[1])
        phi_dot, theta_dot, psi_dot = s.v
        rolling = epsilon * phi_dot + R * psi_dot
        return np.array(
            [
                -friction * epsilon * sn**2 * rolling,
                -friction * (R - epsilon * c) ** 2 * theta_dot,
                -friction * R * sn**2 * rolling,
            ]
        )

    kinetic = KineticForm(
        metric=metric,
        potential=lambda q: m * g * (R - epsilon * np.cos(q[1])),
        metric_grad=metric_grad,
        potential_grad=lambda q: np.array([0.0, m * g * epsilon * np.sin(q[1]), 0.0]),
    )
    chart = Chart(
        "euler",
        ("phi", "theta", "psi"),
        singular_region=lambda q: abs(np.sin(q[1])) < POLE_TOLERANCE,
        angular=(True, True, True),
        lower=(-np.pi, 0.3, -np.pi),
        upper=(np.pi, np.pi - 0.3, np.pi),
    )
    force = ForceTerm.general(friction_force) if friction else ForceTerm.zero()
    sys = LagrangianSystem.from_kinetic(chart, kinetic, force, name="tippe-top")
    generator = np.array([R, 0.0, -epsilon])
    action = GroupAction(
        group=LieGroup.torus(1),
        chart=chart,
        side=ActionSide.RIGHT,
        act=lambda h, q: np.asarray(q, dtype=float) + float(h[0]) * generator,
        generators=lambda q: generator.reshape(3, 1),
    )

    base = Chart(
        "tippe-top/S1",
        ("theta", "u"),
        singular_region=lambda x: abs(np.sin(x[0])) < POLE_TOLERANCE,
        angular=(True, False),
        lower=(0.3, -1.0),
        upper=(np.pi - 0.3, 1.0),
    )

    def project(q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return np.array([q[1], (epsilon * q[0] + R * q[2]) / norm]), np.zeros(0)

    def project_tangent(q: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return np.array([v[1], (epsilon * v[0] + R * v[2]) / norm]), np.zeros(0)

    def lift(x: np.ndarray, y: np.ndarray, h: np.ndarray) -> np.ndarray:
        return np.array([epsilon * x[1] + R * h[0], x[0], R * x[1] - epsilon * h[0]])

    def lift_tangent(x: np.ndarray, y: np.ndarray, h: np.ndarray, xd: np.ndarray, yd: np.ndarray) -> np.ndarray:
        return np.array([epsilon * xd[1], xd[0], R * xd[1]])

    def gauge(q: np.ndarray) -> np.ndarray:
        return np.array([(R * q[0] - epsilon * q[2]) / norm])

    quotient = QuotientChart(
        base=base,
        fibre=empty_chart("pt"),
        gauge_dim=1,
        project=project,
        project_tangent=project_tangent,
        lift=lift,
        lift_tangent=lift_tangent,
        gauge=gauge,
        group_element=gauge,
    )
    flat = coordinate_connection(action, quotient)

    def jellet(s: ChartState) -> float:
        return float(generator @ metric(s.q) @ s.v)

    def routhian(s: ChartState, mu: float) -> float:
        """R^μ = L − μ(Rφ̇ − εψ̇)/(ε² + R²)"""
        return sys.lagrangian(s) - mu * (R * s.v[0] - epsilon * s.v[2]) / norm

    q0 = np.array([0.0, 1.2, 0.0])
    v0 = np.array([0.0, 0.0, 3.0])
    s0 = ChartState(chart, q0, v0)

    return SystemBundle(
        name="tippe-top",
        description="Tippe Top，斜 S¹ 作用 (φ+Rα, θ, ψ−εα)，摩擦下 Jellet 积分守恒",
        sys=sys,
        action=action,
        quotient=quotient,
        connections={"flat": flat},
        default_connection_name="flat",
        params={"m": m, "g": g, "R": R, "epsilon": epsilon, "A": A, "C": C, "friction": friction},
        reference_formulas={
            "friction_force": friction_force,
            "jellet": jellet,
            "routhian": routhian,
        },
        default_state=s0,
        default_mu=np.array([jellet(s0)]),
        horizon=5.0,
        g_regular=True,
    )
