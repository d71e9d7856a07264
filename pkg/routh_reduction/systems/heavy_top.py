"""
磁场中的重陀螺

L = ½I₁θ̇² + ½I₃(ψ̇ + cosθ φ̇)² + ½I₁sin²θ φ̇² − ΩB(ρ_φφ φ̇ + I₃cosθ ψ̇) − mgε cosθ，
ρ_φφ = I₁sin²θ + I₃cos²θ。S¹ 作用于 φ，ΩB = 0 时退化为经典重陀螺。
"""

import numpy as np

from routh_reduction.core.calculus import Chart, ChartState
from routh_reduction.core.connection import coordinate_connection, mechanical_connection
from routh_reduction.core.lagrangian import KineticForm, LagrangianSystem
from routh_reduction.core.symmetry import ActionSide, GroupAction, LieGroup
from routh_reduction.systems.base import SystemBundle, translation_quotient

POLE_TOLERANCE = 1e-3


def heavy_top_magnetic(
    m: float = 1.0,
    g: float = 9.81,
    epsilon: float = 0.1,
    I1: float = 1.0,
    I3: float = 0.5,
    omega_B: float = 0.0,
) -> SystemBundle:
    """
    构造磁场中的重陀螺

    Args:
        m, g: 质量与重力加速度
        epsilon: 支点到质心的距离
        I1, I3: 主惯量
        omega_B: Larmor 频率 ΩB
    """

    def rho(theta: float) -> float:
        return I1 * np.sin(theta) ** 2 + I3 * np.cos(theta) ** 2

    def metric(q: np.ndarray) -> np.ndarray:
        c = np.cos(q[1])
        return np.array([[rho(q[1]), 0.0, I3 * c], [0.0, I1, 0.0], [I3 * c, 0.0, I3]])

    def metric_grad(q: np.ndarray) -> np.ndarray:
        s, c = np.sin(q[1]), np.cos(q[1])
        d_theta = np.array([[2.0 * (I1 - I3) * s * c, 0.0, -I3 * s], [0.0, 0.0, 0.0], [-I3 * s, 0.0, 0.0]])
        return np.stack([np.zeros((3, 3)), d_theta, np.zeros((3, 3))])

    def linear(q: np.ndarray) -> np.ndarray:
        return -omega_B * np.array([rho(q[1]), 0.0, I3 * np.cos(q[1])])

    def linear_grad(q: np.ndarray) -> np.ndarray:
        s, c = np.sin(q[1]), np.cos(q[1])
        out = np.zeros((3, 3))
        out[0, 1] = -omega_B * 2.0 * (I1 - I3) * s * c
        out[2, 1] = omega_B * I3 * s
        return out

    kinetic = KineticForm(
        metric=metric,
        potential=lambda q: m * g * epsilon * np.cos(q[1]),
        linear=linear,
        metric_grad=metric_grad,
        potential_grad=lambda q: np.array([0.0, -m * g * epsilon * np.sin(q[1]), 0.0]),
        linear_grad=linear_grad,
    )
    chart = Chart(
        "euler",
        ("phi", "theta", "psi"),
        singular_region=lambda q: abs(np.sin(q[1])) < POLE_TOLERANCE,
        angular=(True, True, True),
        lower=(-np.pi, 0.3, -np.pi),
        upper=(np.pi, np.pi - 0.3, np.pi),
    )
    sys = LagrangianSystem.from_kinetic(chart, kinetic, name="heavy-top")
    action = GroupAction(
        group=LieGroup.torus(1),
        chart=chart,
        side=ActionSide.RIGHT,
        act=lambda h, q: np.asarray(q, dtype=float) + np.array([float(h[0]), 0.0, 0.0]),
        generators=lambda q: np.array([[1.0], [0.0], [0.0]]),
    )
    base = Chart(
        "heavy-top/S1",
        ("theta", "psi"),
        singular_region=lambda x: abs(np.sin(x[0])) < POLE_TOLERANCE,
        angular=(True, True),
        lower=(0.3, -np.pi),
        upper=(np.pi - 0.3, np.pi),
    )
    quotient = translation_quotient(base, (1, 2), (0,))
    connections = {
        "mechanical": mechanical_connection(sys, action, quotient),
        "flat": coordinate_connection(action, quotient),
    }

    def momentum(s: ChartState) -> float:
        c = np.cos(s.q[1])
        return rho(s.q[1]) * s.v[0] + I3 * c * s.v[2] - omega_B * rho(s.q[1])

    def amended_potential(theta: float, mu: float) -> float:
        """V_μ(θ) = mgε cosθ + ½(μ + ΩBρ_φφ)²/ρ_φφ"""
        r = rho(theta)
        return m * g * epsilon * np.cos(theta) + 0.5 * (mu + omega_B * r) ** 2 / r

    def larmor_phi_dot(theta: float, psi_dot: float, mu: float) -> float:
        """φ̇ = (μ − I₃cosθ ψ̇)/ρ_φφ + ΩB"""
        return (mu - I3 * np.cos(theta) * psi_dot) / rho(theta) + omega_B

    def horizontal_phi_dot(theta: float, psi_dot: float) -> float:
        """机械联络水平提升的 φ̇ = −(I₃cosθ/ρ_φφ)ψ̇"""
        return -I3 * np.cos(theta) / rho(theta) * psi_dot

    def reduced_momentum(theta: float, theta_dot: float, psi_dot: float) -> np.ndarray:
        """𝔽₁𝓡̄^μ = (I₁θ̇, (I₃I₁sin²θ/ρ_φφ)ψ̇)"""
        return np.array([I1 * theta_dot, I3 * I1 * np.sin(theta) ** 2 / rho(theta) * psi_dot])

    q0 = np.array([0.0, 1.0, 0.0])
    v0 = np.array([0.5, 0.0, 5.0])
    s0 = ChartState(chart, q0, v0)

    return SystemBundle(
        name="heavy-top",
        description="磁场中的重陀螺，S¹ 作用于 φ，机械联络 dφ + (I₃cosθ/ρ_φφ)dψ",
        sys=sys,
        action=action,
        quotient=quotient,
        connections=connections,
        default_connection_name="mechanical",
        params={"m": m, "g": g, "epsilon": epsilon, "I1": I1, "I3": I3, "omega_B": omega_B},
        reference_formulas={
            "momentum": momentum,
            "amended_potential": amended_potential,
            "larmor_phi_dot": larmor_phi_dot,
            "horizontal_phi_dot": horizontal_phi_dot,
            "reduced_momentum": reduced_momentum,
        },
        default_state=s0,
        default_mu=np.array([momentum(s0)]),
        horizon=5.0,
        g_regular=True,
    )
