"""
自由刚体

欧拉角 (φ, θ, ψ)（ZXZ 约定，A = R_z(φ)R_x(θ)R_z(ψ)），SO(3) 左作用，
联络为空间角速度 ȦA⁻¹。μ = μk 时 Q/G_μ = S²，坐标 (θ, ψ)，规范坐标 φ。
"""

from typing import Tuple

import numpy as np

from routh_reduction.core.calculus import Chart, ChartState
from routh_reduction.core.connection import QuotientChart, connection_from_coefficients
from routh_reduction.core.lagrangian import KineticForm, LagrangianSystem
from routh_reduction.core.symmetry import ActionSide, GroupAction, LieGroup
from routh_reduction.systems.base import SystemBundle, empty_chart

POLE_TOLERANCE = 1e-3


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_z(a: float) -> np.ndarray:
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def attitude(q: np.ndarray) -> np.ndarray:
    """A(φ, θ, ψ) = R_z(φ) R_x(θ) R_z(ψ)"""
    return rot_z(q[0]) @ rot_x(q[1]) @ rot_z(q[2])


def euler_angles(A: np.ndarray) -> np.ndarray:
    """A ↦ (φ, θ, ψ)，θ ∈ (0, π)"""
    phi = np.arctan2(A[0, 2], -A[1, 2])
    theta = np.arccos(np.clip(A[2, 2], -1.0, 1.0))
    psi = np.arctan2(A[2, 0], A[2, 1])
    return np.array([phi, theta, psi])


def body_matrix(q: np.ndarray) -> np.ndarray:
    """B(θ, ψ)：体坐标角速度 Ω = B q̇"""
    st, ct = np.sin(q[1]), np.cos(q[1])
    sp, cp = np.sin(q[2]), np.cos(q[2])
    return np.array([[st * sp, cp, 0.0], [st * cp, -sp, 0.0], [ct, 0.0, 1.0]])


def body_matrix_grad(q: np.ndarray) -> np.ndarray:
    """∂B/∂q_k，第一维为 k"""
    st, ct = np.sin(q[1]), np.cos(q[1])
    sp, cp = np.sin(q[2]), np.cos(q[2])
    d_theta = np.array([[ct * sp, 0.0, 0.0], [ct * cp, 0.0, 0.0], [-st, 0.0, 0.0]])
    d_psi = np.array([[st * cp, -sp, 0.0], [-st * sp, -cp, 0.0], [0.0, 0.0, 0.0]])
    return np.stack([np.zeros((3, 3)), d_theta, d_psi])


def free_rigid_body(I1: float = 1.0, I2: float = 2.0, I3: float = 3.0, mu: float = 2.0) -> SystemBundle:
    """
    构造自由刚体

    Args:
        I1, I2, I3: 主惯量，均需为正
        mu: 默认动量 μk 的大小
    """
    if min(I1, I2, I3) <= 0:
        raise ValueError(f"主惯量必须为正: {(I1, I2, I3)}")
    inertia = np.diag([I1, I2, I3])

    chart = Chart(
        "euler",
        ("phi", "theta", "psi"),
        singular_region=lambda q: abs(np.sin(q[1])) < POLE_TOLERANCE,
        angular=(True, True, True),
        lower=(-np.pi, 0.3, -np.pi),
        upper=(np.pi, np.pi - 0.3, np.pi),
    )

    def metric(q: np.ndarray) -> np.ndarray:
        B = body_matrix(q)
        return B.T @ inertia @ B

    def metric_grad(q: np.ndarray) -> np.ndarray:
        half = np.einsum("kji,jl->kil", body_matrix_grad(q), inertia @ body_matrix(q))
        return half + np.transpose(half, (0, 2, 1))

    kinetic = KineticForm(metric=metric, metric_grad=metric_grad, potential_grad=lambda q: np.zeros(3))
    sys = LagrangianSystem.from_kinetic(chart, kinetic, name="rigid-body")

    def act(g: np.ndarray, q: np.ndarray) -> np.ndarray:
        return euler_angles(np.asarray(g, dtype=float) @ attitude(q))

    def jacobian(g: np.ndarray, q: np.ndarray) -> np.ndarray:
        # 左乘不改变体坐标角速度
        return np.linalg.solve(body_matrix(act(g, q)), body_matrix(q))

    def generators(q: np.ndarray) -> np.ndarray:
        return np.linalg.solve(body_matrix(q), attitude(q).T)

    action = GroupAction(LieGroup.so3(), chart, ActionSide.LEFT, act, generators, jacobian)

    fibre = Chart(
        "S2",
        ("theta", "psi"),
        singular_region=lambda y: abs(np.sin(y[0])) < POLE_TOLERANCE,
        angular=(True, True),
        lower=(0.3, -np.pi),
        upper=(np.pi - 0.3, np.pi),
    )

    def project(q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return np.zeros(0), np.asarray(q[1:], dtype=float)

    def project_tangent(q: np.ndarray, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return np.zeros(0), np.asarray(v[1:], dtype=float)

    def lift(x: np.ndarray, y: np.ndarray, h: np.ndarray) -> np.ndarray:
        return np.array([h[0], y[0], y[1]], dtype=float)

    def lift_tangent(x: np.ndarray, y: np.ndarray, h: np.ndarray, xd: np.ndarray, yd: np.ndarray) -> np.ndarray:
        return np.array([0.0, yd[0], yd[1]], dtype=float)

    quotient = QuotientChart(
        base=empty_chart("pt"),
        fibre=fibre,
        gauge_dim=1,
        project=project,
        project_tangent=project_tangent,
        lift=lift,
        lift_tangent=lift_tangent,
        gauge=lambda q: np.asarray(q[:1], dtype=float),
        group_element=attitude,
    )
    spatial = connection_from_coefficients(
        action, quotient, lambda q: attitude(q) @ body_matrix(q), name="spatial"
    )

    def mu_tilde(theta: float, psi: float, mu: float) -> np.ndarray:
        st = np.sin(theta)
        return mu * np.array([st * np.sin(psi), st * np.cos(psi), np.cos(theta)])

    def reduced_velocity(theta: float, psi: float, mu: float) -> np.ndarray:
        """(θ̇, ψ̇)"""
        sp, cp = np.sin(psi), np.cos(psi)
        theta_dot = mu * np.sin(theta) * sp * cp * (1.0 / I1 - 1.0 / I2)
        psi_dot = mu * np.cos(theta) * (1.0 / I3 - (sp**2 / I1 + cp**2 / I2))
        return np.array([theta_dot, psi_dot])

    def reduced_routhian(theta: float, psi: float, mu: float) -> float:
        st, ct = np.sin(theta), np.cos(theta)
        sp, cp = np.sin(psi), np.cos(psi)
        return -0.5 * mu**2 * (st**2 * sp**2 / I1 + st**2 * cp**2 / I2 + ct**2 / I3)

    def beta_theta_psi(theta: float, mu: float) -> float:
        return -mu * np.sin(theta)

    def spatial_momentum(s: ChartState) -> np.ndarray:
        A = attitude(s.q)
        return A @ inertia @ body_matrix(s.q) @ s.v

    q0 = np.array([0.2, 1.0, 0.5])
    omega0 = mu_tilde(q0[1], q0[2], mu) / np.diag(inertia)
    v0 = np.linalg.solve(body_matrix(q0), omega0)

    return SystemBundle(
        name="rigid-body",
        description="自由刚体，欧拉角坐标，SO(3) 左作用，G-正则且 β^μ 在 S² 上非退化",
        sys=sys,
        action=action,
        quotient=quotient,
        connections={"spatial": spatial},
        default_connection_name="spatial",
        params={"I1": I1, "I2": I2, "I3": I3, "mu": mu},
        reference_formulas={
            "mu_tilde": mu_tilde,
            "reduced_velocity": reduced_velocity,
            "reduced_routhian": reduced_routhian,
            "beta_theta_psi": beta_theta_psi,
            "spatial_momentum": spatial_momentum,
        },
        default_state=ChartState(chart, q0, v0),
        default_mu=np.array([0.0, 0.0, mu]),
        horizon=5.0,
        g_regular=True,
    )
