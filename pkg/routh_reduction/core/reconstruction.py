"""
重建模块

从约化轨迹 (x(t), y(t), ξ̃(t)) 重建全轨迹：水平提升、群 ODE、规范拼装，
以及轨迹投影与比较。
"""

from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import polar

from routh_reduction.core.calculus import ChartState, Trajectory, wrap_angle
from routh_reduction.core.connection import PrincipalConnection, horizontal_frame, horizontal_lift, quotient_coords
from routh_reduction.core.lagrangian import LagrangianSystem, attach_diagnostics
from routh_reduction.core.symmetry import ActionSide, LieGroup, hat
from routh_reduction.utils.errors import ComparisonError, GaugeAnchorError
from routh_reduction.utils.logger import get_logger

logger = get_logger(__name__)

ANCHOR_TOLERANCE = 1e-10


def _angle_aware_difference(a: np.ndarray, b: np.ndarray, angular: Sequence[bool]) -> np.ndarray:
    diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    for i, is_angle in enumerate(angular):
        if is_angle:
            diff[..., i] = wrap_angle(diff[..., i])
    return diff


def _unwrap(values: np.ndarray, angular: Sequence[bool]) -> np.ndarray:
    out = np.array(values, dtype=float)
    for i, is_angle in enumerate(angular):
        if is_angle:
            out[:, i] = np.unwrap(out[:, i])
    return out


def horizontal_lift_curve(
    conn: PrincipalConnection,
    times: np.ndarray,
    x: np.ndarray,
    xdot: np.ndarray,
    q_a: np.ndarray,
) -> np.ndarray:
    """
    底曲线 x(t) 过 q_a 的水平提升 q_h(t)

    以 RK4 沿给定时间网格积分 q̇ = hor(q)·ẋ(t)，ẋ 在 RK4 中间级用三次样条插值。

    Args:
        conn: 主联络
        times: 时间网格
        x: 底曲线，形状 (N, n)
        xdot: 底速度，形状 (N, n)
        q_a: 起点，要求 π(q_a) = x(a)

    Returns:
        形状 (N, nq) 的位形序列

    Raises:
        GaugeAnchorError: 起点不在 x(a) 上方
        ChartSingularityError: 途经坐标卡奇异区域
    """
    quotient = conn.quotient
    times = np.asarray(times, dtype=float)
    n = quotient.n
    q_a = np.asarray(q_a, dtype=float)
    x = np.asarray(x, dtype=float).reshape(len(times), n)
    xdot = np.asarray(xdot, dtype=float).reshape(len(times), n)

    x_a, _ = quotient.project(q_a)
    mismatch = float(
        np.max(np.abs(_angle_aware_difference(np.atleast_1d(x_a), x[0], quotient.base.angular or ())), initial=0.0)
    )
    if mismatch > ANCHOR_TOLERANCE:
        raise GaugeAnchorError(f"起点 {q_a.tolist()} 不在 x(a) = {x[0].tolist()} 上方", mismatch)

    points = np.empty((len(times), q_a.shape[0]))
    points[0] = q_a
    if n == 0 or len(times) == 1:
        points[:] = q_a
        return points

    spline = CubicSpline(times, xdot, axis=0)

    def vector_field(t: float, q: np.ndarray) -> np.ndarray:
        return horizontal_frame(conn, q) @ spline(t)

    q = q_a.copy()
    chart = conn.action.chart
    for i in range(len(times) - 1):
        t, h = times[i], times[i + 1] - times[i]
        k1 = vector_field(t, q)
        k2 = vector_field(t + 0.5 * h, q + 0.5 * h * k1)
        k3 = vector_field(t + 0.5 * h, q + 0.5 * h * k2)
        k4 = vector_field(t + h, q + h * k3)
        q = q + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        chart.require_regular(q, times[i + 1])
        points[i + 1] = q
    return points


def solve_group_ode(
    group: LieGroup,
    times: np.ndarray,
    xis: np.ndarray,
    side: ActionSide = ActionSide.RIGHT,
    g_a: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    求解群 ODE

    side 为 RIGHT 时解 ġ g⁻¹ = ξ(t)，为 LEFT 时解 g⁻¹ ġ = ξ(t)。
    SO(3) 用 RK4（ξ 在中间级三次样条插值）并每步极分解正交化；
    交换群直接求积分 g(t) = g(a) + ∫ξ。

    Args:
        group: 李群
        times: 时间网格
        xis: 网格上的 ξ，形状 (N, dim𝔤)
        side: ODE 的形式
        g_a: 初值，默认单位元

    Returns:
        群元序列；SO(3) 形状 (N, 3, 3)，交换群 (N, dim𝔤)
    """
    times = np.asarray(times, dtype=float)
    xis = np.asarray(xis, dtype=float).reshape(len(times), group.dim)
    g0 = group.identity() if g_a is None else np.asarray(g_a, dtype=float)

    if len(times) == 1:
        return np.array([g0])

    spline = CubicSpline(times, xis, axis=0)
    if group.is_abelian:
        integral = spline.antiderivative()
        return g0 + (integral(times) - integral(times[0]))

    def vector_field(t: float, g: np.ndarray) -> np.ndarray:
        xi_hat = hat(spline(t))
        return xi_hat @ g if side == ActionSide.RIGHT else g @ xi_hat

    out = np.empty((len(times), 3, 3))
    out[0] = g0
    g = g0.copy()
    for i in range(len(times) - 1):
        t, h = times[i], times[i + 1] - times[i]
        k1 = vector_field(t, g)
        k2 = vector_field(t + 0.5 * h, g + 0.5 * h * k1)
        k3 = vector_field(t + 0.5 * h, g + 0.5 * h * k2)
        k4 = vector_field(t + h, g + h * k3)
        g, _ = polar(g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        out[i + 1] = g
    return out


def project_trajectory(conn: PrincipalConnection, traj: Trajectory, mu: Optional[Any] = None) -> Trajectory:
    """
    全轨迹在平凡化下的投影

    Returns:
        (x, y) 坐标卡上的轨迹，速度为 (ẋ, ẏ)，诊断通道 xi_tilde 与 gauge
    """
    quotient = conn.quotient
    chart = quotient.reduced_chart
    positions, velocities, xis, gauges = [], [], [], []
    for s in traj.states:
        point = quotient_coords(conn, s, mu)
        _, ydot = quotient.project_tangent(s.q, s.v)
        positions.append(np.concatenate([np.atleast_1d(point.x), np.atleast_1d(point.y)]))
        velocities.append(np.concatenate([np.atleast_1d(point.xdot), np.atleast_1d(ydot)]))
        xis.append(point.xi_tilde)
        gauges.append(np.atleast_1d(point.gauge))
    diagnostics = {"xi_tilde": np.array(xis), "gauge": np.array(gauges)}
    return Trajectory.from_arrays(
        chart,
        traj.times,
        np.array(positions).reshape(len(traj), chart.dim),
        np.array(velocities).reshape(len(traj), chart.dim),
        diagnostics,
    )


def multiplier_quadrature(traj: Trajectory, g0: Any, channel: str = "multiplier") -> np.ndarray:
    """
    阿贝尔群的规范坐标 g(t) = g₀ + ∫ ξ̃ dt

    线性约束问题中乘子即纤维速度 ξ̃，对其做样条积分恢复被约化掉的坐标。

    Args:
        traj: solve_linear_constrained 的轨迹
        g0: 初始规范坐标
        channel: 乘子所在的诊断通道

    Returns:
        (N × k) 数组
    """
    values = np.asarray(traj.channel(channel), dtype=float).reshape(len(traj), -1)
    start = np.atleast_1d(np.asarray(g0, dtype=float))
    if len(traj) < 2:
        return start.reshape(1, -1)
    integral = CubicSpline(traj.times, values, axis=0).antiderivative()
    return start + integral(traj.times) - integral(traj.times[0])


def reconstruct(
    conn: PrincipalConnection,
    reduced_traj: Trajectory,
    q_a: np.ndarray,
    sys: Optional[LagrangianSystem] = None,
) -> Trajectory:
    """
    从约化轨迹重建全轨迹 q(t) = g(t)·q_h(t)

    reduced_traj 可以在 (x, y) 坐标卡上（ξ̃ 取自诊断通道 xi_tilde），
    也可以在 (x, y, ξ̃) 坐标卡上（ξ̃ 取自位置分量）。

    Args:
        conn: 约化时使用的主联络
        reduced_traj: 约化轨迹
        q_a: 锚点，要求 π_μ(q_a) = (x(a), y(a))
        sys: 提供时附加 E_L、force_power、J_L 诊断通道

    Returns:
        全坐标卡上的轨迹，诊断通道包含 projection_defect 与 connection_defect

    Raises:
        GaugeAnchorError: 锚点与约化轨迹起点不一致
    """
    quotient = conn.quotient
    action = conn.action
    group = action.group
    n, k = quotient.n, quotient.k
    times = reduced_traj.times
    positions = reduced_traj.positions
    velocities = reduced_traj.velocities
    x, y, xdot = positions[:, :n], positions[:, n : n + k], velocities[:, :n]
    if reduced_traj.chart.dim == n + k + group.dim:
        xis = positions[:, n + k :]
    else:
        xis = np.asarray(reduced_traj.channel("xi_tilde"), dtype=float).reshape(len(times), group.dim)

    q_a = np.asarray(q_a, dtype=float)
    reduced_angular = quotient.reduced_chart.angular or ()
    x_a, y_a = quotient.project(q_a)
    anchor = np.concatenate([np.atleast_1d(x_a), np.atleast_1d(y_a)])
    mismatch = float(
        np.max(np.abs(_angle_aware_difference(anchor, positions[0, : n + k], reduced_angular)), initial=0.0)
    )
    if mismatch > ANCHOR_TOLERANCE:
        raise GaugeAnchorError(f"锚点投影 {anchor.tolist()} 与约化轨迹起点不一致", mismatch)

    logger.info(f"重建开始: {len(times)} 个时间点, 联络 {conn.name}")
    q_h = horizontal_lift_curve(conn, times, x, xdot, q_a)
    xi_h = np.array([conn.transport(q) @ xi for q, xi in zip(q_h, xis)])
    elements = solve_group_ode(group, times, xi_h, action.side)

    states = []
    for g, qh, xd, xi in zip(elements, q_h, xdot, xis):
        q = np.asarray(action.act(g, qh), dtype=float)
        v = horizontal_lift(conn, xd, q) + action.generator(q, conn.transport(q) @ xi)
        states.append(ChartState(action.chart, q, v))
    traj = Trajectory(action.chart, np.array(times, dtype=float), states)

    angular = action.chart.angular or ()
    qs = traj.positions
    projected = np.array(
        [np.concatenate([np.atleast_1d(p) for p in quotient.project(q)]) for q in qs]
    ).reshape(len(times), n + k)
    traj.diagnostics["projection_defect"] = np.max(
        np.abs(_angle_aware_difference(projected, positions[:, : n + k], reduced_angular)), axis=1, initial=0.0
    )
    if len(times) > 2:
        qdot = np.gradient(_unwrap(qs, angular), times, axis=0, edge_order=2)
        numeric_xi = np.array([np.linalg.solve(conn.transport(q), conn.omega(q, qd)) for q, qd in zip(qs, qdot)])
        traj.diagnostics["connection_defect"] = np.max(np.abs(numeric_xi - xis), axis=1)
    else:
        traj.diagnostics["connection_defect"] = np.zeros(len(times))
    if group.is_abelian:
        traj.diagnostics["g"] = np.asarray(elements).reshape(len(times), -1)
    else:
        traj.diagnostics["g"] = np.asarray(elements).reshape(len(times), 9)
        traj.diagnostics["group_defect"] = np.array([group.defect(g) for g in elements])
    if sys is not None:
        attach_diagnostics(sys, traj, action)

    logger.info(
        f"重建完成: 最大投影偏差 {float(np.max(traj.diagnostics['projection_defect'])):.3e}, "
        f"最大联络偏差 {float(np.max(traj.diagnostics['connection_defect'])):.3e}"
    )
    return traj


@dataclass
class ComparisonReport:
    """两条轨迹的比较结果"""

    sup_error: float
    per_channel: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {"sup_error": self.sup_error, "per_channel": dict(self.per_channel)}


def compare_trajectories(
    a: Trajectory,
    b: Trajectory,
    weights: Optional[Sequence[float]] = None,
    angular: Optional[Sequence[bool]] = None,
    include_velocities: bool = False,
) -> ComparisonReport:
    """
    比较同一坐标卡上的两条轨迹

    网格不同时把 b 用三次样条重采样到 a 的网格上；角度坐标按模 2π 比较。

    Args:
        a, b: 待比较的轨迹
        weights: 各坐标的权重，默认全 1
        angular: 角度标记，默认取坐标卡的标记
        include_velocities: 是否同时比较速度

    Returns:
        ComparisonReport，per_channel 以坐标名为键

    Raises:
        ComparisonError: 坐标卡不一致，或 b 的时间范围不覆盖 a
    """
    if a.chart.coord_names != b.chart.coord_names:
        raise ComparisonError(f"坐标卡不一致: {a.chart.coord_names} vs {b.chart.coord_names}")
    dim = a.chart.dim
    angular = tuple(angular if angular is not None else (a.chart.angular or (False,) * dim))
    weight = np.ones(dim) if weights is None else np.asarray(weights, dtype=float)

    bq, bv = b.positions, b.velocities
    if len(a.times) != len(b.times) or not np.allclose(a.times, b.times, rtol=0.0, atol=1e-12):
        if a.times[0] < b.times[0] - 1e-12 or a.times[-1] > b.times[-1] + 1e-12:
            raise ComparisonError("轨迹 b 的时间范围不覆盖轨迹 a")
        bq = CubicSpline(b.times, _unwrap(bq, angular), axis=0)(a.times)
        bv = CubicSpline(b.times, bv, axis=0)(a.times)

    per_channel: Dict[str, float] = {}
    diff = np.abs(_angle_aware_difference(a.positions, bq, angular)) * weight
    for i, name in enumerate(a.chart.coord_names):
        per_channel[name] = float(np.max(diff[:, i], initial=0.0))
    if include_velocities:
        vdiff = np.abs(a.velocities - bv) * weight
        for i, name in enumerate(a.chart.coord_names):
            per_channel[f"d{name}"] = float(np.max(vdiff[:, i], initial=0.0))

    sup_error = max(per_channel.values(), default=0.0)
    logger.debug(f"轨迹比较: sup_error={sup_error:.3e}")
    return ComparisonReport(sup_error, per_channel)
