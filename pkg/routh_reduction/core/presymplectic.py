"""
预辛模块

T_MN = TN ×_N M 上的 Legendre 映射 𝔽₁L、能量、预辛二形式
ω = (𝔽₁L)*ω_N + π₂*β，逐点可解性检验（约束算法的第一步），
以及局部平凡化下的 Lagrange–Poincaré 残差。

T_MN 的坐标为 z = (x, ẋ, m)，m 为纤维坐标。
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np

from routh_reduction.core.calculus import ChartState, Trajectory, fd_gradient, fd_jacobian
from routh_reduction.core.lagrangian import FibredSystem
from routh_reduction.core.routh import ReducedSystem, RegularReducedSystem
from routh_reduction.utils.logger import get_logger

logger = get_logger(__name__)

SOLVABILITY_TOLERANCE = 1e-8
KERNEL_THRESHOLD = 1e-10

Reducible = Union[FibredSystem, ReducedSystem, RegularReducedSystem]


def _as_fibred(obj: Reducible) -> FibredSystem:
    if isinstance(obj, FibredSystem):
        return obj
    return obj.fibred


@dataclass(frozen=True)
class PresymplecticPoint:
    """
    T_MN 中的点 (v_x, m)，可附带切向量 ż

    Attributes:
        x: 底点
        xdot: 底速度
        m: 纤维点
        zdot: 可选的切向量，按 (ẋ, ẍ, ṁ) 排列
    """

    x: np.ndarray
    xdot: np.ndarray
    m: np.ndarray
    zdot: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        for name in ("x", "xdot", "m"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))
        if self.x.shape != self.xdot.shape:
            raise ValueError(f"底点维数 {self.x.shape} 与底速度维数 {self.xdot.shape} 不一致")
        if self.zdot is not None:
            zdot = np.asarray(self.zdot, dtype=float)
            if zdot.shape != self.z.shape:
                raise ValueError(f"切向量维数 {zdot.shape} 与 T_MN 维数 {self.z.shape} 不一致")
            object.__setattr__(self, "zdot", zdot)

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.xdot, self.m])

    @classmethod
    def from_z(cls, z: np.ndarray, n: int, zdot: Optional[np.ndarray] = None) -> "PresymplecticPoint":
        z = np.asarray(z, dtype=float)
        return cls(z[:n], z[n : 2 * n], z[2 * n :], zdot)

    def state(self, fsys: FibredSystem) -> ChartState:
        """全坐标卡状态 (x, m | ẋ, 0)"""
        return ChartState(
            fsys.chart, np.concatenate([self.x, self.m]), np.concatenate([self.xdot, np.zeros(self.m.shape[0])])
        )


class FormProvenance(str, Enum):
    PULLBACK_CANONICAL = "pullback_canonical"
    BETA = "beta"
    SUM = "sum"


@dataclass(frozen=True)
class TwoFormEval:
    """T_MN 坐标基下的反对称矩阵"""

    matrix: np.ndarray
    provenance: FormProvenance

    @property
    def rank(self) -> int:
        singular_values = np.linalg.svd(self.matrix, compute_uv=False)
        if singular_values.size == 0 or singular_values[0] == 0.0:
            return 0
        return int(np.sum(singular_values > KERNEL_THRESHOLD * singular_values[0]))

    @property
    def kernel_dim(self) -> int:
        return self.matrix.shape[0] - self.rank

    @property
    def condition(self) -> float:
        return float(np.linalg.cond(self.matrix)) if self.matrix.size else 1.0


def legendre_f1(obj: Reducible, point: PresymplecticPoint) -> np.ndarray:
    """𝔽₁L(v_x, m) = ∂L/∂ẋ"""
    fsys = _as_fibred(obj)
    n = fsys.base_dim
    return fsys.total.dL_dv(point.state(fsys))[:n]


def energy(obj: Reducible, point: PresymplecticPoint) -> float:
    """E_L = ⟨𝔽₁L(z), ẋ⟩ − L(z)"""
    fsys = _as_fibred(obj)
    s = point.state(fsys)
    n = fsys.base_dim
    return float(fsys.total.dL_dv(s)[:n] @ point.xdot) - fsys.total.lagrangian(s)


def _embed(fsys: FibredSystem, values: np.ndarray) -> np.ndarray:
    """全坐标卡 (x, m) 上的余向量嵌入 T_MN 坐标 (x, ẋ, m)，ẋ 分量为零"""
    n = fsys.base_dim
    out = np.zeros(2 * n + fsys.fibre_dim)
    out[:n] = values[:n]
    out[2 * n :] = values[n:]
    return out


def _beta_block(fsys: FibredSystem, point: PresymplecticPoint) -> np.ndarray:
    n, k = fsys.base_dim, fsys.fibre_dim
    out = np.zeros((2 * n + k, 2 * n + k))
    F = fsys.total.F
    if F.beta is None:
        return out
    beta = np.asarray(F.beta(np.concatenate([point.x, point.m])), dtype=float)
    index = np.concatenate([np.arange(n), 2 * n + np.arange(k)]).astype(int)
    out[np.ix_(index, index)] = beta
    return out


def presymplectic_form(obj: Reducible, point: PresymplecticPoint) -> TwoFormEval:
    """
    ω = Σ dp_i ∧ dx^i + β，p = 𝔽₁L(z)

    典则部分矩阵为 PᵀE − EᵀP，P = ∂p/∂z 由有限差分计算，E = ∂x/∂z。
    """
    fsys = _as_fibred(obj)
    n = fsys.base_dim
    dim = 2 * n + fsys.fibre_dim
    z = point.z

    canonical = np.zeros((dim, dim))
    if n:
        P = fd_jacobian(lambda w: legendre_f1(fsys, PresymplecticPoint.from_z(w, n)), z)
        E = np.zeros((n, dim))
        E[:, :n] = np.eye(n)
        canonical = P.T @ E - E.T @ P

    beta = _beta_block(fsys, point)
    matrix = canonical + beta
    matrix = 0.5 * (matrix - matrix.T)
    has_beta = bool(np.any(beta != 0.0))
    if n and has_beta:
        provenance = FormProvenance.SUM
    elif has_beta:
        provenance = FormProvenance.BETA
    else:
        provenance = FormProvenance.PULLBACK_CANONICAL
    return TwoFormEval(matrix, provenance)


def energy_differential(obj: Reducible, point: PresymplecticPoint) -> np.ndarray:
    fsys = _as_fibred(obj)
    n = fsys.base_dim
    return fd_gradient(lambda w: energy(fsys, PresymplecticPoint.from_z(w, n)), point.z)


def external_force(obj: Reducible, point: PresymplecticPoint) -> np.ndarray:
    """非陀螺力在 T_MN 坐标下的余向量（陀螺部分已计入二形式）"""
    fsys = _as_fibred(obj)
    return _embed(fsys, fsys.total.F.non_gyroscopic_part(point.state(fsys)))


def presymplectic_residual(
    obj: Reducible, point: PresymplecticPoint, force: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    预辛方程残差 i_ż ω + dE − f

    Args:
        obj: 约化系统或内蕴约束系统
        point: 带切向量 ż 的点
        force: T_MN 坐标下的非陀螺力，默认由系统力项计算

    Returns:
        残差余向量，沿真实临界曲线为零
    """
    if point.zdot is None:
        raise ValueError("预辛残差需要切向量 ż")
    fsys = _as_fibred(obj)
    W = presymplectic_form(fsys, point).matrix
    f = external_force(fsys, point) if force is None else np.asarray(force, dtype=float)
    return W.T @ point.zdot + energy_differential(fsys, point) - f


@dataclass
class ConstraintCheckReport:
    """逐点约束检验结果"""

    solvable: bool
    residual: float
    kernel_dim: int
    zdot: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        return {"solvable": self.solvable, "residual": self.residual, "kernel_dim": self.kernel_dim}


def pointwise_constraint_check(
    obj: Reducible, point: PresymplecticPoint, force: Optional[np.ndarray] = None
) -> ConstraintCheckReport:
    """
    约束算法第一步：i_ż ω = −dE + f 在该点是否有解

    可解当且仅当最小二乘残差 ≤ 1e-8；奇异值小于 1e-10·σ_max 计入核。
    返回的 zdot 为最小二乘解（正则情形即流方向）。
    """
    fsys = _as_fibred(obj)
    form = presymplectic_form(fsys, point)
    f = external_force(fsys, point) if force is None else np.asarray(force, dtype=float)
    rhs = -energy_differential(fsys, point) + f
    zdot = np.linalg.lstsq(form.matrix.T, rhs, rcond=KERNEL_THRESHOLD)[0]
    residual = float(np.linalg.norm(form.matrix.T @ zdot - rhs))
    report = ConstraintCheckReport(residual <= SOLVABILITY_TOLERANCE, residual, form.kernel_dim, zdot)
    logger.debug(f"逐点约束检验: {report.to_dict()}")
    return report


def presymplectic_residual_along(obj: Reducible, traj: Trajectory) -> np.ndarray:
    """
    沿轨迹的预辛残差

    轨迹位置为 (x, m)、速度为 (ẋ, ṁ)；ẍ 优先取诊断通道 xddot，否则数值微分。

    Returns:
        形状 (N, 2n + dim m) 的残差
    """
    fsys = _as_fibred(obj)
    n = fsys.base_dim
    positions, velocities = traj.positions, traj.velocities
    if "xddot" in traj.diagnostics:
        xddot = np.asarray(traj.channel("xddot"), dtype=float).reshape(len(traj), n)
    else:
        xddot = np.gradient(velocities[:, :n], traj.times, axis=0, edge_order=2) if n else np.zeros((len(traj), 0))

    rows = []
    for q, v, a in zip(positions, velocities, xddot):
        zdot = np.concatenate([v[:n], a, v[n:]])
        point = PresymplecticPoint(q[:n], v[:n], q[n:], zdot)
        rows.append(presymplectic_residual(fsys, point))
    residual = np.array(rows)
    logger.info(f"预辛残差: 沿 {len(traj)} 个点的最大值 {float(np.max(np.abs(residual))):.3e}")
    return residual


def _section_form(reduced: ReducedSystem, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """平凡化截面 s(x)（群元为单位元）上的联络形式 A(x)，dim𝔤 × n"""
    quotient = reduced.conn.quotient
    action = reduced.action
    group = action.group

    def section(p: np.ndarray) -> np.ndarray:
        q0 = quotient.at(p, y)
        g0 = np.asarray(quotient.group_element(q0), dtype=float)
        return np.asarray(action.act(group.inverse(g0), q0), dtype=float)

    jac = fd_jacobian(section, np.asarray(x, dtype=float))
    return reduced.conn.omega_matrix(section(np.asarray(x, dtype=float))) @ jac


def lagrange_poincare_residual(reduced: ReducedSystem, traj: Trajectory) -> Tuple[np.ndarray, np.ndarray]:
    """
    局部平凡化下的 Lagrange–Poincaré 残差

    Π = 𝔽_ξ̃ l，A 为截面上的联络形式，s 右作用取 +1、左作用取 −1：
        竖直: Π̇ − s·ad*_{Aẋ}Π + s·ad*_ξ̃ Π − F_v
        水平: EL(l)_i + ⟨Π, (dA)_{ij}⟩ẋ^j − s(⟨Π, [Aẋ, A_i]⟩ − ⟨Π, [ξ̃, A_i]⟩) + f_i

    Args:
        reduced: 约化系统（提供 l、联络与力）
        traj: (x, y) 坐标卡上的投影轨迹，带 xi_tilde 诊断通道

    Returns:
        (竖直残差 (N, dim𝔤), 水平残差 (N, n))
    """
    n, m = reduced.n, reduced.m
    group = reduced.action.group
    side = reduced.action.side.sign
    N = len(traj)
    positions, velocities = traj.positions, traj.velocities
    xis = np.asarray(traj.channel("xi_tilde"), dtype=float).reshape(N, m)

    momenta = np.empty((N, m))
    p_x = np.empty((N, n))
    grad_x = np.empty((N, n))
    forces_x = np.empty((N, n))
    forces_v = np.empty((N, m))
    forms = np.empty((N, m, n))
    curls = np.empty((N, m, n, n))
    for i in range(N):
        x, y = positions[i, :n], positions[i, n:]
        xdot, xi = velocities[i, :n], xis[i]
        frame = reduced.frame(x, y)
        s = reduced.state(frame, xdot, xi)
        dL_dv = reduced.sys.dL_dv(s)
        F = reduced.sys.force(s)
        momenta[i] = frame.sig.T @ dL_dv
        p_x[i] = frame.hor.T @ dL_dv
        forces_x[i] = frame.hor.T @ F
        forces_v[i] = frame.sig.T @ F
        if n:
            # ∂l/∂x = ∂𝓡^μ/∂x + ⟨∂μ̃/∂x, ξ̃⟩
            grad_x[i] = reduced.partials(x, xdot, y, xi).d_pos[:n] + reduced.frame_jet(x, y).dmu[:n] @ xi
            forms[i] = _section_form(reduced, x, y)
            jac = fd_jacobian(lambda p: _section_form(reduced, p, y).reshape(-1), x).reshape(m, n, n)
            curls[i] = np.transpose(jac, (0, 2, 1)) - jac

    momenta_dot = np.gradient(momenta, traj.times, axis=0, edge_order=2)
    p_x_dot = np.gradient(p_x, traj.times, axis=0, edge_order=2) if n else np.zeros((N, 0))

    vertical = np.empty((N, m))
    horizontal = np.empty((N, n))
    for i in range(N):
        xdot, xi, Pi = velocities[i, :n], xis[i], momenta[i]
        A_xdot = forms[i] @ xdot if n else np.zeros(m)
        vertical[i] = (
            momenta_dot[i]
            - side * group.coad_star(A_xdot, Pi)
            + side * group.coad_star(xi, Pi)
            - forces_v[i]
        )
        for j in range(n):
            A_j = forms[i][:, j]
            bracket_terms = float(Pi @ group.bracket(A_xdot, A_j)) - float(Pi @ group.bracket(xi, A_j))
            horizontal[i, j] = (
                grad_x[i, j]
                - p_x_dot[i, j]
                + float(Pi @ curls[i][:, j, :] @ xdot)
                - side * bracket_terms
                + forces_x[i, j]
            )
    logger.info(
        f"Lagrange–Poincaré 残差: 竖直 {float(np.max(np.abs(vertical), initial=0.0)):.3e}, "
        f"水平 {float(np.max(np.abs(horizontal), initial=0.0)):.3e}"
    )
    return vertical, horizontal
