"""
主联络模块

主联络 ω、机械联络、坐标（平坦）联络、曲率 Ω、dω^μ、β^μ 的分块，
关联丛上的协变导数，以及商坐标与局部平凡化之间的转换。

所有商空间都只在单个局部平凡化（截面）中实现，不构造整体商流形。
"""

from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Callable, Dict, Optional, Tuple

import numpy as np

from routh_reduction.core.calculus import Chart, ChartState, Trajectory, fd_jacobian
from routh_reduction.core.lagrangian import LagrangianSystem
from routh_reduction.core.symmetry import (
    ActionSide,
    GroupAction,
    as_momentum,
    isotropy_subalgebra,
    locked_inertia,
    sample_states,
)
from routh_reduction.utils.config import config
from routh_reduction.utils.errors import (
    ChartSingularityError,
    NotGRegularError,
    NotInvariantError,
    QuotientMismatchError,
)
from routh_reduction.utils.logger import get_logger

logger = get_logger(__name__)

AXIOM_TOLERANCE = 1e-8
LOCKED_INERTIA_CONDITION_LIMIT = 1e10


@dataclass(frozen=True)
class QuotientChart:
    """
    局部平凡化

    位形 q 由 (x, y, h) 描述：x 是 Q/G 上的坐标，y 是 Q/G_μ → Q/G 的纤维坐标，
    h 是 G_μ 轨道上的规范坐标。lift(x, y, 0) 给出 Q/G_μ → Q 的截面。

    Attributes:
        base: x 坐标卡（可为零维）
        fibre: y 坐标卡（可为零维）
        gauge_dim: 规范坐标维数
        project: q ↦ (x, y)
        project_tangent: (q, v) ↦ (ẋ, ẏ)
        lift: (x, y, h) ↦ q
        lift_tangent: (x, y, h, ẋ, ẏ) ↦ v（规范速度为零）
        gauge: q ↦ h
        group_element: q ↦ g，q 相对截面 lift(x, ·, ·) 的群元（ξ̃ 的平凡化）
    """

    base: Chart
    fibre: Chart
    gauge_dim: int
    project: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]]
    project_tangent: Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]
    lift: Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    lift_tangent: Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray], np.ndarray]
    gauge: Callable[[np.ndarray], np.ndarray]
    group_element: Callable[[np.ndarray], np.ndarray]

    @property
    def n(self) -> int:
        return self.base.dim

    @property
    def k(self) -> int:
        return self.fibre.dim

    @cached_property
    def reduced_chart(self) -> Chart:
        """Q/G_μ 上的坐标卡 (x, y)"""
        n = self.n
        base, fibre = self.base, self.fibre

        def singular(p: np.ndarray) -> bool:
            return base.is_singular(p[:n]) or fibre.is_singular(p[n:])

        return Chart(
            name=f"{base.name}×{fibre.name}" if base.dim and fibre.dim else (base.name if base.dim else fibre.name),
            coord_names=base.coord_names + fibre.coord_names,
            singular_region=singular,
            angular=tuple(base.angular) + tuple(fibre.angular),  # type: ignore[arg-type]
            lower=tuple(base.lower) + tuple(fibre.lower),  # type: ignore[arg-type]
            upper=tuple(base.upper) + tuple(fibre.upper),  # type: ignore[arg-type]
        )

    def split(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        x, y = self.project(q)
        return np.asarray(x, dtype=float), np.asarray(y, dtype=float), np.asarray(self.gauge(q), dtype=float)

    def at(self, x: np.ndarray, y: np.ndarray, h: Optional[np.ndarray] = None) -> np.ndarray:
        h = np.zeros(self.gauge_dim) if h is None else h
        return np.asarray(self.lift(np.asarray(x, dtype=float), np.asarray(y, dtype=float), h), dtype=float)

    def tangent_frame(self, x: np.ndarray, y: np.ndarray, h: Optional[np.ndarray] = None) -> np.ndarray:
        """截面的切映射矩阵 [∂q/∂x, ∂q/∂y]，nq × (n + k)"""
        h = np.zeros(self.gauge_dim) if h is None else h
        n, k = self.n, self.k
        columns = []
        for j in range(n + k):
            e = np.zeros(n + k)
            e[j] = 1.0
            columns.append(np.asarray(self.lift_tangent(x, y, h, e[:n], e[n:]), dtype=float))
        if not columns:
            return np.zeros((self.at(x, y, h).shape[0], 0))
        return np.column_stack(columns)

    def projection_matrix(self, q: np.ndarray) -> np.ndarray:
        """Tπ_μ 的矩阵，(n + k) × nq"""
        nq = q.shape[0]
        rows = []
        for j in range(nq):
            e = np.zeros(nq)
            e[j] = 1.0
            xd, yd = self.project_tangent(q, e)
            rows.append(np.concatenate([np.atleast_1d(xd), np.atleast_1d(yd)]))
        return np.array(rows).T.reshape(self.n + self.k, nq)

    def require_domain(self, q: np.ndarray) -> None:
        x, y = self.project(q)
        point = np.concatenate([np.atleast_1d(x), np.atleast_1d(y)])
        if self.reduced_chart.is_singular(point):
            raise ChartSingularityError(f"位形 {np.round(q, 6).tolist()} 不在平凡化定义域内")


class ConnectionProvenance(str, Enum):
    """联络的来源"""

    MECHANICAL = "mechanical"
    COEFFICIENTS = "coefficients"
    FLAT = "flat"


@dataclass(frozen=True)
class PrincipalConnection:
    """
    主联络 ω，满足 ω(σ_q(ξ)) = ξ 且等变

    Attributes:
        action: 群作用
        quotient: 局部平凡化
        form: q ↦ dim𝔤 × nq 矩阵，ω(q)(v) = form(q)·v
        provenance: 来源
        name: 名称
    """

    action: GroupAction
    quotient: QuotientChart
    form: Callable[[np.ndarray], np.ndarray]
    provenance: ConnectionProvenance
    name: str = ""

    @property
    def group_dim(self) -> int:
        return self.action.group.dim

    def omega_matrix(self, q: np.ndarray) -> np.ndarray:
        return np.asarray(self.form(np.asarray(q, dtype=float)), dtype=float).reshape(
            self.group_dim, self.action.chart.dim
        )

    def omega(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.omega_matrix(q) @ np.asarray(v, dtype=float)

    def transport(self, q: np.ndarray) -> np.ndarray:
        """矩阵 U(q)，q 处的 𝔤 代表元 ξ = U ξ̃；左作用 U = Ad_g，右作用 U = Ad_{g⁻¹}"""
        group = self.action.group
        g = np.asarray(self.quotient.group_element(np.asarray(q, dtype=float)), dtype=float)
        if self.action.side == ActionSide.RIGHT:
            g = group.inverse(g)
        return group.Ad_matrix(g)

    def vertical_part(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        return self.action.generator(q, self.omega(q, v))

    def horizontal_part(self, q: np.ndarray, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float) - self.vertical_part(q, v)

    def d_omega_components(self, q: np.ndarray) -> np.ndarray:
        """dω 的各分量矩阵，形状 (dim𝔤, nq, nq)，dω_a(u, w) = uᵀ D_a w"""
        q = np.asarray(q, dtype=float)
        m, nq = self.group_dim, q.shape[0]
        jac = fd_jacobian(lambda p: self.omega_matrix(p).reshape(-1), q).reshape(m, nq, nq)
        return np.transpose(jac, (0, 2, 1)) - jac

    def d_omega_mu(self, q: np.ndarray, mu: Any) -> np.ndarray:
        """dω^μ 的矩阵，ω^μ = ⟨μ, ω⟩"""
        q = np.asarray(q, dtype=float)
        mu_vec = as_momentum(mu).mu
        jac = fd_jacobian(lambda p: mu_vec @ self.omega_matrix(p), q)
        return jac.T - jac

    def axiom_defects(self, n_samples: Optional[int] = None, seed: Optional[int] = None) -> Dict[str, float]:
        """
        抽样检验联络公理

        reproduction: |ω(σ_q(ξ)) − ξ|；equivariance: 右作用 ω(v·g) = Ad_{g⁻¹} ω(v)，
        左作用 ω(g·v) = Ad_g ω(v)。
        """
        n_samples = n_samples or config.n_samples
        action = self.action
        group = action.group
        states = sample_states(action.chart, n_samples, seed)
        elements = group.sample(n_samples, (config.seed if seed is None else seed) + 3)
        reproduction, equivariance = 0.0, 0.0
        for s, g in zip(states, elements):
            G = action.generator_matrix(s.q)
            reproduction = max(reproduction, float(np.max(np.abs(self.omega_matrix(s.q) @ G - np.eye(self.group_dim)))))
            moved = action.tangent_lift(g, s)
            if action.chart.is_singular(moved.q):
                continue
            transport = group.Ad_matrix(group.inverse(g) if action.side == ActionSide.RIGHT else g)
            diff = self.omega(moved.q, moved.v) - transport @ self.omega(s.q, s.v)
            equivariance = max(equivariance, float(np.max(np.abs(diff))))
        return {"reproduction": reproduction, "equivariance": equivariance}

    def validate(self, n_samples: Optional[int] = None) -> Dict[str, float]:
        """
        检验联络公理，超过 1e-8 时抛出异常

        Raises:
            NotInvariantError: 联络不满足公理
        """
        defects = self.axiom_defects(n_samples)
        if max(defects.values()) > AXIOM_TOLERANCE:
            logger.warning(f"联络 {self.name} 不满足公理: {defects}")
            raise NotInvariantError(f"联络 {self.name} 不满足主联络公理", defects)
        logger.debug(f"联络 {self.name} 公理检验通过: {defects}")
        return defects


def connection_from_coefficients(
    action: GroupAction,
    quotient: QuotientChart,
    form: Callable[[np.ndarray], np.ndarray],
    name: str = "coefficients",
    validate: bool = True,
) -> PrincipalConnection:
    """由用户给出的系数表构造联络"""
    conn = PrincipalConnection(action, quotient, form, ConnectionProvenance.COEFFICIENTS, name)
    if validate:
        conn.validate()
    return conn


def coordinate_connection(action: GroupAction, quotient: QuotientChart, validate: bool = True) -> PrincipalConnection:
    """
    局部坐标联络（联络系数为零）

    水平空间为截面的切空间：ω(v) 是 v − ∂q/∂(x,y)·Tπ_μ(v) 在生成元下的分量。
    曲率为零。
    """

    def form(q: np.ndarray) -> np.ndarray:
        x, y, h = quotient.split(q)
        frame = quotient.tangent_frame(x, y, h)
        remainder = np.eye(q.shape[0]) - frame @ quotient.projection_matrix(q)
        return np.linalg.lstsq(action.generator_matrix(q), remainder, rcond=None)[0]

    conn = PrincipalConnection(action, quotient, form, ConnectionProvenance.FLAT, "flat")
    if validate:
        conn.validate()
    return conn


def mechanical_connection(
    sys: LagrangianSystem,
    action: GroupAction,
    quotient: QuotientChart,
    n_samples: Optional[int] = None,
    validate: bool = True,
) -> PrincipalConnection:
    """
    机械联络 ω(v_q) = I(q)⁻¹ J(v_q)，J 为动能度量的动量映射

    水平分布与竖直分布关于动能度量正交。

    Raises:
        NotGRegularError: 锁定惯性退化（条件数 ≥ 1e10）
    """

    def metric(q: np.ndarray) -> np.ndarray:
        if sys.kinetic is not None:
            return np.asarray(sys.kinetic.metric(q), dtype=float)
        return sys.hessian_vv(ChartState(sys.chart, q, np.zeros(sys.chart.dim)))

    for s in sample_states(sys.chart, n_samples or config.n_samples):
        inertia = locked_inertia(sys, action, s.with_velocity(np.zeros(sys.chart.dim)))
        condition = float(np.linalg.cond(inertia))
        if not np.isfinite(condition) or condition >= LOCKED_INERTIA_CONDITION_LIMIT:
            raise NotGRegularError(f"锁定惯性退化 (条件数 {condition:.3e})，请显式给出联络")

    def form(q: np.ndarray) -> np.ndarray:
        M = metric(q)
        G = action.generator_matrix(q)
        return np.linalg.solve(G.T @ M @ G, G.T @ M)

    conn = PrincipalConnection(action, quotient, form, ConnectionProvenance.MECHANICAL, "mechanical")
    if validate:
        conn.validate()
    return conn


def horizontal_lift(conn: PrincipalConnection, v_x: np.ndarray, q: np.ndarray) -> np.ndarray:
    """
    底速度 v_x 在 q 处的水平提升 (v_x)^h_q

    满足 Tπ(lift) = v_x 且 ω(lift) = 0。
    """
    q = np.asarray(q, dtype=float)
    x, y, h = conn.quotient.split(q)
    w0 = np.asarray(conn.quotient.lift_tangent(x, y, h, np.asarray(v_x, dtype=float), np.zeros(conn.quotient.k)))
    return conn.horizontal_part(q, w0)


def horizontal_frame(conn: PrincipalConnection, q: np.ndarray) -> np.ndarray:
    """
    底坐标方向的水平提升组成的矩阵，nq × n

    第 i 列等于 horizontal_lift(conn, e_i, q)。
    """
    q = np.asarray(q, dtype=float)
    n = conn.quotient.n
    if n == 0:
        return np.zeros((q.shape[0], 0))
    x, y, h = conn.quotient.split(q)
    W = conn.quotient.tangent_frame(x, y, h)[:, :n]
    return W - conn.action.generator_matrix(q) @ (conn.omega_matrix(q) @ W)


def curvature(conn: PrincipalConnection, q: np.ndarray, v1: np.ndarray, v2: np.ndarray) -> np.ndarray:
    """
    曲率 Ω(v₁, v₂) = dω(hor v₁, hor v₂)

    水平向量上结构方程的括号项为零。
    """
    h1 = conn.horizontal_part(q, v1)
    h2 = conn.horizontal_part(q, v2)
    D = conn.d_omega_components(q)
    return np.einsum("i,aij,j->a", h1, D, h2)


def structure_equation_defect(conn: PrincipalConnection, q: np.ndarray, u: np.ndarray, w: np.ndarray) -> float:
    """|dω(u, w) − Ω(u, w) ∓ [ω(u), ω(w)]|，右作用取 −，左作用取 +"""
    D = conn.d_omega_components(q)
    d_omega = np.einsum("i,aij,j->a", np.asarray(u, dtype=float), D, np.asarray(w, dtype=float))
    bracket = conn.action.group.bracket(conn.omega(q, u), conn.omega(q, w))
    expected = curvature(conn, q, u, w) - conn.action.side.sign * bracket
    return float(np.max(np.abs(d_omega - expected)))


def isotropy_contraction_defect(conn: PrincipalConnection, mu: Any, q: np.ndarray) -> float:
    """max |i_{ξ_Q} dω^μ|，ξ 取遍 𝔤_μ 的基"""
    basis = isotropy_subalgebra(conn.action.group, mu)
    if basis.shape[0] == 0:
        return 0.0
    D = conn.d_omega_mu(q, mu)
    return float(max(np.max(np.abs(D.T @ conn.action.generator(q, xi))) for xi in basis))


@dataclass
class BetaBlocks:
    """
    β^μ 在 (x, y) 处的分块

    Attributes:
        full: 坐标基 (∂x, ∂y) 下的完整矩阵，陀螺力 ζ^μ = full·(ẋ, ẏ)
        omega_mu: 水平-水平块 Ω̃^μ（水平提升基下），n×n
        mixed: 水平-竖直块，应为零，n×k
        ad_star_block: 竖直-竖直块（∂y 基下），k×k
        coadjoint_form: 𝔤̃ 上的双线性形式 ∓⟨μ̃, [·, ·]⟩（左作用取 +），核为 𝔤̃_μ
        fibre_frame: ∂y_a 对应的 ξ̃ 代表元组成的列，dim𝔤 × k
        mu_tilde: μ̃(y)
    """

    full: np.ndarray
    omega_mu: np.ndarray
    mixed: np.ndarray
    ad_star_block: np.ndarray
    coadjoint_form: np.ndarray
    fibre_frame: np.ndarray
    mu_tilde: np.ndarray = field(default_factory=lambda: np.zeros(0))


def mu_tilde(conn: PrincipalConnection, mu: Any, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """μ̃(y) = U(q)ᵀ μ，q 为截面点 lift(x, y, 0)；沿 G_μ 轨道与代表点无关"""
    q = conn.quotient.at(x, y)
    return conn.transport(q).T @ as_momentum(mu).mu


def beta_mu_blocks(conn: PrincipalConnection, mu: Any, x: np.ndarray, y: np.ndarray) -> BetaBlocks:
    """
    β^μ = (Ω̃^μ, ∓ad*μ̃) 的分块

    β^μ 是 dω^μ 沿截面 lift(·, ·, 0) 的拉回；水平块在水平提升基下计算，
    竖直块在 ∂y 基下计算，水平-竖直块应为零。
    """
    quotient = conn.quotient
    group = conn.action.group
    n, k = quotient.n, quotient.k
    mu_vec = as_momentum(mu).mu
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    q = quotient.at(x, y)
    frame = quotient.tangent_frame(x, y)
    D = conn.d_omega_mu(q, mu_vec)

    Wx, Wy = frame[:, :n], frame[:, n:]
    Hx = Wx - conn.action.generator_matrix(q) @ conn.omega_matrix(q) @ Wx

    U = conn.transport(q)
    mt = U.T @ mu_vec
    basis = np.eye(group.dim)
    side = conn.action.side.sign
    coadjoint = np.array(
        [[-side * float(mt @ group.bracket(basis[a], basis[b])) for b in range(group.dim)] for a in range(group.dim)]
    )
    fibre_frame = np.linalg.solve(U, conn.omega_matrix(q) @ Wy) if k else np.zeros((group.dim, 0))

    return BetaBlocks(
        full=frame.T @ D @ frame,
        omega_mu=Hx.T @ D @ Hx,
        mixed=Hx.T @ D @ Wy,
        ad_star_block=Wy.T @ D @ Wy,
        coadjoint_form=coadjoint,
        fibre_frame=fibre_frame,
        mu_tilde=mt,
    )


def covariant_derivative(
    conn: PrincipalConnection,
    traj: Trajectory,
    e: np.ndarray,
    rep: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """
    关联线性丛中曲线 [q(t), e(t)] 的协变导数，在局部平凡化中计算

    D/Dt [q, e] = [q, ė ± ρ(ω(q̇))·e]，右作用取 +，左作用取 −；
    表示 ρ 默认为伴随表示 ρ(ξ) = ad_ξ。

    Args:
        conn: 主联络
        traj: 全坐标卡上的曲线 q(t)（使用其速度）
        e: 与 traj.times 对齐的纤维分量，形状 (N, d)
        rep: 李代数表示 ξ ↦ d×d 矩阵

    Returns:
        形状 (N, d) 的协变导数
    """
    rep = rep or conn.action.group.ad_matrix
    e = np.asarray(e, dtype=float).reshape(len(traj.times), -1)
    edot = np.gradient(e, traj.times, axis=0, edge_order=2)
    side = conn.action.side.sign
    out = np.empty_like(e)
    for i, s in enumerate(traj.states):
        out[i] = edot[i] + side * rep(conn.omega(s.q, s.v)) @ e[i]
    return out


@dataclass(frozen=True)
class QuotientPoint:
    """商坐标 (v_x, y, ξ̃)，以及恢复原状态所需的规范坐标"""

    x: np.ndarray
    xdot: np.ndarray
    y: np.ndarray
    xi_tilde: np.ndarray
    gauge: np.ndarray


def check_quotient(conn: PrincipalConnection, mu: Any, q: np.ndarray) -> float:
    """
    检验 σ_q(𝔤_μ) 落在规范纤维的切空间内

    Raises:
        QuotientMismatchError: 迷向子代数与规范方向不一致
    """
    quotient = conn.quotient
    basis = isotropy_subalgebra(conn.action.group, mu)
    if basis.shape[0] == 0:
        return 0.0
    P = quotient.projection_matrix(np.asarray(q, dtype=float))
    worst = float(max(np.max(np.abs(P @ conn.action.generator(q, xi)), initial=0.0) for xi in basis))
    if worst > AXIOM_TOLERANCE:
        raise QuotientMismatchError(f"迷向子代数不沿规范纤维方向 (偏差 {worst:.3e})")
    return worst


def quotient_coords(conn: PrincipalConnection, s: ChartState, mu: Optional[Any] = None) -> QuotientPoint:
    """
    φ_ω: v_q ↦ (Tπ(v_q), π_μ(q), [q, ω(v_q)])

    Raises:
        ChartSingularityError: 状态不在平凡化定义域内
        QuotientMismatchError: 提供 μ 且平凡化与 𝔤_μ 不一致
    """
    quotient = conn.quotient
    quotient.require_domain(s.q)
    if mu is not None:
        check_quotient(conn, mu, s.q)
    x, y, h = quotient.split(s.q)
    xdot, _ = quotient.project_tangent(s.q, s.v)
    xi_tilde = np.linalg.solve(conn.transport(s.q), conn.omega(s.q, s.v))
    return QuotientPoint(x, np.asarray(xdot, dtype=float), y, xi_tilde, h)


def assemble(
    conn: PrincipalConnection,
    x: np.ndarray,
    xdot: np.ndarray,
    y: np.ndarray,
    xi_tilde: np.ndarray,
    gauge: Optional[np.ndarray] = None,
) -> ChartState:
    """ψ_ω: (v_x, y, ξ̃) 与规范坐标 ↦ 全坐标卡状态"""
    quotient = conn.quotient
    q = quotient.at(x, y, gauge)
    v = horizontal_lift(conn, xdot, q) + conn.action.generator(q, conn.transport(q) @ np.asarray(xi_tilde, dtype=float))
    return ChartState(conn.action.chart, q, v)
