"""
Routh 约化模块

Routhian R^μ = L − ⟨μ, ω⟩、约化到内蕴约束系统 (M → Q/G, 𝓡^μ, f + ζ^μ)、
G-正则性检验、κ_l 求逆、正则情形 (Q/G_μ → Q/G, 𝓡̄^μ, f̄ + ζ^μ) 及其积分，
以及更换联络时的等价性检验。

约化坐标取自连接的局部平凡化：在截面点 q = lift(x, y, 0) 处
速度写成 v = hor·ẋ + σ_q(U ξ̃)。
"""

import time
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from routh_reduction.core.calculus import (
    GRADIENT_SCALE,
    Chart,
    ChartState,
    PointCache,
    Trajectory,
    default_steps,
    fd_jacobian,
    rk4_slopes,
)
from routh_reduction.core.connection import (
    PrincipalConnection,
    beta_mu_blocks,
    check_quotient,
    horizontal_frame,
)
from routh_reduction.core.lagrangian import (
    AnalyticPartials,
    FibredSystem,
    ForceKind,
    ForceTerm,
    LagrangianSystem,
)
from routh_reduction.core.symmetry import (
    GroupAction,
    MomentumValue,
    as_momentum,
    check_invariance,
    isotropy_subalgebra,
    sample_states,
)
from routh_reduction.utils.config import config
from routh_reduction.utils.errors import KappaSolveError, NotGRegularError, NotInvariantError
from routh_reduction.utils.logger import get_logger

logger = get_logger(__name__)

KAPPA_MAX_ITERATIONS = 50
KAPPA_TOLERANCE = 1e-12
REGULARITY_THRESHOLD = 1e-8


@dataclass(frozen=True)
class Routhian:
    """R^μ(v_q) = L(v_q) − ⟨μ, ω(q)(v_q)⟩"""

    sys: LagrangianSystem
    conn: PrincipalConnection
    mu: MomentumValue

    def __call__(self, s: ChartState) -> float:
        return self.sys.lagrangian(s) - float(self.mu.mu @ self.conn.omega(s.q, s.v))

    def dR_dv(self, s: ChartState) -> np.ndarray:
        return self.sys.dL_dv(s) - self.conn.omega_matrix(s.q).T @ self.mu.mu


def routhian_momentum(routhian: Routhian, s: ChartState) -> MomentumValue:
    """R^μ 关于整个 G 作用的动量映射，应等于 J_L − μ"""
    return MomentumValue(routhian.conn.action.generator_matrix(s.q).T @ routhian.dR_dv(s))


def gyro_force_full(routhian: Routhian, s: ChartState) -> np.ndarray:
    """陀螺力 G^μ(v_q) = −i_{v_q} dω^μ，满足 ⟨G^μ(v), v⟩ = 0"""
    return routhian.conn.d_omega_mu(s.q, routhian.mu) @ s.v


@dataclass(frozen=True)
class ReducedFrame:
    """
    截面点上的约化标架

    Attributes:
        x, y: 商坐标
        q: 截面点 lift(x, y, 0)
        hor: 底坐标方向的水平提升，nq × n
        sig: ξ̃ 分量对应的生成元 σ_q(U·)，nq × dim𝔤
        transport: U
        mu_tilde: μ̃(y) = Uᵀμ
    """

    x: np.ndarray
    y: np.ndarray
    q: np.ndarray
    hor: np.ndarray
    sig: np.ndarray
    transport: np.ndarray
    mu_tilde: np.ndarray

    def velocity(self, xdot: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return self.hor @ np.asarray(xdot, dtype=float) + self.sig @ np.asarray(xi, dtype=float)


@dataclass(frozen=True)
class FrameJet:
    """
    标架及其关于商坐标 p = (x, y) 的一阶导数（中心差分）

    Attributes:
        frame: p 处的标架
        dq: ∂q/∂p，nq × (n + k)
        dhor: ∂hor/∂p_j，形状 (n + k, nq, n)
        dsig: ∂sig/∂p_j，形状 (n + k, nq, dim𝔤)
        dmu: ∂μ̃/∂p_j，形状 (n + k, dim𝔤)
    """

    frame: ReducedFrame
    dq: np.ndarray
    dhor: np.ndarray
    dsig: np.ndarray
    dmu: np.ndarray

    def velocity_derivative(self, xdot: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """∂v/∂p，v = hor·ẋ + sig·ξ̃，nq × (n + k)"""
        return np.einsum("jab,b->aj", self.dhor, xdot) + np.einsum("jab,b->aj", self.dsig, xi)


@dataclass(frozen=True)
class RouthianPartials:
    """
    𝓡^μ 在 (x, ẋ, y, ξ̃) 处的偏导数，p = (x, y)

    由 L 的偏导数与标架的一阶导数按链式法则组合，不嵌套差分。

    Attributes:
        value: 𝓡^μ
        d_pos: ∂𝓡^μ/∂p
        p_x: ∂𝓡^μ/∂ẋ
        constraint: ∂𝓡^μ/∂ξ̃ = j_l − μ̃
        h_xx: ∂²𝓡^μ/∂ẋ∂ẋ
        h_xxi: ∂²𝓡^μ/∂ẋ∂ξ̃
        h_xixi: ∂²𝓡^μ/∂ξ̃∂ξ̃
        dpx_dpos: ∂p_x/∂p
        dconstraint_dpos: ∂(j_l − μ̃)/∂p
    """

    value: float
    d_pos: np.ndarray
    p_x: np.ndarray
    constraint: np.ndarray
    h_xx: np.ndarray
    h_xxi: np.ndarray
    h_xixi: np.ndarray
    dpx_dpos: np.ndarray
    dconstraint_dpos: np.ndarray


@dataclass(frozen=True)
class ReducedSystem:
    """
    约化后的内蕴约束系统 (M → Q/G, 𝓡^μ, f + ζ^μ)

    M 的坐标为 (x, y, ξ̃)；l 是 L 在约化坐标下的表示，j_l = 𝔽_ξ̃ l，
    动量约束为 j_l(ẋ, ξ̃) = μ̃(y)。
    """

    sys: LagrangianSystem
    action: GroupAction
    conn: PrincipalConnection
    mu: MomentumValue
    g_mu_basis: np.ndarray

    @property
    def n(self) -> int:
        return self.conn.quotient.n

    @property
    def k(self) -> int:
        return self.conn.quotient.k

    @property
    def m(self) -> int:
        return self.action.group.dim

    @property
    def reduced_chart(self) -> Chart:
        return self.conn.quotient.reduced_chart

    @cached_property
    def _frames(self) -> PointCache[ReducedFrame]:
        return PointCache(self._build_frame)

    @cached_property
    def _jets(self) -> PointCache[FrameJet]:
        return PointCache(self._build_jet)

    @cached_property
    def _betas(self) -> PointCache[np.ndarray]:
        return PointCache(lambda x, y: beta_mu_blocks(self.conn, self.mu, x, y).full)

    def frame(self, x: np.ndarray, y: np.ndarray) -> ReducedFrame:
        return self._frames(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def frame_jet(self, x: np.ndarray, y: np.ndarray) -> FrameJet:
        return self._jets(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def _build_jet(self, x: np.ndarray, y: np.ndarray) -> FrameJet:
        n = self.n
        p = np.concatenate([x, y])
        steps = default_steps(p, GRADIENT_SCALE, config.fd_step)
        dq, dhor, dsig, dmu = [], [], [], []
        for j in range(p.shape[0]):
            e = np.zeros_like(p)
            e[j] = steps[j]
            plus = self._build_frame((p + e)[:n], (p + e)[n:])
            minus = self._build_frame((p - e)[:n], (p - e)[n:])
            scale = 0.5 / steps[j]
            dq.append((plus.q - minus.q) * scale)
            dhor.append((plus.hor - minus.hor) * scale)
            dsig.append((plus.sig - minus.sig) * scale)
            dmu.append((plus.mu_tilde - minus.mu_tilde) * scale)
        frame = self.frame(x, y)
        dim, nq = p.shape[0], frame.q.shape[0]
        return FrameJet(
            frame=frame,
            dq=np.array(dq).reshape(dim, nq).T,
            dhor=np.array(dhor).reshape(dim, nq, n),
            dsig=np.array(dsig).reshape(dim, nq, self.m),
            dmu=np.array(dmu).reshape(dim, self.m),
        )

    def partials(self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, xi: np.ndarray) -> RouthianPartials:
        """𝓡^μ 的一阶与二阶偏导数"""
        jet = self.frame_jet(x, y)
        frame = jet.frame
        xdot = np.asarray(xdot, dtype=float)
        xi = np.asarray(xi, dtype=float)
        s = self.state(frame, xdot, xi)
        Lq, Lv = self.sys.dL_dq(s), self.sys.dL_dv(s)
        H, mixed = self.sys.hessian_vv(s), self.sys.mixed_vq(s)
        dv = jet.velocity_derivative(xdot, xi)
        dLv = mixed @ jet.dq + H @ dv
        H_sig = H @ frame.sig
        return RouthianPartials(
            value=self.sys.lagrangian(s) - float(frame.mu_tilde @ xi),
            d_pos=jet.dq.T @ Lq + dv.T @ Lv - jet.dmu @ xi,
            p_x=frame.hor.T @ Lv,
            constraint=frame.sig.T @ Lv - frame.mu_tilde,
            h_xx=frame.hor.T @ H @ frame.hor,
            h_xxi=frame.hor.T @ H_sig,
            h_xixi=frame.sig.T @ H_sig,
            dpx_dpos=np.einsum("jai,a->ij", jet.dhor, Lv) + frame.hor.T @ dLv,
            dconstraint_dpos=np.einsum("jab,a->bj", jet.dsig, Lv) + frame.sig.T @ dLv - jet.dmu.T,
        )

    def _build_frame(self, x: np.ndarray, y: np.ndarray) -> ReducedFrame:
        quotient = self.conn.quotient
        q = quotient.at(x, y)
        U = self.conn.transport(q)
        return ReducedFrame(
            x=x,
            y=y,
            q=q,
            hor=horizontal_frame(self.conn, q),
            sig=self.action.generator_matrix(q) @ U,
            transport=U,
            mu_tilde=U.T @ self.mu.mu,
        )

    def state(self, frame: ReducedFrame, xdot: np.ndarray, xi: np.ndarray) -> ChartState:
        return ChartState(self.sys.chart, frame.q, frame.velocity(xdot, xi))

    def mu_tilde(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.frame(x, y).mu_tilde

    def l(self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, xi: np.ndarray) -> float:
        return self.sys.lagrangian(self.state(self.frame(x, y), xdot, xi))

    def j_l(self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, xi: np.ndarray) -> np.ndarray:
        frame = self.frame(x, y)
        return frame.sig.T @ self.sys.dL_dv(self.state(frame, xdot, xi))

    def routhian(self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, xi: np.ndarray) -> float:
        """𝓡^μ(v_x, y, ξ̃) = l(v_x, ξ̃) − ⟨μ̃(y), ξ̃⟩"""
        frame = self.frame(x, y)
        return self.sys.lagrangian(self.state(frame, xdot, xi)) - float(frame.mu_tilde @ xi)

    def p_x(self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """∂𝓡^μ/∂ẋ"""
        frame = self.frame(x, y)
        return frame.hor.T @ self.sys.dL_dv(self.state(frame, xdot, xi))

    def reduced_force(self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """约化力 f：F 在水平提升上的取值"""
        frame = self.frame(x, y)
        return frame.hor.T @ self.sys.force(self.state(frame, xdot, xi))

    def beta(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """β^μ 在坐标基 (∂x, ∂y) 下的矩阵"""
        return self._betas(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def zeta(self, x: np.ndarray, y: np.ndarray, xdot: np.ndarray, ydot: np.ndarray) -> np.ndarray:
        """陀螺力 ζ^μ(ẋ, ẏ) = β^μ·(ẋ, ẏ)"""
        return self.beta(x, y) @ np.concatenate([xdot, ydot])

    def xi_hessian(self, frame: ReducedFrame, xdot: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """∂²l/∂ξ̃∂ξ̃ = sigᵀ (∂²L/∂v∂v) sig"""
        return frame.sig.T @ self.sys.hessian_vv(self.state(frame, xdot, xi)) @ frame.sig

    @cached_property
    def total_chart(self) -> Chart:
        """M 的坐标卡 (x, y, ξ̃)"""
        base = self.reduced_chart
        m = self.m
        dim = base.dim

        def singular(p: np.ndarray) -> bool:
            return base.is_singular(p[:dim])

        return Chart(
            name=f"{base.name}×g",
            coord_names=base.coord_names + tuple(f"xi{a + 1}" for a in range(m)),
            singular_region=singular,
            angular=tuple(base.angular) + (False,) * m,  # type: ignore[arg-type]
            lower=tuple(base.lower) + (-1.0,) * m,  # type: ignore[arg-type]
            upper=tuple(base.upper) + (1.0,) * m,  # type: ignore[arg-type]
        )

    def unpack(self, s: ChartState) -> tuple:
        """整体坐标卡状态 ↦ (x, ẋ, y, ẏ, ξ̃)"""
        n, k = self.n, self.k
        return s.q[:n], s.v[:n], s.q[n : n + k], s.v[n : n + k], s.q[n + k :]

    @cached_property
    def fibred(self) -> FibredSystem:
        """(M → Q/G, 𝓡^μ, f + ζ^μ) 作为整体坐标卡上的内蕴约束系统，偏导数取自 partials"""
        n, k, m = self.n, self.k, self.m
        dim = n + k + m
        chart = self.total_chart

        def at(s: ChartState) -> RouthianPartials:
            x, xdot, y, _, xi = self.unpack(s)
            return self.partials(x, xdot, y, xi)

        def lagrangian(s: ChartState) -> float:
            x, xdot, y, _, xi = self.unpack(s)
            return self.routhian(x, xdot, y, xi)

        def dL_dq(s: ChartState) -> np.ndarray:
            P = at(s)
            return np.concatenate([P.d_pos, P.constraint])

        def dL_dv(s: ChartState) -> np.ndarray:
            x, xdot, y, _, xi = self.unpack(s)
            return np.concatenate([self.p_x(x, xdot, y, xi), np.zeros(k + m)])

        def hessian_vv(s: ChartState) -> np.ndarray:
            out = np.zeros((dim, dim))
            out[:n, :n] = at(s).h_xx
            return out

        def mixed_vq(s: ChartState) -> np.ndarray:
            P = at(s)
            out = np.zeros((dim, dim))
            out[:n, : n + k] = P.dpx_dpos
            out[:n, n + k :] = P.h_xxi
            return out

        def beta(q: np.ndarray) -> np.ndarray:
            out = np.zeros((dim, dim))
            out[: n + k, : n + k] = self.beta(q[:n], q[n : n + k])
            return out

        def covector(s: ChartState) -> np.ndarray:
            x, xdot, y, _, xi = self.unpack(s)
            out = np.zeros(dim)
            out[:n] = self.reduced_force(x, xdot, y, xi)
            return out

        def constraint_jacobian(s: ChartState) -> tuple:
            """约束 (∂𝓡^μ/∂y + ζ^μ_y, j_l − μ̃) 关于 (x, ẋ) 的 Jacobian"""
            x, xdot, y, ydot, xi = self.unpack(s)
            P = at(s)
            xi_dx, xi_dxdot = P.dconstraint_dpos[:, :n], P.h_xxi.T
            if k == 0:
                return xi_dx, xi_dxdot
            velocity = np.concatenate([xdot, ydot])

            def vertical(p: np.ndarray) -> np.ndarray:
                return self.partials(p, xdot, y, xi).d_pos[n:] + self.beta(p, y)[n:] @ velocity

            y_dx = fd_jacobian(vertical, x).reshape(k, n)
            y_dxdot = P.dpx_dpos[:, n:].T + self.beta(x, y)[n:, :n]
            return np.vstack([y_dx, xi_dx]), np.vstack([y_dxdot, xi_dxdot])

        force = ForceTerm.gyroscopic(beta).plus(ForceTerm(ForceKind.BASECOVECTOR, covector=covector))
        partials = AnalyticPartials(dL_dq=dL_dq, dL_dv=dL_dv, hessian_vv=hessian_vv, mixed_vq=mixed_vq)
        total = LagrangianSystem(chart, lagrangian, force, partials, name=f"{self.sys.name}/R^mu")
        return FibredSystem(total, n, constraint_jacobian=constraint_jacobian)


def reduce(
    sys: LagrangianSystem,
    action: GroupAction,
    conn: PrincipalConnection,
    mu: Any,
    check: bool = True,
) -> ReducedSystem:
    """
    构造约化系统

    Args:
        sys: 拉格朗日系统
        action: 群作用
        conn: 主联络（携带局部平凡化）
        mu: 动量值
        check: 是否先做不变性检验

    Raises:
        NotInvariantError: 系统不满足群不变性
        QuotientMismatchError: 平凡化的规范方向与 𝔤_μ 不一致
    """
    momentum = as_momentum(mu)
    if momentum.dim != action.group.dim:
        raise ValueError(f"动量维数 {momentum.dim} 与群维数 {action.group.dim} 不一致")
    if check:
        report = check_invariance(sys, action)
        if not report.passed:
            raise NotInvariantError(f"系统 {sys.name} 不满足群不变性，无法约化", report.to_dict())
        check_quotient(conn, momentum, sample_states(sys.chart, 1)[0].q)

    basis = isotropy_subalgebra(action.group, momentum)
    logger.info(
        f"约化系统: {sys.name}, μ={momentum.mu.tolist()}, 联络 {conn.name}, dim 𝔤_μ = {basis.shape[0]}"
    )
    return ReducedSystem(sys, action, conn, momentum, basis)


@dataclass
class GRegularityReport:
    """G-正则性检验结果"""

    is_regular: bool
    worst_condition: float

    def to_dict(self) -> Dict[str, Any]:
        return {"is_regular": self.is_regular, "worst_condition": self.worst_condition}


def g_regularity_test(reduced: ReducedSystem, n_samples: Optional[int] = None) -> GRegularityReport:
    """
    在抽样点上检验 ξ̃-Hessian ∂²l/∂ξ̃∂ξ̃ 的非退化性

    正则当且仅当每个样本的最小奇异值 > 1e-8·最大奇异值。
    """
    worst = 1.0
    regular = True
    for s in sample_states(reduced.total_chart, n_samples or config.n_samples):
        x, xdot, y, _, xi = reduced.unpack(s)
        singular_values = np.linalg.svd(reduced.xi_hessian(reduced.frame(x, y), xdot, xi), compute_uv=False)
        largest, smallest = float(singular_values[0]), float(singular_values[-1])
        if largest == 0.0 or smallest <= REGULARITY_THRESHOLD * largest:
            regular = False
            worst = float("inf")
        else:
            worst = max(worst, largest / smallest)
    logger.info(f"G-正则性: {regular}, 最差条件数 {worst:.3e}")
    return GRegularityReport(regular, worst)


@dataclass
class KappaSolution:
    xi: np.ndarray
    iterations: int
    residual: float


def kappa_solve(
    reduced: ReducedSystem,
    x: np.ndarray,
    xdot: np.ndarray,
    y: np.ndarray,
    target: np.ndarray,
    guess: Optional[np.ndarray] = None,
    frame: Optional[ReducedFrame] = None,
    full_output: bool = False,
) -> Any:
    """
    κ_l：Newton 迭代求解 j_l(ẋ, ξ̃) = target

    Args:
        reduced: 约化系统
        x, xdot, y: 商坐标
        target: 𝔤̃* 中的目标值
        guess: 初值，默认 ξ̃ = 0
        frame: 已算好的标架
        full_output: 为 True 时返回 KappaSolution

    Returns:
        ξ̃（或 KappaSolution）

    Raises:
        KappaSolveError: 50 次迭代内残差未降到 1e-12·max(1, |target|)
    """
    frame = frame or reduced.frame(x, y)
    target = np.asarray(target, dtype=float)
    xi = np.zeros(reduced.m) if guess is None else np.array(guess, dtype=float)
    tolerance = KAPPA_TOLERANCE * max(1.0, float(np.max(np.abs(target), initial=0.0)))
    residual = float("inf")
    for iteration in range(KAPPA_MAX_ITERATIONS + 1):
        s = reduced.state(frame, xdot, xi)
        gap = frame.sig.T @ reduced.sys.dL_dv(s) - target
        residual = float(np.max(np.abs(gap), initial=0.0))
        if residual <= tolerance:
            if full_output:
                return KappaSolution(xi, iteration, residual)
            return xi
        if iteration == KAPPA_MAX_ITERATIONS:
            break
        jacobian = frame.sig.T @ reduced.sys.hessian_vv(s) @ frame.sig
        xi = xi - np.linalg.lstsq(jacobian, gap, rcond=None)[0]
    raise KappaSolveError("κ_l 的 Newton 迭代未收敛", residual, KAPPA_MAX_ITERATIONS)


@dataclass(frozen=True)
class RegularReducedSystem:
    """
    正则约化系统 (Q/G_μ → Q/G, 𝓡̄^μ, f̄ + ζ^μ)

    𝓡̄^μ(v_x, y) = 𝓡^μ(v_x, y, γ(v_x, y))，γ = κ_l(v_x, μ̃(y))。
    """

    reduced: ReducedSystem

    @property
    def chart(self) -> Chart:
        return self.reduced.reduced_chart

    @property
    def n(self) -> int:
        return self.reduced.n

    @property
    def k(self) -> int:
        return self.reduced.k

    def gamma_section(
        self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, guess: Optional[np.ndarray] = None
    ) -> np.ndarray:
        frame = self.reduced.frame(x, y)
        return kappa_solve(self.reduced, x, xdot, y, frame.mu_tilde, guess, frame)

    def Rbar_mu(self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, guess: Optional[np.ndarray] = None) -> float:
        return self.reduced.routhian(x, xdot, y, self.gamma_section(x, xdot, y, guess))

    def fbar(self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, guess: Optional[np.ndarray] = None) -> np.ndarray:
        return self.reduced.reduced_force(x, xdot, y, self.gamma_section(x, xdot, y, guess))

    def pbar(self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, guess: Optional[np.ndarray] = None) -> np.ndarray:
        """∂𝓡̄^μ/∂ẋ，由包络关系等于 ∂𝓡^μ/∂ẋ 在 ξ̃ = γ 处的值"""
        if self.n == 0:
            return np.zeros(0)
        return self.reduced.p_x(x, xdot, y, self.gamma_section(x, xdot, y, guess))

    def momentum_derivatives(
        self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, xi: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray, RouthianPartials]:
        """
        p̄ = ∂𝓡̄^μ/∂ẋ 的全导数，ξ̃ = γ 随 (x, ẋ, y) 变化

        由 ∂γ = −(∂²𝓡^μ/∂ξ̃∂ξ̃)⁻¹ ∂(j_l − μ̃) 消去 ξ̃，得到 Schur 补。

        Returns:
            (∂p̄/∂ẋ, ∂p̄/∂(x, y), ξ̃ 处的 RouthianPartials)
        """
        P = self.reduced.partials(x, xdot, y, xi)
        factors = lu_factor(P.h_xixi)
        mass = P.h_xx - P.h_xxi @ lu_solve(factors, P.h_xxi.T)
        dp_dpos = P.dpx_dpos - P.h_xxi @ lu_solve(factors, P.dconstraint_dpos)
        return mass, dp_dpos, P

    def zeta(self, x: np.ndarray, y: np.ndarray, xdot: np.ndarray, ydot: np.ndarray) -> np.ndarray:
        return self.reduced.zeta(x, y, xdot, ydot)

    def fibre_velocity_from_kappa(
        self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, xi: Optional[np.ndarray] = None
    ) -> np.ndarray:
        """ẏ = κ²_l(ẋ, μ̃(y)) 在 Q/G_μ 上的投影（取 𝔤_μ 分量为零的代表元）"""
        frame = self.reduced.frame(x, y)
        xi = kappa_solve(self.reduced, x, xdot, y, frame.mu_tilde, xi, frame)
        _, ydot = self.reduced.conn.quotient.project_tangent(frame.q, frame.velocity(xdot, xi))
        return np.asarray(ydot, dtype=float)

    def fibre_velocity_from_beta(self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray) -> np.ndarray:
        """由竖直方程 ∂_y𝓡̄^μ + ζ^μ_y = 0 解出 ẏ（要求 β^μ 的 yy 块非退化）"""
        n = self.n
        xi = self.gamma_section(x, xdot, y)
        grad_y = self.reduced.partials(x, xdot, y, xi).d_pos[n:]
        beta = self.reduced.beta(x, y)
        rhs = -(grad_y + beta[n:, :n] @ np.asarray(xdot, dtype=float))
        return np.linalg.solve(beta[n:, n:], rhs)

    def vertical_residual(
        self, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, ydot: np.ndarray, xi: np.ndarray
    ) -> np.ndarray:
        """∂_y𝓡̄^μ + ζ^μ_y"""
        n = self.n
        if self.k == 0:
            return np.zeros(0)
        grad_y = self.reduced.partials(x, xdot, y, xi).d_pos[n:]
        return grad_y + self.reduced.zeta(x, y, xdot, ydot)[n:]

    @cached_property
    def fibred(self) -> FibredSystem:
        """(Q/G_μ → Q/G, 𝓡̄^μ, f̄ + ζ^μ) 作为 (x, y) 坐标卡上的内蕴约束系统"""
        n, k = self.n, self.k
        reduced = self.reduced

        def split(s: ChartState) -> tuple:
            return s.q[:n], s.v[:n], s.q[n:]

        def lagrangian(s: ChartState) -> float:
            return self.Rbar_mu(*split(s))

        def dL_dq(s: ChartState) -> np.ndarray:
            x, xdot, y = split(s)
            return reduced.partials(x, xdot, y, self.gamma_section(x, xdot, y)).d_pos

        def dL_dv(s: ChartState) -> np.ndarray:
            x, xdot, y = split(s)
            return np.concatenate([self.pbar(x, xdot, y), np.zeros(k)])

        def hessian_vv(s: ChartState) -> np.ndarray:
            x, xdot, y = split(s)
            out = np.zeros((n + k, n + k))
            out[:n, :n] = self.momentum_derivatives(x, xdot, y, self.gamma_section(x, xdot, y))[0]
            return out

        def mixed_vq(s: ChartState) -> np.ndarray:
            x, xdot, y = split(s)
            out = np.zeros((n + k, n + k))
            out[:n, :] = self.momentum_derivatives(x, xdot, y, self.gamma_section(x, xdot, y))[1]
            return out

        def covector(s: ChartState) -> np.ndarray:
            x, xdot, y = split(s)
            return np.concatenate([self.fbar(x, xdot, y), np.zeros(k)])

        force = ForceTerm.gyroscopic(lambda q: reduced.beta(q[:n], q[n:])).plus(
            ForceTerm(ForceKind.BASECOVECTOR, covector=covector)
        )
        partials = AnalyticPartials(dL_dq=dL_dq, dL_dv=dL_dv, hessian_vv=hessian_vv, mixed_vq=mixed_vq)
        total = LagrangianSystem(self.chart, lagrangian, force, partials, name=f"{reduced.sys.name}/Rbar")
        return FibredSystem(total, n)


def regular_reduce(reduced: ReducedSystem, n_samples: Optional[int] = None) -> RegularReducedSystem:
    """
    正则约化

    Raises:
        NotGRegularError: 约化系统不是 G-正则的
    """
    report = g_regularity_test(reduced, n_samples)
    if not report.is_regular:
        raise NotGRegularError(f"系统 {reduced.sys.name} 不是 G-正则的，请改用线性约束或预辛分析")
    return RegularReducedSystem(reduced)


def integrate_reduced(
    rr: RegularReducedSystem,
    x0: np.ndarray,
    xdot0: np.ndarray,
    y0: np.ndarray,
    t0: Optional[float] = None,
    t1: Optional[float] = None,
    dt: Optional[float] = None,
) -> Trajectory:
    """
    积分正则约化方程

    水平二阶方程 EL(𝓡̄^μ)^h = ζ^μ_x + f̄（正规形式）与竖直一阶方程
    ẏ = κ²_l(ẋ, μ̃(y)) mod 𝔤_μ 耦合，ξ̃ 沿轨迹用上一步的值热启动。

    Args:
        rr: 正则约化系统
        x0, xdot0: 底空间初始状态
        y0: 纤维初始点
        t0, t1, dt: 积分区间与步长

    Returns:
        (x, y) 坐标卡上的轨迹，诊断通道包含 xi_tilde、momentum_constraint、
        E_R（𝓡̄^μ 的能量）、vertical_residual 与 xddot

    Raises:
        ChartSingularityError: 进入坐标卡奇异区域
        IntegrationBlowupError: 积分发散
    """
    t0 = config.t0 if t0 is None else t0
    t1 = config.t1 if t1 is None else t1
    dt = config.dt if dt is None else dt
    reduced = rr.reduced
    quotient = reduced.conn.quotient
    n, k = rr.n, rr.k
    chart = rr.chart
    warm: Dict[str, Optional[np.ndarray]] = {"xi": None}
    started = time.perf_counter()
    logger.info(f"约化系统积分开始: {reduced.sys.name}, t∈[{t0}, {t1}], dt={dt}")

    def solve_xi(z: np.ndarray) -> tuple:
        x, xdot, y = z[:n], z[n : 2 * n], z[2 * n :]
        frame = reduced.frame(x, y)
        xi = kappa_solve(reduced, x, xdot, y, frame.mu_tilde, warm["xi"], frame)
        warm["xi"] = xi
        _, ydot = quotient.project_tangent(frame.q, frame.velocity(xdot, xi))
        return xi, np.asarray(ydot, dtype=float)

    def vector_field(t: float, z: np.ndarray) -> np.ndarray:
        x, xdot, y = z[:n], z[n : 2 * n], z[2 * n :]
        xi, ydot = solve_xi(z)
        if n == 0:
            return ydot
        mass, dp_dpos, P = rr.momentum_derivatives(x, xdot, y, xi)
        force = reduced.zeta(x, y, xdot, ydot)[:n] + reduced.reduced_force(x, xdot, y, xi)
        rhs = P.d_pos[:n] + force - dp_dpos @ np.concatenate([xdot, ydot])
        return np.concatenate([xdot, lu_solve(lu_factor(mass), rhs), ydot])

    def guard(t: float, z: np.ndarray) -> None:
        chart.require_regular(np.concatenate([z[:n], z[2 * n :]]), t)

    z0 = np.concatenate([np.asarray(x0, dtype=float), np.asarray(xdot0, dtype=float), np.asarray(y0, dtype=float)])
    times, points, slopes = rk4_slopes(vector_field, z0, t0, t1, dt, guard)
    elapsed = time.perf_counter() - started

    warm["xi"] = None
    channels: Dict[str, List[Any]] = {
        "xi_tilde": [],
        "momentum_constraint": [],
        "E_R": [],
        "vertical_residual": [],
    }
    for z, slope in zip(points, slopes):
        x, xdot, y = z[:n], z[n : 2 * n], z[2 * n :]
        xi, _ = solve_xi(z)
        ydot = slope[2 * n :]
        frame = reduced.frame(x, y)
        s = reduced.state(frame, xdot, xi)
        momentum = reduced.sys.dL_dv(s)
        channels["xi_tilde"].append(xi)
        channels["momentum_constraint"].append(float(np.max(np.abs(frame.sig.T @ momentum - frame.mu_tilde))))
        rbar = reduced.routhian(x, xdot, y, xi)
        channels["E_R"].append(float(frame.hor.T @ momentum @ xdot) - rbar)
        channels["vertical_residual"].append(rr.vertical_residual(x, xdot, y, ydot, xi))

    diagnostics = {name: np.array(values).reshape(len(times), -1) for name, values in channels.items()}
    diagnostics["momentum_constraint"] = diagnostics["momentum_constraint"].reshape(-1)
    diagnostics["E_R"] = diagnostics["E_R"].reshape(-1)
    diagnostics["xddot"] = slopes[:, n : 2 * n]
    positions = np.hstack([points[:, :n], points[:, 2 * n :]])
    velocities = np.hstack([points[:, n : 2 * n], slopes[:, 2 * n :]])
    traj = Trajectory.from_arrays(chart, times, positions, velocities, diagnostics)
    logger.info(
        f"约化系统积分完成: {len(times) - 1} 步, 用时 {elapsed:.2f}s, "
        f"最大动量约束残差 {float(np.max(diagnostics['momentum_constraint'])):.3e}"
    )
    return traj


def dy_routhian_defect(
    reduced: ReducedSystem, x: np.ndarray, xdot: np.ndarray, y: np.ndarray, xi: np.ndarray
) -> float:
    """
    |⟨∂_y𝓡^μ, η̃⟩ ± ⟨ad*_ξ̃ μ̃(y), η̃⟩|，η̃ 取 ∂y 方向的 ξ̃ 代表元

    右作用取 −ad*，左作用取 +ad*。
    """
    if reduced.k == 0:
        return 0.0
    blocks = beta_mu_blocks(reduced.conn, reduced.mu, x, y)
    grad_y = reduced.partials(x, xdot, y, xi).d_pos[reduced.n :]
    coad = reduced.action.group.coad_star(np.asarray(xi, dtype=float), blocks.mu_tilde)
    expected = -reduced.action.side.sign * (blocks.fibre_frame.T @ coad)
    return float(np.max(np.abs(grad_y - expected)))


def connection_change_check(
    sys: LagrangianSystem,
    action: GroupAction,
    conn1: PrincipalConnection,
    conn2: PrincipalConnection,
    mu: Any,
    n_samples: Optional[int] = None,
) -> float:
    """
    更换联络的等价性检验

    δ̃(v_x) 为 ω₂ 在 ω₁-水平提升上的取值，验证
    𝓡^μ₂(v_x, y, ξ̃ + δ̃(v_x)) = 𝓡^μ₁(v_x, y, ξ̃) − ⟨μ, δ(v_x)⟩ 与 ζ^μ₂ = ζ^μ₁ + i dδ^μ。

    Returns:
        抽样点上的最大偏差
    """
    reduced1 = reduce(sys, action, conn1, mu, check=False)
    reduced2 = reduce(sys, action, conn2, mu, check=False)
    mu_vec = reduced1.mu.mu
    quotient = conn1.quotient
    n = quotient.n

    def delta_mu(p: np.ndarray) -> np.ndarray:
        x, y = p[:n], p[n:]
        q = quotient.at(x, y)
        frame = quotient.tangent_frame(x, y)
        return mu_vec @ (conn2.omega_matrix(q) - conn1.omega_matrix(q)) @ frame

    worst = 0.0
    for s in sample_states(reduced1.total_chart, n_samples or config.n_samples):
        x, xdot, y, ydot, xi1 = reduced1.unpack(s)
        frame1 = reduced1.frame(x, y)
        shift = conn2.omega(frame1.q, frame1.hor @ xdot)
        xi2 = xi1 + np.linalg.solve(frame1.transport, shift)
        lhs = reduced2.routhian(x, xdot, y, xi2)
        rhs = reduced1.routhian(x, xdot, y, xi1) - float(mu_vec @ shift)
        worst = max(worst, abs(lhs - rhs))

        frame2 = reduced2.frame(x, y)
        worst = max(worst, float(np.max(np.abs(frame2.velocity(xdot, xi2) - frame1.velocity(xdot, xi1)))))

        point = np.concatenate([x, y])
        jac = fd_jacobian(delta_mu, point)
        d_delta = jac.T - jac
        velocity = np.concatenate([xdot, ydot])
        gap = reduced2.zeta(x, y, xdot, ydot) - reduced1.zeta(x, y, xdot, ydot) - d_delta @ velocity
        worst = max(worst, float(np.max(np.abs(gap), initial=0.0)))

    logger.info(f"联络 {conn1.name} → {conn2.name} 等价性偏差 {worst:.3e}")
    return worst
