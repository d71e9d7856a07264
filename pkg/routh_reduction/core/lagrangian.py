"""
拉格朗日系统模块

提供力项、拉格朗日系统 (Q, L, F)、Euler-Lagrange 残差、全系统积分，
以及纤维化坐标卡上的内蕴约束系统（约束残差、分裂残差、分类与线性约束求解）。
"""

import time
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import TYPE_CHECKING, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from routh_reduction.core.calculus import (
    Chart,
    ChartState,
    PointCache,
    Trajectory,
    fd_cross_hessian,
    fd_gradient,
    fd_hessian_vv,
    fd_jacobian,
    quasi_random,
    rk4,
    rk4_slopes,
)
from routh_reduction.utils.config import config
from routh_reduction.utils.errors import (
    ConstraintViolationError,
    SingularLagrangianError,
)
from routh_reduction.utils.logger import get_logger

if TYPE_CHECKING:
    from routh_reduction.core.symmetry import GroupAction

logger = get_logger(__name__)

CONDITION_LIMIT = 1e12
PIVOT_RATIO = 1e-6
FIBRE_VELOCITY_TOLERANCE = 1e-9
AFFINE_TOLERANCE = 1e-9

MatrixField = Callable[[np.ndarray], np.ndarray]
CovectorField = Callable[[ChartState], np.ndarray]


class ForceKind(str, Enum):
    """力项类型"""

    ZERO = "zero"
    GYROSCOPIC = "gyroscopic"
    BASECOVECTOR = "basecovector"
    GENERAL = "general"


@dataclass(frozen=True)
class ForceTerm:
    """
    力项 F: TM → T*M

    陀螺力部分由反对称矩阵场 β(q) 给出，F = β·v（即 −i_v β）；
    其余部分为一般余向量场。两部分可以同时存在，求值时相加。
    """

    kind: ForceKind = ForceKind.ZERO
    beta: Optional[MatrixField] = None
    covector: Optional[CovectorField] = None

    @classmethod
    def zero(cls) -> "ForceTerm":
        return cls(ForceKind.ZERO)

    @classmethod
    def gyroscopic(cls, beta: MatrixField) -> "ForceTerm":
        return cls(ForceKind.GYROSCOPIC, beta=beta)

    @classmethod
    def general(cls, covector: CovectorField) -> "ForceTerm":
        return cls(ForceKind.GENERAL, covector=covector)

    @classmethod
    def base_covector(cls, fhat: Callable[[np.ndarray, np.ndarray], np.ndarray], base_dim: int) -> "ForceTerm":
        """
        由底空间力 F̂(x, ẋ) 拉回的力项，纤维分量为零

        Args:
            fhat: 底空间力，参数为底坐标与底速度
            base_dim: 底空间维数（状态前 base_dim 个坐标为底坐标）
        """

        def evaluate(s: ChartState) -> np.ndarray:
            out = np.zeros(s.chart.dim)
            out[:base_dim] = fhat(s.q[:base_dim], s.v[:base_dim])
            return out

        return cls(ForceKind.BASECOVECTOR, covector=evaluate)

    def plus(self, other: "ForceTerm") -> "ForceTerm":
        """两个力项相加"""
        if self.kind == ForceKind.ZERO:
            return other
        if other.kind == ForceKind.ZERO:
            return self
        if self.beta is not None and other.beta is not None:
            b1, b2 = self.beta, other.beta
            beta: Optional[MatrixField] = lambda q: b1(q) + b2(q)
        else:
            beta = self.beta if self.beta is not None else other.beta
        if self.covector is not None and other.covector is not None:
            c1, c2 = self.covector, other.covector
            covector: Optional[CovectorField] = lambda s: c1(s) + c2(s)
        else:
            covector = self.covector if self.covector is not None else other.covector
        kind = ForceKind.GYROSCOPIC if covector is None else ForceKind.GENERAL
        return ForceTerm(kind, beta=beta, covector=covector)

    @property
    def is_gyroscopic(self) -> bool:
        return self.beta is not None

    def gyroscopic_part(self, s: ChartState) -> np.ndarray:
        if self.beta is None:
            return np.zeros(s.chart.dim)
        return np.asarray(self.beta(s.q), dtype=float) @ s.v

    def non_gyroscopic_part(self, s: ChartState) -> np.ndarray:
        if self.covector is None:
            return np.zeros(s.chart.dim)
        return np.asarray(self.covector(s), dtype=float)

    def __call__(self, s: ChartState) -> np.ndarray:
        return self.gyroscopic_part(s) + self.non_gyroscopic_part(s)


@dataclass(frozen=True)
class AnalyticPartials:
    """系统注册的解析偏导数，缺省的项回退到有限差分"""

    dL_dq: Optional[CovectorField] = None
    dL_dv: Optional[CovectorField] = None
    hessian_vv: Optional[Callable[[ChartState], np.ndarray]] = None
    mixed_vq: Optional[Callable[[ChartState], np.ndarray]] = None


@dataclass(frozen=True)
class KineticForm:
    """
    力学型拉格朗日量 L = ½ vᵀM(q)v + ⟨a(q), v⟩ − V(q)

    Attributes:
        metric: 动能度量 M(q)
        potential: 势能 V(q)，缺省为零
        linear: 速度线性项系数 a(q)（磁力型项），可选
        metric_grad: ∂M/∂q_k 组成的 (dim, dim, dim) 数组，第一维为 k，可选
        potential_grad: ∇V，可选
        linear_grad: 矩阵 ∂a_i/∂q_k，可选
    """

    metric: MatrixField
    potential: Optional[Callable[[np.ndarray], float]] = None
    linear: Optional[Callable[[np.ndarray], np.ndarray]] = None
    metric_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    potential_grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    linear_grad: Optional[MatrixField] = None

    def _a(self, q: np.ndarray) -> np.ndarray:
        if self.linear is None:
            return np.zeros(q.shape[0])
        return np.asarray(self.linear(q), dtype=float)

    def _V(self, q: np.ndarray) -> float:
        return 0.0 if self.potential is None else float(self.potential(q))

    def _dM(self, q: np.ndarray) -> np.ndarray:
        if self.metric_grad is not None:
            return np.asarray(self.metric_grad(q), dtype=float)
        n = q.shape[0]
        jac = fd_jacobian(lambda p: np.asarray(self.metric(p), dtype=float).reshape(-1), q)
        return np.moveaxis(jac.reshape(n, n, n), 2, 0)

    def _da(self, q: np.ndarray) -> np.ndarray:
        if self.linear is None:
            return np.zeros((q.shape[0], q.shape[0]))
        if self.linear_grad is not None:
            return np.asarray(self.linear_grad(q), dtype=float)
        return fd_jacobian(self._a, q)

    def _dV(self, q: np.ndarray) -> np.ndarray:
        if self.potential_grad is not None:
            return np.asarray(self.potential_grad(q), dtype=float)
        if self.potential is None:
            return np.zeros(q.shape[0])
        return fd_gradient(self._V, q)

    @cached_property
    def _gradients(self) -> PointCache[Tuple[np.ndarray, np.ndarray]]:
        return PointCache(lambda q: (self._dM(q), self._da(q)))

    def position_gradients(self, q: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """(∂M/∂q, ∂a/∂q)，dL_dq 与 mixed_vq 在同一位置共用一次计算"""
        return self._gradients(q)

    def value(self, s: ChartState) -> float:
        M = np.asarray(self.metric(s.q), dtype=float)
        return float(0.5 * s.v @ M @ s.v + self._a(s.q) @ s.v - self._V(s.q))

    def dL_dq(self, s: ChartState) -> np.ndarray:
        dM, da = self.position_gradients(s.q)
        quad = 0.5 * np.einsum("kij,i,j->k", dM, s.v, s.v)
        return quad + da.T @ s.v - self._dV(s.q)

    def dL_dv(self, s: ChartState) -> np.ndarray:
        return np.asarray(self.metric(s.q), dtype=float) @ s.v + self._a(s.q)

    def hessian_vv(self, s: ChartState) -> np.ndarray:
        return np.asarray(self.metric(s.q), dtype=float)

    def mixed_vq(self, s: ChartState) -> np.ndarray:
        """∂²L/∂v_i∂q_k"""
        dM, da = self.position_gradients(s.q)
        return np.einsum("kij,j->ik", dM, s.v) + da

    def partials(self) -> AnalyticPartials:
        return AnalyticPartials(self.dL_dq, self.dL_dv, self.hessian_vv, self.mixed_vq)


@dataclass(frozen=True)
class LagrangianSystem:
    """
    拉格朗日系统 (Q, L, F)

    Attributes:
        chart: 位形空间坐标卡
        L: 拉格朗日量，作用在 ChartState 上
        F: 力项
        partials: 解析偏导数，存在时优先于有限差分
        kinetic: 力学型系统的动能形式（机械联络需要）
        name: 系统名称
    """

    chart: Chart
    L: Callable[[ChartState], float]
    F: ForceTerm = field(default_factory=ForceTerm.zero)
    partials: Optional[AnalyticPartials] = None
    kinetic: Optional[KineticForm] = None
    name: str = ""

    @classmethod
    def from_kinetic(
        cls, chart: Chart, kinetic: KineticForm, F: Optional[ForceTerm] = None, name: str = ""
    ) -> "LagrangianSystem":
        return cls(chart, kinetic.value, F or ForceTerm.zero(), kinetic.partials(), kinetic, name)

    def state(self, q: np.ndarray, v: np.ndarray) -> ChartState:
        return ChartState(self.chart, q, v)

    def lagrangian(self, s: ChartState) -> float:
        return float(self.L(s))

    def dL_dq(self, s: ChartState) -> np.ndarray:
        if self.partials is not None and self.partials.dL_dq is not None:
            return np.asarray(self.partials.dL_dq(s), dtype=float)
        return fd_gradient(lambda q: self.lagrangian(s.with_position(q)), s.q)

    def dL_dv(self, s: ChartState) -> np.ndarray:
        if self.partials is not None and self.partials.dL_dv is not None:
            return np.asarray(self.partials.dL_dv(s), dtype=float)
        return fd_gradient(lambda v: self.lagrangian(s.with_velocity(v)), s.v)

    def hessian_vv(self, s: ChartState) -> np.ndarray:
        if self.partials is not None and self.partials.hessian_vv is not None:
            return np.asarray(self.partials.hessian_vv(s), dtype=float)
        if self.partials is not None and self.partials.dL_dv is not None:
            jac = fd_jacobian(lambda v: self.dL_dv(s.with_velocity(v)), s.v)
            return 0.5 * (jac + jac.T)
        return fd_hessian_vv(self.lagrangian, s)

    def mixed_vq(self, s: ChartState) -> np.ndarray:
        """矩阵 ∂²L/∂v_i∂q_k"""
        if self.partials is not None and self.partials.mixed_vq is not None:
            return np.asarray(self.partials.mixed_vq(s), dtype=float)
        if self.partials is not None and self.partials.dL_dv is not None:
            return fd_jacobian(lambda q: self.dL_dv(s.with_position(q)), s.q)
        n = s.chart.dim

        def on_jet(z: np.ndarray) -> float:
            return self.lagrangian(ChartState(s.chart, z[:n], z[n:]))

        return fd_cross_hessian(on_jet, s.z, range(n, 2 * n), range(n))

    def force(self, s: ChartState) -> np.ndarray:
        return self.F(s)

    def energy(self, s: ChartState) -> float:
        """E_L = ⟨∂L/∂v, v⟩ − L"""
        return float(self.dL_dv(s) @ s.v - self.lagrangian(s))


@dataclass(frozen=True)
class Jet:
    """二阶数据 (q, v, a)"""

    state: ChartState
    a: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.a, dtype=float).reshape(-1)
        if a.shape[0] != self.state.chart.dim:
            raise ValueError(f"加速度维数 {a.shape[0]} 与坐标卡维数 {self.state.chart.dim} 不一致")
        object.__setattr__(self, "a", a)

    @classmethod
    def of(cls, chart: Chart, q: np.ndarray, v: np.ndarray, a: np.ndarray) -> "Jet":
        return cls(ChartState(chart, q, v), a)


def el_residual(sys: LagrangianSystem, jet: Jet) -> np.ndarray:
    """
    Euler-Lagrange 残差 ∂L/∂q − d/dt(∂L/∂v) + F

    时间导数按链式法则展开为 (∂²L/∂v∂q)·v + (∂²L/∂v∂v)·a。

    Args:
        sys: 拉格朗日系统
        jet: 二阶数据

    Returns:
        余向量，为零当且仅当该瞬时满足 EL 方程

    Raises:
        ChartSingularityError: 状态落入坐标卡奇异区域
    """
    s = jet.state
    sys.chart.require_regular(s.q)
    ddt_momentum = sys.mixed_vq(s) @ s.v + sys.hessian_vv(s) @ jet.a
    return sys.dL_dq(s) - ddt_momentum + sys.force(s)


def factor_velocity_hessian(H: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    LU 分解速度 Hessian

    主元比值在 PIVOT_RATIO 以内时直接使用分解，否则用 SVD 计算条件数再判断。

    Raises:
        SingularLagrangianError: 条件数超过 CONDITION_LIMIT
    """
    factors = lu_factor(H, check_finite=False)
    pivots = np.abs(np.diag(factors[0]))
    if pivots.size == 0 or pivots.min() > PIVOT_RATIO * pivots.max():
        return factors
    condition = float(np.linalg.cond(H))
    if not np.isfinite(condition) or condition > CONDITION_LIMIT:
        raise SingularLagrangianError("速度 Hessian 奇异，请改用预辛分析", condition)
    return factors


def normal_form_acceleration(sys: LagrangianSystem, s: ChartState) -> np.ndarray:
    """
    求解正规形式 EL 方程得到加速度

    Raises:
        SingularLagrangianError: 速度 Hessian 条件数超过阈值
    """
    factors = factor_velocity_hessian(sys.hessian_vv(s))
    rhs = sys.dL_dq(s) - sys.mixed_vq(s) @ s.v + sys.force(s)
    return lu_solve(factors, rhs, check_finite=False)


def integrate_full(
    sys: LagrangianSystem,
    s0: ChartState,
    t0: Optional[float] = None,
    t1: Optional[float] = None,
    dt: Optional[float] = None,
    action: Optional["GroupAction"] = None,
) -> Trajectory:
    """
    积分全系统的 EL 方程 EL(L) + F = 0

    Args:
        sys: 拉格朗日系统
        s0: 初始状态
        t0, t1, dt: 积分区间与步长，默认取配置值
        action: 可选的群作用，提供时附加 J_L 诊断通道

    Returns:
        轨迹，诊断通道包含 E_L、force_power（⟨F, v⟩）以及可选的 J_L

    Raises:
        SingularLagrangianError: 速度 Hessian 奇异
        IntegrationBlowupError: 积分发散
        ChartSingularityError: 状态进入坐标卡奇异区域
    """
    t0 = config.t0 if t0 is None else t0
    t1 = config.t1 if t1 is None else t1
    dt = config.dt if dt is None else dt
    n = sys.chart.dim
    started = time.perf_counter()
    logger.info(f"全系统积分开始: {sys.name or sys.chart.name}, t∈[{t0}, {t1}], dt={dt}")

    def vector_field(t: float, z: np.ndarray) -> np.ndarray:
        s = ChartState(sys.chart, z[:n], z[n:])
        return np.concatenate([s.v, normal_form_acceleration(sys, s)])

    def guard(t: float, z: np.ndarray) -> None:
        sys.chart.require_regular(z[:n], t)

    times, points = rk4(vector_field, s0.z, t0, t1, dt, guard)
    traj = Trajectory.from_arrays(sys.chart, times, points[:, :n], points[:, n:])
    attach_diagnostics(sys, traj, action)

    elapsed = time.perf_counter() - started
    logger.info(f"全系统积分完成: {len(times) - 1} 步, 用时 {elapsed:.2f}s")
    return traj


def attach_diagnostics(
    sys: LagrangianSystem, traj: Trajectory, action: Optional["GroupAction"] = None
) -> Trajectory:
    """为轨迹补充 E_L、force_power 与可选的 J_L 诊断通道"""
    energies = np.array([sys.energy(s) for s in traj.states])
    power = np.array([sys.force(s) @ s.v for s in traj.states])
    traj.diagnostics["E_L"] = energies
    traj.diagnostics["force_power"] = power
    if action is not None:
        traj.diagnostics["J_L"] = np.array(
            [action.generator_matrix(s.q).T @ sys.dL_dv(s) for s in traj.states]
        )
    return traj


@dataclass(frozen=True)
class FibredConnection:
    """纤维化上的联络系数 Γ^a_i(x, y)，返回 k×n 矩阵"""

    coefficients: Callable[[np.ndarray, np.ndarray], np.ndarray]

    @classmethod
    def zero(cls, base_dim: int, fibre_dim: int) -> "FibredConnection":
        return cls(lambda x, y: np.zeros((fibre_dim, base_dim)))

    def __call__(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.asarray(self.coefficients(x, y), dtype=float)


@dataclass(frozen=True)
class FibredSystem:
    """
    内蕴约束拉格朗日系统 (π: M → N, L, F)

    total 是整体坐标卡 (x, y) 上的拉格朗日系统，前 base_dim 个坐标为底坐标；
    拉格朗日量不依赖纤维速度 ẏ，构造时抽样检验。

    constraint_jacobian 可选，给出约束残差 α = ∂L/∂y + F_y 关于 x 与 ẋ 的
    Jacobian (∂α/∂x, ∂α/∂ẋ)，缺省时由有限差分计算。
    """

    total: LagrangianSystem
    base_dim: int
    validate: bool = True
    constraint_jacobian: Optional[Callable[[ChartState], Tuple[np.ndarray, np.ndarray]]] = None

    def __post_init__(self) -> None:
        if not 0 <= self.base_dim <= self.total.chart.dim:
            raise ValueError(f"底空间维数 {self.base_dim} 超出整体维数 {self.total.chart.dim}")
        if self.validate:
            worst = self.fibre_velocity_dependence()
            if worst > FIBRE_VELOCITY_TOLERANCE:
                raise ValueError(f"拉格朗日量依赖纤维速度 (最大偏导 {worst:.3e})，不是内蕴约束系统")

    @property
    def chart(self) -> Chart:
        return self.total.chart

    @property
    def fibre_dim(self) -> int:
        return self.total.chart.dim - self.base_dim

    def split(self, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return values[: self.base_dim], values[self.base_dim :]

    def sample_states(self, n_samples: Optional[int] = None, seed: Optional[int] = None) -> List[ChartState]:
        """整体坐标卡上的准随机状态，位置取坐标卡采样范围，速度取 [−1, 1]"""
        n_samples = n_samples or config.n_samples
        dim = self.chart.dim
        positions = self.chart.sample_positions(n_samples, seed)
        velocities = quasi_random(n_samples, [-1.0] * dim, [1.0] * dim, (config.seed if seed is None else seed) + 1)
        return [ChartState(self.chart, q, v) for q, v in zip(positions, velocities)]

    def fibre_velocity_dependence(self) -> float:
        if self.fibre_dim == 0:
            return 0.0
        worst = 0.0
        for s in self.sample_states():
            worst = max(worst, float(np.max(np.abs(self.total.dL_dv(s)[self.base_dim :]))))
        return worst


def intrinsic_constraint_residual(fsys: FibredSystem, s: ChartState) -> np.ndarray:
    """
    内蕴约束残差 ∂L/∂y^a + F_a

    Args:
        fsys: 内蕴约束系统
        s: 整体坐标卡上的状态

    Returns:
        长度为纤维维数的向量，为零当且仅当约束成立
    """
    n = fsys.base_dim
    return fsys.total.dL_dq(s)[n:] + fsys.total.force(s)[n:]


def split_el_residual(fsys: FibredSystem, conn: FibredConnection, jet: Jet) -> Tuple[np.ndarray, np.ndarray]:
    """
    按联络分裂的 EL 残差

    水平部分 ∂L/∂x^i − d/dt(∂L/∂ẋ^i) + F_i − (∂L/∂y^a + F_a)Γ^a_i，
    竖直部分 ∂L/∂y^a + F_a。

    Returns:
        (水平余向量, 竖直余向量)
    """
    n = fsys.base_dim
    full = el_residual(fsys.total, jet)
    vertical = intrinsic_constraint_residual(fsys, jet.state)
    gamma = conn(jet.state.q[:n], jet.state.q[n:]).reshape(fsys.fibre_dim, n)
    horizontal = full[:n] - gamma.T @ vertical
    return horizontal, vertical


class ConstraintClass(str, Enum):
    """内蕴约束的类型"""

    GYROSCOPIC_REGULAR = "gyroscopic-regular"
    CONFIGURATION = "configuration"
    LINEAR = "linear"
    GENERAL = "general"


def classify_constraint(fsys: FibredSystem, n_samples: Optional[int] = None) -> ConstraintClass:
    """
    按抽样数值检验对内蕴约束分类

    依次检验：陀螺力纤维块非退化 → gyroscopic-regular；L 对纤维坐标仿射
    （二阶导 ≤ 1e-9）→ linear；纤维 Hessian 非退化 → configuration；否则 general。
    纤维维数为零时没有约束，按 configuration 处理。
    """
    n = fsys.base_dim
    k = fsys.fibre_dim
    if k == 0:
        return ConstraintClass.CONFIGURATION
    states = fsys.sample_states(n_samples)

    def nondegenerate(block: np.ndarray) -> bool:
        singular_values = np.linalg.svd(block, compute_uv=False)
        return bool(singular_values[-1] > 1e-8 * max(singular_values[0], 1e-300))

    if fsys.total.F.beta is not None:
        if all(nondegenerate(np.asarray(fsys.total.F.beta(s.q))[n:, n:]) for s in states):
            return ConstraintClass.GYROSCOPIC_REGULAR

    fibre = list(range(n, n + k))
    hessians = []
    for s in states:

        def on_position(q: np.ndarray, s: ChartState = s) -> float:
            return fsys.total.lagrangian(s.with_position(q))

        if fsys.total.partials is not None and fsys.total.partials.dL_dq is not None:
            jac = fd_jacobian(lambda q, s=s: fsys.total.dL_dq(s.with_position(q))[n:], s.q)[:, n:]
            hessians.append(0.5 * (jac + jac.T))
        else:
            hessians.append(fd_cross_hessian(on_position, s.q, fibre, fibre))

    if all(float(np.max(np.abs(h))) <= AFFINE_TOLERANCE for h in hessians):
        return ConstraintClass.LINEAR
    if all(nondegenerate(h) for h in hessians):
        return ConstraintClass.CONFIGURATION
    return ConstraintClass.GENERAL


def solve_linear_constrained(
    fsys: FibredSystem,
    x0: np.ndarray,
    xdot0: np.ndarray,
    t0: Optional[float] = None,
    t1: Optional[float] = None,
    dt: Optional[float] = None,
    m0: Optional[np.ndarray] = None,
) -> Trajectory:
    """
    线性内蕴约束系统的约束变分问题

    L = L₀(x, ẋ) + ⟨α(x, ẋ), m⟩ 的临界曲线投影为 (N, L₀, F̂) 限制在
    C = {α = 0} 上的临界曲线，纤维坐标 m 充当 Lagrange 乘子。
    状态 (x, ẋ, m) 上的鞍点系统
        [∂p/∂ẋ  ∂p/∂m] [ẍ]   [∂L/∂x + F_x − (∂p/∂x)ẋ]
        [∂α/∂ẋ   0   ] [ṁ] = [−(∂α/∂x)ẋ            ]
    逐步求解，其中 p = ∂L/∂ẋ，α = ∂L/∂m + F_m。

    Args:
        fsys: 线性内蕴约束系统
        x0, xdot0: 底空间初始状态
        t0, t1, dt: 积分区间与步长
        m0: 乘子初值，默认为零

    Returns:
        整体坐标卡上的轨迹（位置 (x, m)，速度 (ẋ, ṁ)），诊断通道 alpha 为约束残差

    Raises:
        ConstraintViolationError: 初始状态不在 C 上
    """
    t0 = config.t0 if t0 is None else t0
    t1 = config.t1 if t1 is None else t1
    dt = config.dt if dt is None else dt
    n = fsys.base_dim
    k = fsys.fibre_dim
    chart = fsys.chart
    total = fsys.total
    m_init = np.zeros(k) if m0 is None else np.asarray(m0, dtype=float)

    def state_of(x: np.ndarray, xdot: np.ndarray, m: np.ndarray, mdot: Optional[np.ndarray] = None) -> ChartState:
        return ChartState(chart, np.concatenate([x, m]), np.concatenate([xdot, np.zeros(k) if mdot is None else mdot]))

    def alpha(xv: np.ndarray, m: np.ndarray) -> np.ndarray:
        return intrinsic_constraint_residual(fsys, state_of(xv[:n], xv[n:], m))

    def alpha_jacobian(x: np.ndarray, xdot: np.ndarray, m: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        if fsys.constraint_jacobian is not None:
            da_dx, da_dxdot = fsys.constraint_jacobian(state_of(x, xdot, m))
            return np.reshape(da_dx, (k, n)), np.reshape(da_dxdot, (k, n))
        jac = fd_jacobian(lambda xv: alpha(xv, m), np.concatenate([x, xdot])).reshape(k, 2 * n)
        return jac[:, :n], jac[:, n:]

    residual = float(np.max(np.abs(alpha(np.concatenate([x0, xdot0]), m_init)), initial=0.0))
    if residual > 1e-9:
        raise ConstraintViolationError("初始状态不满足线性约束 α(v) = 0", residual)

    logger.info(f"线性约束问题积分开始: 底维数 {n}, 乘子维数 {k}, t∈[{t0}, {t1}]")

    def vector_field(t: float, z: np.ndarray) -> np.ndarray:
        x, xdot, m = z[:n], z[n : 2 * n], z[2 * n :]
        s = state_of(x, xdot, m)
        H = total.hessian_vv(s)[:n, :n]
        mixed = total.mixed_vq(s)
        dp_dx, dp_dm = mixed[:n, :n], mixed[:n, n:]
        grad_x = total.dL_dq(s)[:n] + total.force(s)[:n]
        da_dx, da_dxdot = alpha_jacobian(x, xdot, m)

        saddle = np.block([[H, dp_dm], [da_dxdot, np.zeros((k, k))]])
        rhs = np.concatenate([grad_x - dp_dx @ xdot, -da_dx @ xdot])
        solution = lu_solve(lu_factor(saddle), rhs)
        return np.concatenate([xdot, solution[:n], solution[n:]])

    times, points, slopes = rk4_slopes(vector_field, np.concatenate([x0, xdot0, m_init]), t0, t1, dt)
    xs, xdots, ms = points[:, :n], points[:, n : 2 * n], points[:, 2 * n :]
    mdots = slopes[:, 2 * n :]
    alphas = np.array([alpha(np.concatenate([x, xd]), m) for x, xd, m in zip(xs, xdots, ms)])

    traj = Trajectory.from_arrays(
        chart,
        times,
        np.hstack([xs, ms]),
        np.hstack([xdots, mdots]),
        {"alpha": alphas.reshape(len(times), k), "multiplier": ms},
    )
    logger.info(f"线性约束问题积分完成: 最大约束残差 {float(np.max(np.abs(alphas), initial=0.0)):.3e}")
    return traj


def sample_force_work(sys: LagrangianSystem, states: List[ChartState]) -> Dict[str, float]:
    """抽样检验力项做功 ⟨F(v), v⟩，陀螺力应恒为零"""
    powers = [float(sys.force(s) @ s.v) for s in states]
    return {"max_abs_power": max(abs(p) for p in powers), "max_power": max(powers)}
