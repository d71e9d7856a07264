"""
对称性模块

李群、群作用、无穷小生成元、动量映射、不变性检验、锁定惯性张量与迷向子代数。
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial.transform import Rotation

from routh_reduction.core.calculus import (
    GRADIENT_SCALE,
    Chart,
    ChartState,
    Trajectory,
    default_steps,
    quasi_random,
    wrap_angle,
)
from routh_reduction.core.lagrangian import LagrangianSystem
from routh_reduction.utils.config import config
from routh_reduction.utils.errors import NotInvariantError
from routh_reduction.utils.logger import get_logger

logger = get_logger(__name__)

INVARIANCE_TOLERANCE = 1e-8
ISOTROPY_TOLERANCE = 1e-10


def hat(xi: np.ndarray) -> np.ndarray:
    """ℝ³ → so(3) 的反对称矩阵"""
    x, y, z = xi
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(m: np.ndarray) -> np.ndarray:
    """so(3) → ℝ³"""
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


class GroupKind(str, Enum):
    """内置李群类型"""

    ABELIAN = "abelian"
    TORUS = "torus"
    SO3 = "so3"


class ActionSide(str, Enum):
    """群作用的方向"""

    LEFT = "left"
    RIGHT = "right"

    @property
    def sign(self) -> int:
        """右作用 +1，左作用 −1"""
        return 1 if self == ActionSide.RIGHT else -1


@dataclass(frozen=True)
class LieGroup:
    """
    李群描述

    ℝᵏ 与 Tᵏ 的群元为实向量（环面坐标不取模），SO(3) 的群元为 3×3 正交矩阵。
    李代数统一按 ℝ^dim 上的固定基表示，SO(3) 的括号为叉积。
    """

    kind: GroupKind
    dim: int

    @classmethod
    def abelian(cls, k: int) -> "LieGroup":
        return cls(GroupKind.ABELIAN, k)

    @classmethod
    def torus(cls, k: int) -> "LieGroup":
        return cls(GroupKind.TORUS, k)

    @classmethod
    def so3(cls) -> "LieGroup":
        return cls(GroupKind.SO3, 3)

    @property
    def is_abelian(self) -> bool:
        return self.kind != GroupKind.SO3

    def identity(self) -> np.ndarray:
        return np.eye(3) if self.kind == GroupKind.SO3 else np.zeros(self.dim)

    def compose(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        return g @ h if self.kind == GroupKind.SO3 else g + h

    def inverse(self, g: np.ndarray) -> np.ndarray:
        return g.T if self.kind == GroupKind.SO3 else -g

    def bracket(self, xi: np.ndarray, eta: np.ndarray) -> np.ndarray:
        if self.is_abelian:
            return np.zeros(self.dim)
        return np.cross(xi, eta)

    def ad_matrix(self, xi: np.ndarray) -> np.ndarray:
        """η ↦ [ξ, η] 的矩阵"""
        if self.is_abelian:
            return np.zeros((self.dim, self.dim))
        return hat(xi)

    def Ad(self, g: np.ndarray, xi: np.ndarray) -> np.ndarray:
        return self.Ad_matrix(g) @ xi

    def Ad_matrix(self, g: np.ndarray) -> np.ndarray:
        return np.asarray(g, dtype=float) if self.kind == GroupKind.SO3 else np.eye(self.dim)

    def coad_star(self, xi: np.ndarray, mu: np.ndarray) -> np.ndarray:
        """ad*_ξ μ，满足 ⟨ad*_ξ μ, η⟩ = ⟨μ, [ξ, η]⟩；SO(3) 上为 μ × ξ"""
        return self.ad_matrix(xi).T @ mu

    def Ad_star(self, g: np.ndarray, mu: np.ndarray) -> np.ndarray:
        """Ad*_g μ，满足 ⟨Ad*_g μ, ξ⟩ = ⟨μ, Ad_g ξ⟩"""
        return self.Ad_matrix(g).T @ mu

    def exp(self, xi: np.ndarray) -> np.ndarray:
        if self.kind == GroupKind.SO3:
            return Rotation.from_rotvec(np.asarray(xi, dtype=float)).as_matrix()
        return np.array(xi, dtype=float)

    def defect(self, g: np.ndarray) -> float:
        """群元偏离群的程度，SO(3) 为 |gᵀg − 1|"""
        if self.kind == GroupKind.SO3:
            return float(np.max(np.abs(g.T @ g - np.eye(3))))
        return 0.0

    def sample(self, n: int, seed: Optional[int] = None) -> List[np.ndarray]:
        """准随机群元，SO(3) 取旋转向量 |ξ_i| ≤ π/2 的指数"""
        bound = np.pi / 2 if self.kind == GroupKind.SO3 else 1.0
        points = quasi_random(n, [-bound] * self.dim, [bound] * self.dim, seed)
        return [self.exp(p) for p in points]


@dataclass(frozen=True)
class GroupAction:
    """
    坐标卡上的群作用

    Attributes:
        group: 李群
        chart: 被作用的坐标卡
        side: 作用方向
        act: (g, q) ↦ q′
        generators: q ↦ nq×dim 矩阵，第 a 列为 σ_q(e_a)
        jacobian: 可选的解析 Jacobian (g, q) ↦ ∂act(g, q)/∂q，缺省时用中心差分
    """

    group: LieGroup
    chart: Chart
    side: ActionSide
    act: Callable[[np.ndarray, np.ndarray], np.ndarray]
    generators: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def generator_matrix(self, q: np.ndarray) -> np.ndarray:
        return np.asarray(self.generators(np.asarray(q, dtype=float)), dtype=float).reshape(
            self.chart.dim, self.group.dim
        )

    def generator(self, q: np.ndarray, xi: np.ndarray) -> np.ndarray:
        """无穷小生成元 ξ_Q(q) = σ_q(ξ)"""
        return self.generator_matrix(q) @ np.asarray(xi, dtype=float)

    def _difference(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        angular = np.array(self.chart.angular, dtype=bool)
        diff[angular] = wrap_angle(diff[angular])
        return diff

    def act_jacobian(self, g: np.ndarray, q: np.ndarray) -> np.ndarray:
        """作用映射 q ↦ act(g, q) 的 Jacobian（无解析式时中心差分，角度差按 2π 取模）"""
        if self.jacobian is not None:
            return np.asarray(self.jacobian(g, np.asarray(q, dtype=float)), dtype=float)
        q = np.asarray(q, dtype=float)
        steps = default_steps(q, GRADIENT_SCALE, config.fd_step)
        columns = []
        for i in range(q.shape[0]):
            e = np.zeros_like(q)
            e[i] = steps[i]
            columns.append(self._difference(self.act(g, q + e), self.act(g, q - e)) / (2.0 * steps[i]))
        return np.column_stack(columns)

    def tangent_lift(self, g: np.ndarray, s: ChartState) -> ChartState:
        """v_q ↦ T_qΨ_g(v_q)"""
        q_new = np.asarray(self.act(g, s.q), dtype=float)
        return ChartState(s.chart, q_new, self.act_jacobian(g, s.q) @ s.v)

    def generator_defect(self, q: np.ndarray, xi: np.ndarray, h: float = 1e-5) -> float:
        """|σ_q(ξ) − d/dε act(exp(εξ), q)|"""
        forward = self.act(self.group.exp(h * np.asarray(xi)), q)
        backward = self.act(self.group.exp(-h * np.asarray(xi)), q)
        numeric = self._difference(forward, backward) / (2.0 * h)
        return float(np.max(np.abs(numeric - self.generator(q, xi))))


@dataclass(frozen=True)
class MomentumValue:
    """𝔤* 中的动量值（对偶基下的分量）"""

    mu: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "mu", np.array(self.mu, dtype=float).reshape(-1))

    @property
    def dim(self) -> int:
        return self.mu.shape[0]

    def __sub__(self, other: "MomentumValue") -> "MomentumValue":
        return MomentumValue(self.mu - other.mu)


def as_momentum(mu: Any) -> MomentumValue:
    return mu if isinstance(mu, MomentumValue) else MomentumValue(np.atleast_1d(mu))


def momentum_map(sys: LagrangianSystem, action: GroupAction, s: ChartState) -> MomentumValue:
    """
    动量映射 J_L(v_q)(ξ) = d/dε L(v_q + ε ξ_Q(q))

    有解析偏导时等于 σ_qᵀ ∂L/∂v。
    """
    return MomentumValue(action.generator_matrix(s.q).T @ sys.dL_dv(s))


@dataclass
class InvarianceReport:
    """不变性检验结果"""

    L_invariant: bool
    F_cond1: bool
    F_cond2: bool
    max_violations: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.L_invariant and self.F_cond1 and self.F_cond2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "L_invariant": self.L_invariant,
            "F_cond1": self.F_cond1,
            "F_cond2": self.F_cond2,
            "max_violations": dict(self.max_violations),
        }


def sample_states(chart: Chart, n_samples: int, seed: Optional[int] = None) -> List[ChartState]:
    """在坐标卡采样范围内生成准随机状态，速度取 [−1, 1]"""
    seed = config.seed if seed is None else seed
    positions = chart.sample_positions(n_samples, seed)
    velocities = quasi_random(n_samples, [-1.0] * chart.dim, [1.0] * chart.dim, seed + 1)
    return [ChartState(chart, q, v) for q, v in zip(positions, velocities)]


def check_invariance(
    sys: LagrangianSystem,
    action: GroupAction,
    n_samples: Optional[int] = None,
    seed: Optional[int] = None,
    strict: bool = False,
) -> InvarianceReport:
    """
    抽样检验拉格朗日量与力项的群不变性

    检验 |L(v_q·g) − L(v_q)|、力项条件一 ⟨F(v_q g), w_q g⟩ = ⟨F(v_q), w_q⟩
    与条件二 ⟨F(v_q), ξ_Q(q)⟩ = 0，阈值 1e-8。

    Args:
        sys: 拉格朗日系统
        action: 群作用
        n_samples: 样本数，默认取配置值
        seed: 随机种子
        strict: 为 True 时不变性失败抛出 NotInvariantError

    Returns:
        检验报告
    """
    n_samples = n_samples or config.n_samples
    states = sample_states(sys.chart, n_samples, seed)
    elements = action.group.sample(n_samples, (config.seed if seed is None else seed) + 2)

    lag, cond1, cond2 = 0.0, 0.0, 0.0
    for s, g in zip(states, elements):
        moved = action.tangent_lift(g, s)
        if sys.chart.is_singular(moved.q):
            continue
        scale = max(1.0, abs(sys.lagrangian(s)))
        lag = max(lag, abs(sys.lagrangian(moved) - sys.lagrangian(s)) / scale)

        force = sys.force(s)
        jac = action.act_jacobian(g, s.q)
        cond1 = max(cond1, float(np.max(np.abs(jac.T @ sys.force(moved) - force))))
        cond2 = max(cond2, float(np.max(np.abs(action.generator_matrix(s.q).T @ force), initial=0.0)))

    report = InvarianceReport(
        L_invariant=lag <= INVARIANCE_TOLERANCE,
        F_cond1=cond1 <= INVARIANCE_TOLERANCE,
        F_cond2=cond2 <= INVARIANCE_TOLERANCE,
        max_violations={"L": lag, "F_cond1": cond1, "F_cond2": cond2},
    )
    if report.passed:
        logger.debug(f"不变性检验通过: {sys.name}, {report.max_violations}")
    else:
        logger.warning(f"不变性检验失败: {sys.name}, {report.max_violations}")
        if strict:
            raise NotInvariantError(f"系统 {sys.name} 不满足群不变性", report.to_dict())
    return report


def check_equivariance(
    sys: LagrangianSystem, action: GroupAction, n_samples: Optional[int] = None, seed: Optional[int] = None
) -> float:
    """
    动量映射的等变性偏差

    右作用 J_L(v_q·g) = Ad*_g J_L(v_q)；左作用 J_L(g·v_q) = Ad*_{g⁻¹} J_L(v_q)。
    """
    n_samples = n_samples or config.n_samples
    states = sample_states(sys.chart, n_samples, seed)
    elements = action.group.sample(n_samples, (config.seed if seed is None else seed) + 2)
    worst = 0.0
    for s, g in zip(states, elements):
        moved = action.tangent_lift(g, s)
        if sys.chart.is_singular(moved.q):
            continue
        j = momentum_map(sys, action, s).mu
        transported = action.group.Ad_star(g if action.side == ActionSide.RIGHT else action.group.inverse(g), j)
        worst = max(worst, float(np.max(np.abs(momentum_map(sys, action, moved).mu - transported))))
    return worst


def momentum_drift(traj: Trajectory, channel: str = "J_L") -> np.ndarray:
    """
    动量漂移 max_t |J_L(t) − J_L(0)|，按 𝔤* 分量给出

    Raises:
        DiagnosticsMissingError: 轨迹缺少 J_L 通道
    """
    values = np.asarray(traj.channel(channel), dtype=float)
    values = values.reshape(len(traj.times), -1)
    return np.max(np.abs(values - values[0]), axis=0)


def locked_inertia(sys: LagrangianSystem, action: GroupAction, s: ChartState) -> np.ndarray:
    """
    锁定惯性张量 I_{v_q}(ξ)(η) = d/dτ J_L(v_q + τ η_Q(q))(ξ) = σᵀ (∂²L/∂v∂v) σ

    Returns:
        dim × dim 矩阵（𝔤 → 𝔤*）
    """
    G = action.generator_matrix(s.q)
    return G.T @ sys.hessian_vv(s) @ G


def isotropy_subalgebra(group: LieGroup, mu: Any) -> np.ndarray:
    """
    迷向子代数 𝔤_μ = ker(ξ ↦ ad*_ξ μ)

    对矩阵 [ad*_{e_1} μ, …, ad*_{e_d} μ] 做奇异值分解，奇异值 < 1e-10 视为零。

    Returns:
        行向量为 𝔤_μ 的正交基，形状 (dim 𝔤_μ, dim)
    """
    mu_vec = as_momentum(mu).mu
    basis = np.eye(group.dim)
    K = np.column_stack([group.coad_star(basis[a], mu_vec) for a in range(group.dim)])
    _, singular_values, vt = np.linalg.svd(K)
    rank = int(np.sum(singular_values >= ISOTROPY_TOLERANCE))
    return vt[rank:].copy()


def enforce_momentum(
    sys: LagrangianSystem, action: GroupAction, s: ChartState, mu: Any
) -> Tuple[ChartState, float]:
    """
    把初始状态投影到动量水平集 J_L = μ 上

    加上竖直速度 σ_q(η)，η 为 I·η = μ − J_L 的最小二乘解。

    Returns:
        (修正后的状态, 剩余偏差 max|J_L − μ|)
    """
    target = as_momentum(mu).mu
    inertia = locked_inertia(sys, action, s)
    gap = target - momentum_map(sys, action, s).mu
    eta = np.linalg.lstsq(inertia, gap, rcond=None)[0]
    corrected = s.with_velocity(s.v + action.generator(s.q, eta))
    mismatch = float(np.max(np.abs(momentum_map(sys, action, corrected).mu - target)))
    logger.debug(f"动量投影: η={np.round(eta, 10).tolist()}, 剩余偏差 {mismatch:.3e}")
    return corrected, mismatch
