"""
坐标卡、状态与数值微积分模块

提供坐标卡 / 状态 / 轨迹数据结构、中心差分、固定步长 RK4 积分以及准随机采样，
其余模块的所有导数与积分都经由这里完成。
"""

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Generic, List, Optional, Sequence, Tuple, TypeVar

import numpy as np
from scipy.stats import qmc

from routh_reduction.utils.config import config
from routh_reduction.utils.errors import (
    ChartSingularityError,
    DiagnosticsMissingError,
    IntegrationBlowupError,
    NumericalDomainError,
)
from routh_reduction.utils.logger import get_logger

logger = get_logger(__name__)

EPS = float(np.finfo(float).eps)
GRADIENT_SCALE = EPS ** (1.0 / 3.0)
HESSIAN_SCALE = EPS ** (1.0 / 4.0)

ScalarField = Callable[[np.ndarray], float]
VectorField = Callable[[float, np.ndarray], np.ndarray]
T = TypeVar("T")


def wrap_angle(value: np.ndarray) -> np.ndarray:
    """把角度差映射到 (-π, π]"""
    return np.pi - np.mod(np.pi - np.asarray(value, dtype=float), 2.0 * np.pi)


@dataclass(frozen=True)
class Chart:
    """
    坐标卡

    Attributes:
        name: 坐标卡名称
        coord_names: 坐标名称
        singular_region: 可选的纯函数谓词，标记坐标卡失效区域（如欧拉角的极点）
        angular: 各坐标是否为角度（比较轨迹时按 2π 取模）
        lower / upper: 准随机采样的位形范围
    """

    name: str
    coord_names: Tuple[str, ...]
    singular_region: Optional[Callable[[np.ndarray], bool]] = None
    angular: Optional[Tuple[bool, ...]] = None
    lower: Optional[Tuple[float, ...]] = None
    upper: Optional[Tuple[float, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "coord_names", tuple(self.coord_names))
        n = len(self.coord_names)
        if self.angular is None:
            object.__setattr__(self, "angular", (False,) * n)
        if self.lower is None:
            object.__setattr__(self, "lower", (-1.0,) * n)
        if self.upper is None:
            object.__setattr__(self, "upper", (1.0,) * n)
        for label, values in (("angular", self.angular), ("lower", self.lower), ("upper", self.upper)):
            if len(values) != n:  # type: ignore[arg-type]
                raise ValueError(f"坐标卡 {self.name} 的 {label} 长度与维数 {n} 不一致")

    @property
    def dim(self) -> int:
        return len(self.coord_names)

    def is_singular(self, q: np.ndarray) -> bool:
        """判断位形是否落入奇异区域"""
        if self.singular_region is None:
            return False
        return bool(self.singular_region(np.asarray(q, dtype=float)))

    def require_regular(self, q: np.ndarray, time: Optional[float] = None) -> None:
        """位形落入奇异区域时抛出 ChartSingularityError"""
        if self.is_singular(q):
            raise ChartSingularityError(f"位形 {np.round(q, 6).tolist()} 落入坐标卡 {self.name} 的奇异区域", time)

    def sample_positions(self, n: int, seed: Optional[int] = None) -> np.ndarray:
        """在 [lower, upper] 内生成 n 个非奇异的准随机位形"""
        points = quasi_random(4 * n + 8, self.lower, self.upper, seed)  # type: ignore[arg-type]
        regular = [p for p in points if not self.is_singular(p)]
        if len(regular) < n:
            raise ChartSingularityError(f"坐标卡 {self.name} 的采样范围内非奇异点不足 {n} 个")
        return np.array(regular[:n])


@dataclass(frozen=True)
class ChartState:
    """坐标卡中的一个切向量 v_q：位置 q 与坐标速度 v"""

    chart: Chart
    q: np.ndarray
    v: np.ndarray

    def __post_init__(self) -> None:
        q = np.array(self.q, dtype=float).reshape(-1)
        v = np.array(self.v, dtype=float).reshape(-1)
        if q.shape[0] != self.chart.dim or v.shape[0] != self.chart.dim:
            raise ValueError(
                f"状态维数 ({q.shape[0]}, {v.shape[0]}) 与坐标卡 {self.chart.name} 维数 {self.chart.dim} 不一致"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    def with_velocity(self, v: np.ndarray) -> "ChartState":
        return replace(self, v=v)

    def with_position(self, q: np.ndarray) -> "ChartState":
        return replace(self, q=q)

    @property
    def z(self) -> np.ndarray:
        """一阶形式的状态向量 (q, v)"""
        return np.concatenate([self.q, self.v])


@dataclass
class Trajectory:
    """
    轨迹：时间网格 + 状态序列 + 每个采样点的诊断通道

    诊断通道以名称索引，取值为第一维与 times 等长的数组。
    """

    chart: Chart
    times: np.ndarray
    states: List[ChartState]
    diagnostics: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def from_arrays(
        cls,
        chart: Chart,
        times: np.ndarray,
        positions: np.ndarray,
        velocities: np.ndarray,
        diagnostics: Optional[Dict[str, np.ndarray]] = None,
    ) -> "Trajectory":
        states = [ChartState(chart, q, v) for q, v in zip(positions, velocities)]
        traj = cls(chart, np.asarray(times, dtype=float), states, dict(diagnostics or {}))
        traj.validate()
        return traj

    def __len__(self) -> int:
        return len(self.states)

    @property
    def positions(self) -> np.ndarray:
        return np.array([s.q for s in self.states]).reshape(len(self.states), self.chart.dim)

    @property
    def velocities(self) -> np.ndarray:
        return np.array([s.v for s in self.states]).reshape(len(self.states), self.chart.dim)

    def channel(self, name: str) -> np.ndarray:
        """读取诊断通道，不存在时抛出 DiagnosticsMissingError"""
        if name not in self.diagnostics:
            raise DiagnosticsMissingError(name)
        return self.diagnostics[name]

    def validate(self) -> None:
        """检查时间严格递增、长度一致、所有状态共享坐标卡"""
        if len(self.times) != len(self.states):
            raise ValueError(f"时间点 {len(self.times)} 个，状态 {len(self.states)} 个")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("轨迹时间必须严格递增")
        if any(s.chart is not self.chart and s.chart != self.chart for s in self.states):
            raise ValueError("轨迹中的状态不在同一坐标卡上")
        for name, values in self.diagnostics.items():
            if len(values) != len(self.times):
                raise ValueError(f"诊断通道 {name} 长度 {len(values)} 与时间点数 {len(self.times)} 不一致")


class PointCache(Generic[T]):
    """单槽缓存：参数数组与上一次调用逐元素相等时直接返回上一次的结果"""

    def __init__(self, fn: Callable[..., T]):
        self.fn = fn
        self._last: Optional[Tuple[Tuple[np.ndarray, ...], T]] = None

    def __call__(self, *arrays: np.ndarray) -> T:
        last = self._last
        if last is not None and all(np.array_equal(a, b) for a, b in zip(last[0], arrays)):
            return last[1]
        value = self.fn(*arrays)
        self._last = (tuple(np.array(a, dtype=float) for a in arrays), value)
        return value


def default_steps(p: np.ndarray, scale: float, h: Optional[float] = None) -> np.ndarray:
    """
    差分步长

    未显式给出 h 时取 scale·max(1, |p_i|)，按分量缩放。
    """
    p = np.asarray(p, dtype=float)
    if h is not None:
        return np.full(p.shape, float(h))
    return scale * np.maximum(1.0, np.abs(p))


def _finite(value: float, p: np.ndarray) -> float:
    if not np.all(np.isfinite(value)):
        raise NumericalDomainError(f"函数在点 {np.round(p, 8).tolist()} 处取非有限值")
    return value


def fd_gradient(f: ScalarField, p: np.ndarray, h: Optional[float] = None) -> np.ndarray:
    """
    中心差分梯度

    Args:
        f: 标量函数
        p: 求导点
        h: 步长，默认取配置值或 ε^(1/3)·max(1,|p_i|)

    Returns:
        梯度向量 (f(p+h e_i) − f(p−h e_i)) / 2h

    Raises:
        NumericalDomainError: 函数取非有限值
    """
    p = np.asarray(p, dtype=float)
    steps = default_steps(p, GRADIENT_SCALE, h if h is not None else config.fd_step)
    grad = np.zeros(p.shape[0])
    for i in range(p.shape[0]):
        e = np.zeros_like(p)
        e[i] = steps[i]
        fp = _finite(f(p + e), p + e)
        fm = _finite(f(p - e), p - e)
        grad[i] = (fp - fm) / (2.0 * steps[i])
    return grad


def fd_jacobian(
    f: Callable[[np.ndarray], np.ndarray], p: np.ndarray, h: Optional[float] = None
) -> np.ndarray:
    """
    向量值函数的中心差分 Jacobian

    Returns:
        矩阵 J，J[k, i] = ∂f_k/∂p_i
    """
    p = np.asarray(p, dtype=float)
    steps = default_steps(p, GRADIENT_SCALE, h if h is not None else config.fd_step)
    columns = []
    for i in range(p.shape[0]):
        e = np.zeros_like(p)
        e[i] = steps[i]
        fp = np.atleast_1d(np.asarray(f(p + e), dtype=float))
        fm = np.atleast_1d(np.asarray(f(p - e), dtype=float))
        _finite(fp, p + e)
        _finite(fm, p - e)
        columns.append((fp - fm) / (2.0 * steps[i]))
    if not columns:
        size = np.atleast_1d(np.asarray(f(p), dtype=float)).shape[0]
        return np.zeros((size, 0))
    return np.column_stack(columns)


def fd_directional(f: ScalarField, p: np.ndarray, d: np.ndarray, h: Optional[float] = None) -> float:
    """
    沿方向 d 的中心差分导数 d/dε f(p + ε d)

    未显式给出 h 时步长取 ε^(1/3)·max(1, |p|)。
    """
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    h = h if h is not None else config.fd_step
    step = float(h) if h is not None else GRADIENT_SCALE * max(1.0, float(np.linalg.norm(p)))
    fp = _finite(f(p + step * d), p)
    fm = _finite(f(p - step * d), p)
    return (fp - fm) / (2.0 * step)


def fd_cross_hessian(
    f: ScalarField,
    p: np.ndarray,
    rows: Sequence[int],
    cols: Sequence[int],
    h: Optional[float] = None,
) -> np.ndarray:
    """
    四点公式计算二阶导数块 ∂²f/∂p_rows∂p_cols

    对角元也使用四点公式（步长 2h 的三点差分），保证块与块之间一致。
    """
    p = np.asarray(p, dtype=float)
    steps = default_steps(p, HESSIAN_SCALE, h if h is not None else config.hessian_step)
    block = np.zeros((len(rows), len(cols)))
    for a, i in enumerate(rows):
        for b, j in enumerate(cols):
            ei = np.zeros_like(p)
            ej = np.zeros_like(p)
            ei[i] = steps[i]
            ej[j] = steps[j]
            fpp = _finite(f(p + ei + ej), p)
            fpm = _finite(f(p + ei - ej), p)
            fmp = _finite(f(p - ei + ej), p)
            fmm = _finite(f(p - ei - ej), p)
            block[a, b] = (fpp - fpm - fmp + fmm) / (4.0 * steps[i] * steps[j])
    return block


def fd_hessian_vv(
    L: Callable[[ChartState], float], s: ChartState, h: Optional[float] = None
) -> np.ndarray:
    """
    速度 Hessian ∂²L/∂v∂v（仅速度分量）

    Args:
        L: 作用在 ChartState 上的拉格朗日量
        s: 求值状态
        h: 步长

    Returns:
        对称矩阵 (dim × dim)
    """
    n = s.chart.dim

    def on_velocity(v: np.ndarray) -> float:
        return float(L(s.with_velocity(v)))

    block = fd_cross_hessian(on_velocity, s.v, range(n), range(n), h)
    return 0.5 * (block + block.T)


def rk4(
    vf: VectorField,
    z0: np.ndarray,
    t0: float,
    t1: float,
    dt: float,
    guard: Optional[Callable[[float, np.ndarray], None]] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    经典四阶固定步长 Runge-Kutta 积分

    最后一步缩短以精确落在 t1。

    Args:
        vf: 向量场 vf(t, z)
        z0: 初值
        t0, t1: 积分区间，要求 t1 > t0
        dt: 步长，要求 dt > 0
        guard: 每步之后调用的检查函数，可抛出异常中止积分

    Returns:
        (times, points)，points[k] 为 times[k] 处的状态

    Raises:
        IntegrationBlowupError: 向量场返回非有限值
    """
    times, points, _ = _rk4(vf, z0, t0, t1, dt, guard, keep_slopes=False)
    return times, points


def rk4_slopes(
    vf: VectorField,
    z0: np.ndarray,
    t0: float,
    t1: float,
    dt: float,
    guard: Optional[Callable[[float, np.ndarray], None]] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    RK4 积分并保留网格点上的向量场取值

    slopes[k] = vf(times[k], points[k])，取自每步的第一个阶段，末点多求值一次。

    Args:
        vf: 向量场 vf(t, z)
        z0: 初值
        t0, t1: 积分区间，要求 t1 > t0
        dt: 步长，要求 dt > 0
        guard: 每步之后调用的检查函数，可抛出异常中止积分

    Returns:
        (times, points, slopes)

    Raises:
        IntegrationBlowupError: 向量场返回非有限值
    """
    return _rk4(vf, z0, t0, t1, dt, guard, keep_slopes=True)


def _rk4(
    vf: VectorField,
    z0: np.ndarray,
    t0: float,
    t1: float,
    dt: float,
    guard: Optional[Callable[[float, np.ndarray], None]],
    keep_slopes: bool,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if not t1 > t0:
        raise ValueError(f"积分区间无效: t0={t0}, t1={t1}")
    if not dt > 0:
        raise ValueError(f"步长必须为正: dt={dt}")

    n_steps = int(math.ceil((t1 - t0) / dt - 1e-9))
    times = t0 + dt * np.arange(n_steps + 1, dtype=float)
    times[-1] = t1

    z = np.array(z0, dtype=float)
    points = np.empty((n_steps + 1, z.shape[0]))
    slopes = np.empty((n_steps + 1 if keep_slopes else 0, z.shape[0]))
    points[0] = z
    if guard is not None:
        guard(t0, z)

    def evaluate(t: float, state: np.ndarray, last_good: float) -> np.ndarray:
        k = np.asarray(vf(t, state), dtype=float)
        if not np.all(np.isfinite(k)):
            raise IntegrationBlowupError("向量场返回非有限值", last_good)
        return k

    for i in range(n_steps):
        t = times[i]
        h = times[i + 1] - t
        k1 = evaluate(t, z, t)
        if keep_slopes:
            slopes[i] = k1
        k2 = evaluate(t + 0.5 * h, z + 0.5 * h * k1, t)
        k3 = evaluate(t + 0.5 * h, z + 0.5 * h * k2, t)
        k4 = evaluate(t + h, z + h * k3, t)
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise IntegrationBlowupError("积分状态出现非有限值", t)
        if guard is not None:
            guard(times[i + 1], z)
        points[i + 1] = z

    if keep_slopes:
        slopes[-1] = evaluate(t1, z, t1)
    return times, points, slopes


def quasi_random(
    n: int, lower: Sequence[float], upper: Sequence[float], seed: Optional[int] = None
) -> np.ndarray:
    """
    在盒子 [lower, upper] 内生成 n 个准随机点（加扰 Halton 序列）

    Args:
        n: 点数
        lower, upper: 各维上下界
        seed: 随机种子，默认取配置值

    Returns:
        (n × d) 数组
    """
    lower_arr = np.asarray(lower, dtype=float)
    upper_arr = np.asarray(upper, dtype=float)
    d = lower_arr.shape[0]
    if d == 0:
        return np.zeros((n, 0))
    sampler = qmc.Halton(d=d, scramble=True, seed=config.seed if seed is None else seed)
    unit = sampler.random(n)
    return qmc.scale(unit, lower_arr, upper_arr) if np.all(upper_arr > lower_arr) else (
        lower_arr + unit * (upper_arr - lower_arr)
    )
