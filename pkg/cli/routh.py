"""
Routh 约化命令行入口

子命令:
    simulate      积分全系统，输出 CSV / JSON 轨迹
    reduce        约化并与全系统比较，输出 JSON 报告
    reconstruct   正则约化积分后重建全轨迹
    compare       全系统与 约化→重建 往返轨迹的比较
    check         运行不变性检验组
    list-systems  列出内置系统
"""

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np

from routh_reduction.core.calculus import ChartState, Trajectory
from routh_reduction.core.connection import (
    beta_mu_blocks,
    isotropy_contraction_defect,
    quotient_coords,
    structure_equation_defect,
)
from routh_reduction.core.lagrangian import (
    ConstraintClass,
    classify_constraint,
    integrate_full,
    solve_linear_constrained,
)
from routh_reduction.core.presymplectic import (
    PresymplecticPoint,
    pointwise_constraint_check,
    presymplectic_residual_along,
)
from routh_reduction.core.reconstruction import compare_trajectories, project_trajectory, reconstruct
from routh_reduction.core.routh import (
    Routhian,
    connection_change_check,
    dy_routhian_defect,
    g_regularity_test,
    gyro_force_full,
    integrate_reduced,
    reduce,
    regular_reduce,
    routhian_momentum,
)
from routh_reduction.core.symmetry import (
    as_momentum,
    check_equivariance,
    check_invariance,
    enforce_momentum,
    momentum_drift,
    momentum_map,
    sample_states,
)
from routh_reduction.systems import SystemBundle, get_system, get_system_descriptions, list_systems
from routh_reduction.utils.config import ScenarioConfig, config, load_config
from routh_reduction.utils.errors import (
    ChartSingularityError,
    ComparisonError,
    ConfigError,
    ConstraintViolationError,
    GaugeAnchorError,
    IntegrationBlowupError,
    KappaSolveError,
    NotGRegularError,
    NotInvariantError,
    QuotientMismatchError,
    SingularLagrangianError,
)
from routh_reduction.utils.logger import get_logger, log_duration, set_log_level

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_INTEGRATION = 3
EXIT_PRECONDITION = 4

MOMENTUM_TOLERANCE = 1e-8
COMPARE_TOLERANCE = 1e-5
CSV_FORMAT = "%.17g"

# 检验组阈值
CHECK_TOLERANCES = {
    "equivariance": 1e-7,
    "routhian_momentum": 1e-9,
    "gyroscopic_power": 1e-8,
    "structure_equation": 1e-6,
    "isotropy_contraction": 1e-6,
    "beta_mixed_block": 1e-8,
    "dy_routhian": 1e-6,
    "momentum_conservation": 1e-6,
    "connection_change": 1e-7,
}
CHECK_HORIZON = 1.0


def _version_tag() -> str:
    try:
        from routh_reduction import __version__

        return f"v{__version__}"
    except Exception:
        return "v?"


@dataclass
class Scenario:
    """一次运行的完整输入"""

    bundle: SystemBundle
    s0: ChartState
    mu: np.ndarray
    t0: float
    t1: float
    dt: float
    seed: int
    connection_name: Optional[str] = None

    @property
    def connection(self) -> Any:
        return self.bundle.connection(self.connection_name)


def _parse_vector(raw: str) -> List[float]:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise ConfigError(f"无法解析实数列表: {raw!r}")


def _pick(*values: Any) -> Any:
    """取第一个非 None 的值"""
    for value in values:
        if value is not None:
            return value
    return None


def resolve_scenario(args: argparse.Namespace) -> Scenario:
    """
    合并命令行参数、场景文件与系统默认值

    优先级：命令行 > 场景文件 > 系统默认值 / 全局配置

    Raises:
        ConfigError: 未指定系统、系统或参数不存在、初始状态维数错误
    """
    scenario = ScenarioConfig.from_file(args.config) if args.config else ScenarioConfig()
    name = _pick(args.system, scenario.system)
    if not name:
        raise ConfigError("未指定系统，请使用 --system 或场景文件中的 system 键")
    try:
        bundle = get_system(name, **scenario.params)
    except KeyError as e:
        raise ConfigError(str(e.args[0]) if e.args else str(e))

    default = bundle.default_state
    q0 = _pick(scenario.initial_q, None if default is None else default.q)
    v0 = _pick(scenario.initial_v, None if default is None else default.v)
    if q0 is None or v0 is None:
        raise ConfigError(f"系统 {name} 没有默认初始状态，请在场景文件中给出 initial.q 与 initial.v")
    try:
        s0 = ChartState(bundle.sys.chart, np.asarray(q0, dtype=float), np.asarray(v0, dtype=float))
    except ValueError as e:
        raise ConfigError(str(e))

    mu_raw = _parse_vector(args.mu) if args.mu else scenario.mu
    if mu_raw is None:
        mu = bundle.default_mu if bundle.default_mu is not None else momentum_map(bundle.sys, bundle.action, s0).mu
    else:
        mu = np.asarray(mu_raw, dtype=float)
    if mu.shape[0] != bundle.action.group.dim:
        raise ConfigError(f"动量分量数 {mu.shape[0]} 与群维数 {bundle.action.group.dim} 不一致")

    t0 = float(_pick(args.t0, scenario.t0, config.t0))
    t1 = float(_pick(args.t1, scenario.t1, bundle.horizon))
    dt = float(_pick(args.dt, scenario.dt, config.dt))
    if dt <= 0 or t1 <= t0:
        raise ConfigError(f"积分区间无效: t0={t0}, t1={t1}, dt={dt}")
    seed = int(_pick(args.seed, scenario.seed, config.seed))
    config.seed = seed

    connection_name = getattr(args, "connection", None)
    if connection_name is not None and connection_name not in bundle.connections:
        available = ", ".join(bundle.connections)
        raise ConfigError(f"联络 '{connection_name}' 不存在。可用联络: {available}")

    return Scenario(bundle, s0, np.asarray(mu, dtype=float), t0, t1, dt, seed, connection_name)


def trajectory_table(traj: Trajectory, channels: Sequence[str]) -> Tuple[List[str], np.ndarray]:
    """
    轨迹展开成表格

    列顺序固定: t, 各坐标, 各坐标速度（前缀 d）, 各诊断通道（多分量通道加下标 _1, _2, ...）
    """
    names = list(traj.chart.coord_names)
    header = ["t"] + names + [f"d{name}" for name in names]
    blocks = [traj.times.reshape(-1, 1), traj.positions, traj.velocities]
    for channel in channels:
        values = np.asarray(traj.channel(channel), dtype=float).reshape(len(traj), -1)
        if values.shape[1] == 1:
            header.append(channel)
        else:
            header.extend(f"{channel}_{i + 1}" for i in range(values.shape[1]))
        blocks.append(values)
    return header, np.hstack(blocks)


def write_table(header: List[str], table: np.ndarray, out: Optional[str], fmt: str) -> None:
    """按 csv（17 位有效数字）或 json 写出表格，out 为空时写到 stdout"""
    stream: TextIO = open(out, "w", encoding="utf-8", newline="") if out else sys.stdout
    try:
        if fmt == "json":
            json.dump({name: table[:, i].tolist() for i, name in enumerate(header)}, stream, indent=2)
            stream.write("\n")
        else:
            np.savetxt(stream, table, fmt=CSV_FORMAT, delimiter=",", header=",".join(header), comments="")
    finally:
        if out:
            stream.close()


def write_report(report: Dict[str, Any], out: Optional[str]) -> None:
    text = json.dumps(report, indent=2, ensure_ascii=False, default=_json_default)
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    raise TypeError(f"无法序列化 {type(value).__name__}")


def _sup(values: Any) -> float:
    return float(np.max(np.abs(np.asarray(values, dtype=float)), initial=0.0))


def _enforced_state(scenario: Scenario) -> ChartState:
    """把初始状态投影到 J_L = μ 上，剩余偏差超过 1e-8 时视为前置条件失败"""
    bundle = scenario.bundle
    corrected, mismatch = enforce_momentum(bundle.sys, bundle.action, scenario.s0, scenario.mu)
    if mismatch > MOMENTUM_TOLERANCE:
        raise ConstraintViolationError(f"初始状态无法投影到动量水平集 J_L = {scenario.mu.tolist()}", mismatch)
    return corrected


# ==================== simulate ====================


def cmd_simulate(args: argparse.Namespace) -> int:
    """积分全系统并输出轨迹"""
    scenario = resolve_scenario(args)
    bundle = scenario.bundle
    traj = integrate_full(bundle.sys, scenario.s0, scenario.t0, scenario.t1, scenario.dt, bundle.action)
    header, table = trajectory_table(traj, ["E_L", "J_L", "force_power"])
    write_table(header, table, args.out, args.format)
    logger.info(f"{bundle.name}: 输出 {table.shape[0]} 行 × {table.shape[1]} 列")
    return EXIT_OK


# ==================== reduce ====================


def _reduced_start(projected: Trajectory, n: int, k: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    first = projected.states[0]
    xi0 = np.asarray(projected.channel("xi_tilde"), dtype=float)[0]
    return first.q[:n], first.v[:n], first.q[n : n + k], np.atleast_1d(xi0)


def reduce_and_compare(scenario: Scenario) -> Dict[str, Any]:
    """
    约化并与全系统比较

    G-正则时积分正则约化方程；否则给出逐点约束检验摘要，
    约束关于纤维线性时再走线性约束路径并与全系统交叉验证。
    """
    bundle = scenario.bundle
    conn = scenario.connection
    s0 = _enforced_state(scenario)

    with log_duration(logger, f"{bundle.name} 全系统积分") as timing:
        full = integrate_full(bundle.sys, s0, scenario.t0, scenario.t1, scenario.dt, bundle.action)
    full_runtime = timing["elapsed"]

    reduced = reduce(bundle.sys, bundle.action, conn, scenario.mu)
    regularity = g_regularity_test(reduced)
    projected = project_trajectory(conn, full, scenario.mu)
    n, k = reduced.n, reduced.k
    x0, xdot0, y0, xi0 = _reduced_start(projected, n, k)

    report: Dict[str, Any] = {
        "system": bundle.name,
        "connection": conn.name,
        "mu": scenario.mu.tolist(),
        "t0": scenario.t0,
        "t1": scenario.t1,
        "dt": scenario.dt,
        "g_regular": regularity.is_regular,
        "worst_condition": regularity.worst_condition,
    }

    if regularity.is_regular:
        rr = regular_reduce(reduced)
        with log_duration(logger, f"{bundle.name} 正则约化积分") as timing:
            red = integrate_reduced(rr, x0, xdot0, y0, scenario.t0, scenario.t1, scenario.dt)
        reduced_runtime = timing["elapsed"]
        comparison = compare_trajectories(red, projected)
        report.update(
            route="regular",
            sup_error=comparison.sup_error,
            per_channel=comparison.per_channel,
            momentum_drift={
                "full": momentum_drift(full).tolist(),
                "reduced": _sup(red.channel("momentum_constraint")),
            },
            presymplectic_residual_sup=_sup(presymplectic_residual_along(rr, red)),
        )
    else:
        fsys = reduced.fibred
        m0 = np.concatenate([y0, xi0])
        on_constraint = pointwise_constraint_check(fsys, PresymplecticPoint(x0, xdot0, m0))
        off_constraint = pointwise_constraint_check(fsys, PresymplecticPoint(x0, xdot0 + 0.1, m0))
        constraint_class = classify_constraint(fsys)
        report.update(
            route="pointwise",
            constraint_class=constraint_class.value,
            pointwise_check={"initial": on_constraint.to_dict(), "perturbed": off_constraint.to_dict()},
            momentum_drift={"full": momentum_drift(full).tolist()},
        )
        reduced_runtime = 0.0
        if constraint_class == ConstraintClass.LINEAR:
            with log_duration(logger, f"{bundle.name} 线性约束积分") as timing:
                linear = solve_linear_constrained(fsys, x0, xdot0, scenario.t0, scenario.t1, scenario.dt, m0)
            reduced_runtime = timing["elapsed"]
            chart = reduced.reduced_chart
            on_quotient = Trajectory.from_arrays(
                chart, linear.times, linear.positions[:, : n + k], linear.velocities[:, : n + k]
            )
            comparison = compare_trajectories(on_quotient, projected)
            report.update(
                route="linear",
                sup_error=comparison.sup_error,
                per_channel=comparison.per_channel,
                presymplectic_residual_sup=_sup(presymplectic_residual_along(fsys, linear)),
            )
            report["momentum_drift"]["reduced"] = _sup(linear.channel("alpha"))

    report["runtime"] = {
        "full_s": full_runtime,
        "reduced_s": reduced_runtime,
        "speedup": full_runtime / reduced_runtime if reduced_runtime > 0 else None,
    }
    logger.info(f"{bundle.name}: 约化路径 {report['route']}, sup_error={report.get('sup_error')}")
    return report


def cmd_reduce(args: argparse.Namespace) -> int:
    scenario = resolve_scenario(args)
    write_report(reduce_and_compare(scenario), args.out)
    return EXIT_OK


# ==================== reconstruct / compare ====================


def reconstruct_scenario(scenario: Scenario) -> Tuple[ChartState, Trajectory]:
    """
    从投影后的初始状态积分正则约化方程并重建

    Returns:
        (满足 J_L = μ 的初始状态, 重建的全轨迹)
    """
    bundle = scenario.bundle
    conn = scenario.connection
    s0 = _enforced_state(scenario)
    rr = regular_reduce(reduce(bundle.sys, bundle.action, conn, scenario.mu))
    point = quotient_coords(conn, s0, scenario.mu)
    red = integrate_reduced(
        rr,
        np.atleast_1d(point.x),
        np.atleast_1d(point.xdot),
        np.atleast_1d(point.y),
        scenario.t0,
        scenario.t1,
        scenario.dt,
    )
    return s0, reconstruct(conn, red, s0.q, bundle.sys)


def cmd_reconstruct(args: argparse.Namespace) -> int:
    scenario = resolve_scenario(args)
    _, traj = reconstruct_scenario(scenario)
    header, table = trajectory_table(traj, ["E_L", "J_L", "projection_defect", "connection_defect"])
    write_table(header, table, args.out, args.format)
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    scenario = resolve_scenario(args)
    bundle = scenario.bundle
    s0, rebuilt = reconstruct_scenario(scenario)
    full = integrate_full(bundle.sys, s0, scenario.t0, scenario.t1, scenario.dt, bundle.action)
    comparison = compare_trajectories(full, rebuilt)
    tolerance = args.tolerance
    passed = comparison.sup_error <= tolerance
    report = {
        "system": bundle.name,
        "connection": scenario.connection.name,
        "tolerance": tolerance,
        "passed": passed,
        **comparison.to_dict(),
        "momentum_drift": {"full": momentum_drift(full).tolist(), "reconstructed": momentum_drift(rebuilt).tolist()},
    }
    write_report(report, args.out)
    if not passed:
        logger.warning(f"{bundle.name}: 往返误差 {comparison.sup_error:.3e} 超过阈值 {tolerance:.1e}")
        return EXIT_FAILED
    return EXIT_OK


# ==================== check ====================


def _entry(value: float, tolerance: float) -> Dict[str, Any]:
    return {"value": value, "tolerance": tolerance, "passed": bool(value <= tolerance)}


def check_battery(bundle: SystemBundle, seed: int) -> Dict[str, Any]:
    """
    对一个系统运行全部不变性检验

    Returns:
        {"system", "passed", "checks": {名称: {value, tolerance, passed, ...}}}
    """
    sys_, action, conn = bundle.sys, bundle.action, bundle.default_connection
    mu = as_momentum(bundle.default_mu if bundle.default_mu is not None else np.zeros(action.group.dim))
    checks: Dict[str, Dict[str, Any]] = {}

    invariance = check_invariance(sys_, action, seed=seed)
    checks["invariance"] = {**invariance.to_dict(), "passed": invariance.passed}
    checks["equivariance"] = _entry(check_equivariance(sys_, action, seed=seed), CHECK_TOLERANCES["equivariance"])

    states = sample_states(sys_.chart, config.n_samples, seed)
    routhian = Routhian(sys_, conn, mu)
    checks["routhian_momentum"] = _entry(
        max(
            _sup(routhian_momentum(routhian, s).mu - (momentum_map(sys_, action, s).mu - mu.mu))
            for s in states
        ),
        CHECK_TOLERANCES["routhian_momentum"],
    )
    checks["gyroscopic_power"] = _entry(
        max(abs(float(gyro_force_full(routhian, s) @ s.v)) for s in states), CHECK_TOLERANCES["gyroscopic_power"]
    )
    others = states[1:] + states[:1]
    checks["structure_equation"] = _entry(
        max(structure_equation_defect(conn, s.q, s.v, w.v) for s, w in zip(states, others)),
        CHECK_TOLERANCES["structure_equation"],
    )
    checks["isotropy_contraction"] = _entry(
        max(isotropy_contraction_defect(conn, mu, s.q) for s in states), CHECK_TOLERANCES["isotropy_contraction"]
    )

    reduced = reduce(sys_, action, conn, mu, check=False)
    reduced_states = sample_states(reduced.total_chart, config.n_samples, seed)
    mixed, dy = 0.0, 0.0
    for s in reduced_states:
        x, xdot, y, _, xi = reduced.unpack(s)
        mixed = max(mixed, _sup(beta_mu_blocks(conn, mu, x, y).mixed))
        dy = max(dy, dy_routhian_defect(reduced, x, xdot, y, xi))
    checks["beta_mixed_block"] = _entry(mixed, CHECK_TOLERANCES["beta_mixed_block"])
    checks["dy_routhian"] = _entry(dy, CHECK_TOLERANCES["dy_routhian"])

    regularity = g_regularity_test(reduced)
    checks["g_regular"] = {
        **regularity.to_dict(),
        "expected": bundle.g_regular,
        "passed": bundle.g_regular is None or regularity.is_regular == bundle.g_regular,
    }

    if bundle.default_state is not None:
        horizon = min(bundle.horizon, CHECK_HORIZON)
        traj = integrate_full(sys_, bundle.default_state, 0.0, horizon, config.dt, action)
        checks["momentum_conservation"] = _entry(
            _sup(momentum_drift(traj)), CHECK_TOLERANCES["momentum_conservation"]
        )

    if len(bundle.connections) > 1:
        names = list(bundle.connections)
        checks["connection_change"] = {
            **_entry(
                connection_change_check(
                    sys_, action, bundle.connections[names[0]], bundle.connections[names[1]], mu
                ),
                CHECK_TOLERANCES["connection_change"],
            ),
            "connections": names[:2],
        }

    passed = all(entry["passed"] for entry in checks.values())
    failed = [name for name, entry in checks.items() if not entry["passed"]]
    if failed:
        logger.warning(f"{bundle.name}: 未通过的检验 {', '.join(failed)}")
    else:
        logger.info(f"{bundle.name}: 全部 {len(checks)} 项检验通过")
    return {"system": bundle.name, "passed": passed, "checks": checks}


def cmd_check(args: argparse.Namespace) -> int:
    if args.all:
        seed = int(_pick(args.seed, config.seed))
        config.seed = seed
        names = list_systems()
        with ThreadPoolExecutor(max_workers=max(1, config.max_workers)) as pool:
            results = list(pool.map(lambda name: check_battery(get_system(name), seed), names))
        report = {"passed": all(r["passed"] for r in results), "systems": {r["system"]: r for r in results}}
    else:
        scenario = resolve_scenario(args)
        report = check_battery(scenario.bundle, scenario.seed)
    write_report(report, args.out)
    return EXIT_OK if report["passed"] else EXIT_FAILED


# ==================== list-systems ====================


def cmd_list_systems(args: argparse.Namespace) -> int:
    print("\n可用的内置系统:")
    print("-" * 50)
    for name, description in get_system_descriptions().items():
        print(f"  {name:12} - {description}")
    print()
    return EXIT_OK


# ==================== 入口 ====================

EXIT_CODES: List[Tuple[Tuple[type, ...], int]] = [
    ((ConfigError,), EXIT_CONFIG),
    ((IntegrationBlowupError, ChartSingularityError, SingularLagrangianError, KappaSolveError), EXIT_INTEGRATION),
    (
        (ConstraintViolationError, GaugeAnchorError, QuotientMismatchError, NotGRegularError, NotInvariantError),
        EXIT_PRECONDITION,
    ),
    ((ComparisonError,), EXIT_FAILED),
]


def exit_code_for(error: Exception) -> Optional[int]:
    for kinds, code in EXIT_CODES:
        if isinstance(error, kinds):
            return code
    return None


def _add_run_options(parser: argparse.ArgumentParser, trajectory_output: bool) -> None:
    parser.add_argument("--system", "-s", help="内置系统名称")
    parser.add_argument("--config", "-c", help="场景文件路径（key = value）")
    parser.add_argument("--t0", type=float, help="起始时刻")
    parser.add_argument("--t1", type=float, help="终止时刻，默认取系统的默认时长")
    parser.add_argument("--dt", type=float, help="积分步长")
    parser.add_argument("--mu", help="动量值，逗号分隔")
    parser.add_argument("--seed", type=int, help="准随机采样种子")
    parser.add_argument("--connection", help="主联络名称，默认取系统的默认联络")
    parser.add_argument("--out", "-o", help="输出文件，默认 stdout")
    if trajectory_output:
        parser.add_argument("--format", choices=["csv", "json"], default="csv", help="输出格式")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description=f"Routh Reduction 命令行 {_version_tag()}",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
示例:
  # 列出内置系统
  routh list-systems

  # 积分重陀螺并输出 CSV
  routh simulate --system heavy-top --t1 5 --out heavy_top.csv

  # 刚体约化并与全系统比较
  routh reduce --system rigid-body --mu 0,0,2

  # 使用场景文件
  routh simulate --config scenario.txt

  # 对全部内置系统运行检验组
  routh check --all
        """,
    )
    parser.add_argument("--settings", help="JSON 全局配置文件")
    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default=None,
        help="日志级别",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command")

    simulate = subparsers.add_parser("simulate", help="积分全系统")
    _add_run_options(simulate, trajectory_output=True)
    simulate.set_defaults(handler=cmd_simulate)

    reduce_cmd = subparsers.add_parser("reduce", help="约化并与全系统比较")
    _add_run_options(reduce_cmd, trajectory_output=False)
    reduce_cmd.set_defaults(handler=cmd_reduce)

    reconstruct_cmd = subparsers.add_parser("reconstruct", help="正则约化积分并重建全轨迹")
    _add_run_options(reconstruct_cmd, trajectory_output=True)
    reconstruct_cmd.set_defaults(handler=cmd_reconstruct)

    compare = subparsers.add_parser("compare", help="全系统与重建轨迹的比较")
    _add_run_options(compare, trajectory_output=False)
    compare.add_argument("--tolerance", type=float, default=COMPARE_TOLERANCE, help="最大允许误差")
    compare.set_defaults(handler=cmd_compare)

    check = subparsers.add_parser("check", help="运行不变性检验组")
    _add_run_options(check, trajectory_output=False)
    check.add_argument("--all", action="store_true", help="并发检验全部内置系统")
    check.set_defaults(handler=cmd_check)

    list_cmd = subparsers.add_parser("list-systems", help="列出内置系统")
    list_cmd.set_defaults(handler=cmd_list_systems)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """命令行入口"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.settings:
        load_config(args.settings)
    if args.log_level:
        set_log_level(args.log_level)

    handler: Optional[Callable[[argparse.Namespace], int]] = getattr(args, "handler", None)
    if handler is None:
        parser.print_help()
        return EXIT_OK

    try:
        return handler(args)
    except Exception as e:
        code = exit_code_for(e)
        if code is None:
            raise
        logger.error(f"{args.command} 失败: {e}")
        print(f"错误: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
