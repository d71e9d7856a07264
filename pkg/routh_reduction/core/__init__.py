"""核心模块 - 拉格朗日系统、对称性、联络、Routh 约化、重建与预辛分析"""

from routh_reduction.core.calculus import Chart, ChartState, Trajectory
from routh_reduction.core.connection import (
    PrincipalConnection,
    QuotientChart,
    connection_from_coefficients,
    coordinate_connection,
    mechanical_connection,
)
from routh_reduction.core.lagrangian import (
    ConstraintClass,
    FibredSystem,
    ForceTerm,
    KineticForm,
    LagrangianSystem,
    classify_constraint,
    integrate_full,
    solve_linear_constrained,
)
from routh_reduction.core.presymplectic import (
    PresymplecticPoint,
    lagrange_poincare_residual,
    pointwise_constraint_check,
    presymplectic_form,
    presymplectic_residual,
)
from routh_reduction.core.reconstruction import (
    compare_trajectories,
    multiplier_quadrature,
    project_trajectory,
    reconstruct,
)
from routh_reduction.core.routh import (
    ReducedSystem,
    RegularReducedSystem,
    Routhian,
    g_regularity_test,
    integrate_reduced,
    reduce,
    regular_reduce,
)
from routh_reduction.core.symmetry import GroupAction, LieGroup, MomentumValue, check_invariance, momentum_map

__all__ = [
    "Chart",
    "ChartState",
    "ConstraintClass",
    "FibredSystem",
    "ForceTerm",
    "GroupAction",
    "KineticForm",
    "LagrangianSystem",
    "LieGroup",
    "MomentumValue",
    "PresymplecticPoint",
    "PrincipalConnection",
    "QuotientChart",
    "ReducedSystem",
    "RegularReducedSystem",
    "Routhian",
    "Trajectory",
    "check_invariance",
    "classify_constraint",
    "compare_trajectories",
    "connection_from_coefficients",
    "coordinate_connection",
    "g_regularity_test",
    "integrate_full",
    "integrate_reduced",
    "lagrange_poincare_residual",
    "mechanical_connection",
    "momentum_map",
    "multiplier_quadrature",
    "pointwise_constraint_check",
    "presymplectic_form",
    "presymplectic_residual",
    "project_trajectory",
    "reconstruct",
    "reduce",
    "regular_reduce",
    "solve_linear_constrained",
]
