"""预辛形式与逐点约束检验测试"""

import numpy as np
import pytest

from routh_reduction.core.calculus import Chart
from routh_reduction.core.lagrangian import AnalyticPartials, FibredSystem, LagrangianSystem, integrate_full
from routh_reduction.core.presymplectic import (
    FormProvenance,
    PresymplecticPoint,
    energy,
    lagrange_poincare_residual,
    legendre_f1,
    pointwise_constraint_check,
    presymplectic_form,
    presymplectic_residual,
    presymplectic_residual_along,
)
from routh_reduction.core.reconstruction import project_trajectory
from routh_reduction.core.routh import integrate_reduced, reduce, regular_reduce
from routh_reduction.systems import get_system


def multiplier_system() -> FibredSystem:
    """L = ½ẋ² − ½x² + y(ẋ − 1)，约束 ẋ = 1"""
    chart = Chart("xy", ("x", "y"))

    def L(s):
        return 0.5 * s.v[0] ** 2 - 0.5 * s.q[0] ** 2 + s.q[1] * (s.v[0] - 1.0)

    partials = AnalyticPartials(
        dL_dq=lambda s: np.array([-s.q[0], s.v[0] - 1.0]),
        dL_dv=lambda s: np.array([s.v[0] + s.q[1], 0.0]),
        hessian_vv=lambda s: np.diag([1.0, 0.0]),
        mixed_vq=lambda s: np.array([[0.0, 1.0], [0.0, 0.0]]),
    )
    return FibredSystem(LagrangianSystem(chart, L, partials=partials, name="multiplier"), 1)


def rigid_body_regular():
    bundle = get_system("rigid-body")
    reduced = reduce(bundle.sys, bundle.action, bundle.default_connection, bundle.default_mu)
    return bundle, regular_reduce(reduced, n_samples=10)


class TestPresymplecticPoint:
    """T_MN 中的点"""

    def test_dimension_checks(self):
        with pytest.raises(ValueError, match="底速度"):
            PresymplecticPoint([0.0, 1.0], [1.0], [])
        with pytest.raises(ValueError, match="切向量"):
            PresymplecticPoint([0.0], [1.0], [2.0], zdot=np.zeros(2))

    def test_from_z(self):
        point = PresymplecticPoint.from_z(np.array([0.1, 0.2, 0.3, 0.4]), 1)
        np.testing.assert_array_equal(point.m, [0.3, 0.4])
        np.testing.assert_array_equal(point.z, [0.1, 0.2, 0.3, 0.4])


class TestMultiplierSystem:
    """乘子系统：ω = d(ẋ + y) ∧ dx，E = ½ẋ² + ½x² + y"""

    def test_energy(self):
        point = PresymplecticPoint([0.3], [1.0], [2.0])
        assert energy(multiplier_system(), point) == pytest.approx(0.5 + 0.045 + 2.0, abs=1e-9)

    def test_legendre_f1(self):
        """𝔽₁L = ẋ + y"""
        np.testing.assert_allclose(legendre_f1(multiplier_system(), PresymplecticPoint([0.3], [1.5], [2.0])), [3.5])

    def test_form_has_one_dimensional_kernel(self):
        form = presymplectic_form(multiplier_system(), PresymplecticPoint([0.3], [1.0], [2.0]))
        np.testing.assert_allclose(form.matrix, -form.matrix.T, atol=1e-12)
        assert form.rank == 2
        assert form.kernel_dim == 1
        assert form.provenance == FormProvenance.PULLBACK_CANONICAL

    def test_solvable_on_constraint(self):
        """ẋ = 1 时可解，流方向 (ẋ, ẍ + ẏ) = (1, −x)"""
        report = pointwise_constraint_check(multiplier_system(), PresymplecticPoint([0.3], [1.0], [2.0]))
        assert report.solvable
        assert report.residual <= 1e-8
        assert report.zdot[0] == pytest.approx(1.0, abs=1e-8)
        assert report.zdot[1] + report.zdot[2] == pytest.approx(-0.3, abs=1e-8)

    def test_unsolvable_off_constraint(self):
        """ẋ = 2 时最小二乘残差为 |ẋ − 1|/√2"""
        report = pointwise_constraint_check(multiplier_system(), PresymplecticPoint([0.3], [2.0], [2.0]))
        assert not report.solvable
        assert report.residual == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-6)
        assert report.to_dict()["kernel_dim"] == 1

    def test_residual_along_true_motion(self):
        """ẋ = 1 时 ẍ = 0，ẏ = −x"""
        fsys = multiplier_system()
        x, y = 0.3, 2.0
        zdot = np.array([1.0, 0.0, -x])
        residual = presymplectic_residual(fsys, PresymplecticPoint([x], [1.0], [y], zdot))
        np.testing.assert_allclose(residual, np.zeros(3), atol=1e-7)

    def test_residual_requires_tangent(self):
        with pytest.raises(ValueError, match="切向量"):
            presymplectic_residual(multiplier_system(), PresymplecticPoint([0.3], [1.0], [2.0]))


class TestRigidBodySphere:
    """刚体约化到 S²：ω = β^μ，E = −𝓡̄^μ"""

    def test_form_is_beta(self):
        bundle, rr = rigid_body_regular()
        form = presymplectic_form(rr, PresymplecticPoint([], [], [1.1, 0.3]))
        assert form.provenance == FormProvenance.BETA
        assert form.kernel_dim == 0
        assert form.matrix[0, 1] == pytest.approx(-bundle.params["mu"] * np.sin(1.1), abs=1e-6)

    def test_flow_direction(self):
        """逐点可解，解就是约化速度"""
        bundle, rr = rigid_body_regular()
        theta, psi = 1.1, 0.3
        report = pointwise_constraint_check(rr, PresymplecticPoint([], [], [theta, psi]))
        assert report.solvable
        expected = bundle.reference_formulas["reduced_velocity"](theta, psi, bundle.params["mu"])
        np.testing.assert_allclose(report.zdot, expected, atol=1e-6)

    def test_residual_along_reduced_trajectory(self):
        bundle, rr = rigid_body_regular()
        traj = integrate_reduced(rr, np.zeros(0), np.zeros(0), bundle.default_state.q[1:], 0.0, 1.0, 1e-3)
        residual = presymplectic_residual_along(rr, traj)
        assert residual.shape == (len(traj), 2)
        assert float(np.max(np.abs(residual))) <= 1e-6


class TestHeavyTop:
    """重陀螺：n = 2，无纤维"""

    def test_residual_along_reduced_trajectory(self):
        bundle = get_system("heavy-top")
        s0 = bundle.default_state
        rr = regular_reduce(
            reduce(bundle.sys, bundle.action, bundle.default_connection, bundle.default_mu), n_samples=10
        )
        traj = integrate_reduced(rr, s0.q[1:], s0.v[1:], np.zeros(0), 0.0, 0.5, 1e-3)
        residual = presymplectic_residual_along(rr, traj)
        assert residual.shape == (len(traj), 4)
        assert float(np.max(np.abs(residual))) <= 1e-5

    def test_regular_point_is_solvable(self):
        bundle = get_system("heavy-top")
        rr = regular_reduce(
            reduce(bundle.sys, bundle.action, bundle.default_connection, bundle.default_mu), n_samples=10
        )
        report = pointwise_constraint_check(rr, PresymplecticPoint([1.0, 0.0], [0.0, 5.0], []))
        assert report.solvable
        assert report.kernel_dim == 0
        np.testing.assert_allclose(report.zdot[:2], [0.0, 5.0], atol=1e-6)


class TestLagrangePoincare:
    """局部平凡化下的 Lagrange–Poincaré 方程"""

    def test_rigid_body_euler_equations(self):
        """竖直方程即 Euler 方程 Π̇ = Π × Ω"""
        bundle = get_system("rigid-body")
        conn = bundle.default_connection
        reduced = reduce(bundle.sys, bundle.action, conn, bundle.default_mu)
        full = integrate_full(bundle.sys, bundle.default_state, 0.0, 1.0, 1e-3)
        projected = project_trajectory(conn, full)
        vertical, horizontal = lagrange_poincare_residual(reduced, projected)
        assert horizontal.shape == (len(full), 0)
        assert float(np.max(np.abs(vertical))) <= 1e-5

    def test_heavy_top(self):
        bundle = get_system("heavy-top", omega_B=0.02)
        conn = bundle.default_connection
        reduced = reduce(bundle.sys, bundle.action, conn, bundle.default_mu)
        full = integrate_full(bundle.sys, bundle.default_state, 0.0, 0.5, 1e-3)
        vertical, horizontal = lagrange_poincare_residual(reduced, project_trajectory(conn, full))
        assert float(np.max(np.abs(vertical))) <= 1e-4
        assert float(np.max(np.abs(horizontal))) <= 1e-4
