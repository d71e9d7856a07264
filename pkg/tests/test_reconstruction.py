"""重建与轨迹比较测试"""

import numpy as np
import pytest

from routh_reduction.core.calculus import Chart, Trajectory
from routh_reduction.core.lagrangian import integrate_full
from routh_reduction.core.reconstruction import (
    compare_trajectories,
    horizontal_lift_curve,
    project_trajectory,
    reconstruct,
    solve_group_ode,
)
from routh_reduction.core.routh import integrate_reduced, reduce, regular_reduce
from routh_reduction.core.symmetry import ActionSide, LieGroup
from routh_reduction.systems import get_system
from routh_reduction.utils.errors import ComparisonError, GaugeAnchorError


class TestGroupODE:
    """群 ODE"""

    def test_abelian_quadrature(self):
        times = np.linspace(0.0, 2.0, 21)
        xis = np.column_stack([np.full(21, 0.5), times])
        g = solve_group_ode(LieGroup.abelian(2), times, xis, g_a=np.array([1.0, 0.0]))
        np.testing.assert_allclose(g[:, 0], 1.0 + 0.5 * times, atol=1e-12)
        np.testing.assert_allclose(g[:, 1], 0.5 * times**2, atol=1e-12)

    @pytest.mark.parametrize("side", [ActionSide.RIGHT, ActionSide.LEFT])
    def test_so3_constant_velocity(self, side):
        """ξ 为常数时 g(t) = exp(tξ)"""
        group = LieGroup.so3()
        times = np.linspace(0.0, 1.0, 1001)
        xi = np.array([0.3, -0.8, 1.1])
        g = solve_group_ode(group, times, np.tile(xi, (len(times), 1)), side)
        for i in (250, 1000):
            np.testing.assert_allclose(g[i], group.exp(times[i] * xi), atol=1e-10)
        assert max(group.defect(element) for element in g) <= 1e-12

    def test_single_point(self):
        group = LieGroup.so3()
        g = solve_group_ode(group, np.array([0.0]), np.zeros((1, 3)))
        np.testing.assert_array_equal(g[0], np.eye(3))


class TestHorizontalLiftCurve:
    """底曲线的水平提升"""

    def test_heavy_top_phase_drift(self):
        """θ 固定、ψ̇ 恒定时 φ(t) = −(I₃cosθ/ρ_φφ)ψ̇ t"""
        bundle = get_system("heavy-top")
        conn = bundle.connection("mechanical")
        times = np.linspace(0.0, 1.0, 101)
        x = np.column_stack([np.full(101, 1.0), 2.0 * times])
        xdot = np.tile([0.0, 2.0], (101, 1))
        q = horizontal_lift_curve(conn, times, x, xdot, np.array([0.0, 1.0, 0.0]))
        rate = bundle.reference_formulas["horizontal_phi_dot"](1.0, 2.0)
        np.testing.assert_allclose(q[:, 0], rate * times, atol=1e-10)
        np.testing.assert_allclose(q[:, 2], 2.0 * times, atol=1e-10)

    def test_flat_lift_keeps_gauge(self):
        bundle = get_system("heavy-top")
        times = np.linspace(0.0, 1.0, 11)
        x = np.column_stack([1.0 + 0.1 * times, times])
        xdot = np.tile([0.1, 1.0], (11, 1))
        q = horizontal_lift_curve(bundle.connection("flat"), times, x, xdot, np.array([0.4, 1.0, 0.0]))
        np.testing.assert_allclose(q[:, 0], 0.4, atol=1e-12)

    def test_anchor_mismatch(self):
        bundle = get_system("heavy-top")
        times = np.linspace(0.0, 1.0, 11)
        x = np.column_stack([np.full(11, 1.0), times])
        with pytest.raises(GaugeAnchorError):
            horizontal_lift_curve(bundle.default_connection, times, x, np.zeros((11, 2)), np.array([0.0, 1.5, 0.0]))


class TestReconstruct:
    """重建"""

    def test_projection_then_reconstruction(self):
        """全轨迹投影后再重建回到原轨迹"""
        bundle = get_system("heavy-top", omega_B=0.02)
        conn = bundle.default_connection
        full = integrate_full(bundle.sys, bundle.default_state, 0.0, 1.0, 1e-3, bundle.action)
        projected = project_trajectory(conn, full, bundle.default_mu)
        assert projected.chart.coord_names == ("theta", "psi")
        rebuilt = reconstruct(conn, projected, bundle.default_state.q, bundle.sys)
        report = compare_trajectories(rebuilt, full)
        assert report.sup_error <= 1e-6
        assert float(np.max(rebuilt.channel("projection_defect"))) <= 1e-8
        drift = rebuilt.channel("J_L") - bundle.default_mu
        assert float(np.max(np.abs(drift))) <= 1e-6

    def test_heavy_top_from_reduced(self):
        bundle = get_system("heavy-top", omega_B=0.02)
        conn = bundle.default_connection
        s0 = bundle.default_state
        rr = regular_reduce(reduce(bundle.sys, bundle.action, conn, bundle.default_mu), n_samples=10)
        reduced = integrate_reduced(rr, s0.q[1:], s0.v[1:], np.zeros(0), 0.0, 1.0, 1e-3)
        full = integrate_full(bundle.sys, s0, 0.0, 1.0, 1e-3)
        rebuilt = reconstruct(conn, reduced, s0.q)
        assert compare_trajectories(rebuilt, full).sup_error <= 1e-5
        assert float(np.max(rebuilt.channel("connection_defect"))) <= 1e-4

    def test_rigid_body_from_reduced(self):
        """SO(3) 左作用：ġ 由空间角速度给出，群元保持正交"""
        bundle = get_system("rigid-body")
        conn = bundle.default_connection
        s0 = bundle.default_state
        rr = regular_reduce(reduce(bundle.sys, bundle.action, conn, bundle.default_mu), n_samples=10)
        reduced = integrate_reduced(rr, np.zeros(0), np.zeros(0), s0.q[1:], 0.0, 2.0, 1e-3)
        full = integrate_full(bundle.sys, s0, 0.0, 2.0, 1e-3)
        rebuilt = reconstruct(conn, reduced, s0.q, bundle.sys)
        report = compare_trajectories(rebuilt, full, include_velocities=True)
        assert report.sup_error <= 1e-5
        assert float(np.max(rebuilt.channel("group_defect"))) <= 1e-12
        momentum = rebuilt.channel("J_L")
        np.testing.assert_allclose(momentum, np.tile(bundle.default_mu, (len(rebuilt), 1)), atol=1e-6)

    @pytest.mark.parametrize("name,direction", [("heavy-top", [1.0]), ("rigid-body", [0.0, 0.0, 1.0])])
    def test_gauge_covariance(self, name, direction):
        """锚点换成 h·q_a（h ∈ G_μ）时重建轨迹为原轨迹在 h 下的像"""
        bundle = get_system(name)
        conn = bundle.default_connection
        action = conn.action
        s0 = bundle.default_state
        full = integrate_full(bundle.sys, s0, 0.0, 0.5, 1e-3)
        projected = project_trajectory(conn, full, bundle.default_mu)
        h = action.group.exp(0.7 * np.asarray(direction))
        rebuilt = reconstruct(conn, projected, s0.q)
        moved = reconstruct(conn, projected, action.act(h, s0.q))
        expected = Trajectory.from_arrays(
            rebuilt.chart,
            rebuilt.times,
            np.array([action.act(h, s.q) for s in rebuilt.states]),
            np.array([action.act_jacobian(h, s.q) @ s.v for s in rebuilt.states]),
        )
        assert compare_trajectories(moved, expected, include_velocities=True).sup_error <= 1e-8
        assert float(np.max(moved.channel("projection_defect"))) <= 1e-8

    def test_anchor_mismatch(self):
        bundle = get_system("heavy-top")
        conn = bundle.default_connection
        full = integrate_full(bundle.sys, bundle.default_state, 0.0, 0.1, 1e-2)
        projected = project_trajectory(conn, full)
        with pytest.raises(GaugeAnchorError):
            reconstruct(conn, projected, np.array([0.0, 1.2, 0.0]))


class TestCompareTrajectories:
    """轨迹比较"""

    @staticmethod
    def circle(times, offset=0.0, angular=True):
        chart = Chart("circle", ("phi",), angular=(angular,))
        phi = np.asarray(times) + offset
        return Trajectory.from_arrays(chart, times, phi.reshape(-1, 1), np.ones((len(times), 1)))

    def test_angles_compared_modulo_two_pi(self):
        times = np.linspace(0.0, 1.0, 11)
        report = compare_trajectories(self.circle(times), self.circle(times, 2.0 * np.pi))
        assert report.sup_error <= 1e-12
        assert set(report.per_channel) == {"phi"}

    def test_linear_coordinates_not_wrapped(self):
        times = np.linspace(0.0, 1.0, 11)
        a = self.circle(times, angular=False)
        b = self.circle(times, 2.0 * np.pi, angular=False)
        assert compare_trajectories(a, b).sup_error == pytest.approx(2.0 * np.pi)

    def test_resampling(self):
        """网格不同时样条重采样"""
        a = self.circle(np.linspace(0.0, 1.0, 11), angular=False)
        b = self.circle(np.linspace(0.0, 1.0, 101), angular=False)
        report = compare_trajectories(a, b, include_velocities=True)
        assert report.sup_error <= 1e-12
        assert "dphi" in report.per_channel

    def test_weights(self):
        times = np.linspace(0.0, 1.0, 11)
        a = self.circle(times, angular=False)
        b = self.circle(times, 0.5, angular=False)
        assert compare_trajectories(a, b, weights=[0.1]).sup_error == pytest.approx(0.05)

    def test_chart_mismatch(self):
        times = np.linspace(0.0, 1.0, 11)
        other = Trajectory.from_arrays(Chart("line", ("x",)), times, np.zeros((11, 1)), np.zeros((11, 1)))
        with pytest.raises(ComparisonError):
            compare_trajectories(self.circle(times), other)

    def test_range_not_covered(self):
        a = self.circle(np.linspace(0.0, 2.0, 11), angular=False)
        b = self.circle(np.linspace(0.0, 1.0, 11), angular=False)
        with pytest.raises(ComparisonError, match="不覆盖"):
            compare_trajectories(a, b)
