"""主联络、曲率与商坐标测试"""

import numpy as np
import pytest

from routh_reduction.core.calculus import ChartState, Trajectory, quasi_random
from routh_reduction.core.connection import (
    assemble,
    beta_mu_blocks,
    check_quotient,
    connection_from_coefficients,
    covariant_derivative,
    curvature,
    horizontal_frame,
    horizontal_lift,
    isotropy_contraction_defect,
    mechanical_connection,
    mu_tilde,
    quotient_coords,
    structure_equation_defect,
)
from routh_reduction.systems import get_system
from routh_reduction.utils.errors import (
    ChartSingularityError,
    NotGRegularError,
    NotInvariantError,
    QuotientMismatchError,
)


def random_vectors(n: int, dim: int, seed: int = 0) -> np.ndarray:
    return quasi_random(n, [-1.0] * dim, [1.0] * dim, seed=seed)


class TestConnectionAxioms:
    """联络公理"""

    @pytest.mark.parametrize(
        "name,connection",
        [
            ("heavy-top", "mechanical"),
            ("heavy-top", "flat"),
            ("rigid-body", "spatial"),
            ("tippe-top", "flat"),
            ("pp-wave", None),
            ("toy", "flat"),
        ],
    )
    def test_axioms_hold(self, name, connection):
        conn = get_system(name).connection(connection)
        defects = conn.axiom_defects(n_samples=20)
        assert defects["reproduction"] <= 1e-8
        assert defects["equivariance"] <= 1e-8

    def test_bad_coefficients_rejected(self):
        """ω(σ(ξ)) ≠ ξ 的系数表被拒绝"""
        bundle = get_system("heavy-top")
        with pytest.raises(NotInvariantError):
            connection_from_coefficients(
                bundle.action, bundle.quotient, lambda q: np.array([[2.0, 0.0, 0.0]]), name="bad"
            )

    def test_unvalidated_coefficients(self):
        bundle = get_system("heavy-top")
        conn = connection_from_coefficients(
            bundle.action, bundle.quotient, lambda q: np.array([[2.0, 0.0, 0.0]]), validate=False
        )
        assert conn.axiom_defects(n_samples=5)["reproduction"] == pytest.approx(1.0)


class TestMechanicalConnection:
    """机械联络"""

    def test_heavy_top_coefficients(self):
        """ω = dφ + (I₃cosθ/ρ_φφ)dψ"""
        bundle = get_system("heavy-top")
        conn = bundle.connection("mechanical")
        I1, I3 = bundle.params["I1"], bundle.params["I3"]
        for theta in (0.4, 1.0, 2.2):
            rho = I1 * np.sin(theta) ** 2 + I3 * np.cos(theta) ** 2
            q = np.array([0.3, theta, -0.2])
            np.testing.assert_allclose(conn.omega_matrix(q), [[1.0, 0.0, I3 * np.cos(theta) / rho]], atol=1e-12)

    def test_horizontal_lift_matches_formula(self):
        bundle = get_system("heavy-top")
        conn = bundle.connection("mechanical")
        q = np.array([0.1, 0.9, 0.4])
        lifted = horizontal_lift(conn, np.array([0.3, 1.5]), q)
        assert conn.omega(q, lifted)[0] == pytest.approx(0.0, abs=1e-12)
        np.testing.assert_allclose(lifted[1:], [0.3, 1.5], atol=1e-12)
        expected = bundle.reference_formulas["horizontal_phi_dot"](0.9, 1.5)
        assert lifted[0] == pytest.approx(expected, abs=1e-12)

    def test_metric_orthogonality(self):
        """水平提升与生成元关于动能度量正交"""
        bundle = get_system("heavy-top")
        conn = bundle.connection("mechanical")
        q = np.array([0.0, 1.3, 0.7])
        metric = bundle.sys.kinetic.metric(q)
        H = horizontal_frame(conn, q)
        G = bundle.action.generator_matrix(q)
        np.testing.assert_allclose(G.T @ metric @ H, np.zeros((1, 2)), atol=1e-12)

    def test_degenerate_locked_inertia(self):
        """锁定惯性为零时无法构造机械联络"""
        bundle = get_system("toy")
        with pytest.raises(NotGRegularError):
            mechanical_connection(bundle.sys, bundle.action, bundle.quotient)


class TestCurvature:
    """曲率与结构方程"""

    def test_flat_connection_has_zero_curvature(self):
        bundle = get_system("heavy-top")
        conn = bundle.connection("flat")
        q = np.array([0.2, 1.1, -0.3])
        for u, w in zip(random_vectors(5, 3, 0), random_vectors(5, 3, 1)):
            np.testing.assert_allclose(curvature(conn, q, u, w), [0.0], atol=1e-8)

    def test_mechanical_connection_is_curved(self):
        """d(I₃cosθ/ρ)/dθ ≠ 0，Ω(∂θ, ∂ψ) 非零"""
        bundle = get_system("heavy-top")
        conn = bundle.connection("mechanical")
        q = np.array([0.0, 1.0, 0.0])
        omega = curvature(conn, q, np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]))
        assert abs(omega[0]) > 1e-3
        # 反对称
        back = curvature(conn, q, np.array([0.0, 0.0, 1.0]), np.array([0.0, 1.0, 0.0]))
        np.testing.assert_allclose(back, -omega, atol=1e-9)

    @pytest.mark.parametrize("name", ["rigid-body", "heavy-top"])
    def test_structure_equation(self, name):
        """dω(u, w) = Ω(u, w) ∓ [ω(u), ω(w)]"""
        bundle = get_system(name)
        conn = bundle.default_connection
        q = bundle.default_state.q
        for u, w in zip(random_vectors(8, 3, 2), random_vectors(8, 3, 3)):
            assert structure_equation_defect(conn, q, u, w) <= 1e-6

    def test_isotropy_contraction(self):
        """ξ ∈ 𝔤_μ 时 i_{ξ_Q} dω^μ = 0"""
        bundle = get_system("rigid-body")
        conn = bundle.default_connection
        for q in bundle.sys.chart.sample_positions(10, seed=0):
            assert isotropy_contraction_defect(conn, bundle.default_mu, q) <= 1e-6


class TestBetaBlocks:
    """β^μ 分块"""

    def test_rigid_body_sphere_form(self):
        """S² 上 β^μ(∂θ, ∂ψ) = −μ sinθ"""
        bundle = get_system("rigid-body")
        conn = bundle.default_connection
        mu = bundle.params["mu"]
        for theta, psi in ((0.7, 0.2), (1.4, -1.0), (2.3, 2.5)):
            blocks = beta_mu_blocks(conn, bundle.default_mu, np.zeros(0), np.array([theta, psi]))
            expected = bundle.reference_formulas["beta_theta_psi"](theta, mu)
            assert blocks.ad_star_block[0, 1] == pytest.approx(expected, abs=1e-6)
            np.testing.assert_allclose(blocks.ad_star_block, -blocks.ad_star_block.T, atol=1e-8)

    def test_heavy_top_horizontal_block(self):
        """阿贝尔情形 Ω̃^μ = μ·Ω(hor ∂θ, hor ∂ψ)，无纤维方向"""
        bundle = get_system("heavy-top")
        conn = bundle.default_connection
        x = np.array([1.1, 0.4])
        blocks = beta_mu_blocks(conn, [2.0], x, np.zeros(0))
        assert blocks.mixed.shape == (2, 0)
        assert blocks.ad_star_block.shape == (0, 0)
        q = bundle.quotient.at(x, np.zeros(0))
        omega = curvature(conn, q, np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, 1.0]))
        assert blocks.omega_mu[0, 1] == pytest.approx(2.0 * omega[0], abs=1e-6)
        np.testing.assert_allclose(blocks.omega_mu, -blocks.omega_mu.T, atol=1e-8)

    def test_coadjoint_form_kernel(self):
        """∓⟨μ̃, [·, ·]⟩ 的核为 𝔤̃_μ"""
        bundle = get_system("rigid-body")
        blocks = beta_mu_blocks(bundle.default_connection, bundle.default_mu, np.zeros(0), np.array([1.0, 0.5]))
        np.testing.assert_allclose(blocks.coadjoint_form @ blocks.mu_tilde, np.zeros(3), atol=1e-12)
        assert np.linalg.matrix_rank(blocks.coadjoint_form, tol=1e-9) == 2

    def test_mu_tilde_on_sphere(self):
        bundle = get_system("rigid-body")
        mu = bundle.params["mu"]
        value = mu_tilde(bundle.default_connection, bundle.default_mu, np.zeros(0), np.array([1.2, -0.4]))
        np.testing.assert_allclose(value, bundle.reference_formulas["mu_tilde"](1.2, -0.4, mu), atol=1e-12)

    @pytest.mark.parametrize("name,direction", [("heavy-top", [1.0]), ("rigid-body", [0.0, 0.0, 1.0])])
    def test_mu_tilde_gauge_independent(self, name, direction):
        """代表点沿 G_μ 平移时 μ̃ = Uᵀμ 不变"""
        bundle = get_system(name)
        conn = bundle.default_connection
        action = conn.action
        mu = np.asarray(bundle.default_mu, dtype=float)
        for q in bundle.sys.chart.sample_positions(5, seed=1):
            for angle in (0.7, -2.1):
                moved = action.act(action.group.exp(angle * np.asarray(direction)), q)
                np.testing.assert_allclose(conn.transport(moved).T @ mu, conn.transport(q).T @ mu, atol=1e-12)

    def test_mu_tilde_changes_off_isotropy(self):
        """绕 e₁ 转动不在 G_μ 中，μ̃ 随之改变"""
        bundle = get_system("rigid-body")
        conn = bundle.default_connection
        q = bundle.default_state.q
        moved = conn.action.act(conn.action.group.exp(np.array([0.7, 0.0, 0.0])), q)
        mu = np.asarray(bundle.default_mu, dtype=float)
        assert float(np.max(np.abs(conn.transport(moved).T @ mu - conn.transport(q).T @ mu))) > 0.1


class TestQuotientCoordinates:
    """商坐标"""

    @pytest.mark.parametrize("name", ["rigid-body", "heavy-top", "pp-wave"])
    def test_assemble_inverts_quotient_coords(self, name):
        bundle = get_system(name)
        conn = bundle.default_connection
        s = bundle.default_state
        point = quotient_coords(conn, s, bundle.default_mu)
        rebuilt = assemble(conn, point.x, point.xdot, point.y, point.xi_tilde, point.gauge)
        np.testing.assert_allclose(rebuilt.q, s.q, atol=1e-12)
        np.testing.assert_allclose(rebuilt.v, s.v, atol=1e-10)

    def test_rigid_body_xi_tilde_is_body_velocity(self):
        """空间联络下 ξ̃ 为体坐标角速度"""
        bundle = get_system("rigid-body")
        s = bundle.default_state
        point = quotient_coords(bundle.default_connection, s)
        I = np.array([bundle.params["I1"], bundle.params["I2"], bundle.params["I3"]])
        expected = bundle.reference_formulas["mu_tilde"](s.q[1], s.q[2], bundle.params["mu"]) / I
        np.testing.assert_allclose(point.xi_tilde, expected, atol=1e-10)

    def test_singular_state(self):
        bundle = get_system("rigid-body")
        s = ChartState(bundle.sys.chart, [0.0, 0.0, 0.0], [0.1, 0.1, 0.1])
        with pytest.raises(ChartSingularityError):
            quotient_coords(bundle.default_connection, s)

    def test_isotropy_off_gauge_direction(self):
        """μ 不沿 e₃ 时 𝔤_μ 的生成元不沿 φ 方向"""
        bundle = get_system("rigid-body")
        with pytest.raises(QuotientMismatchError):
            check_quotient(bundle.default_connection, [1.0, 0.0, 0.0], bundle.default_state.q)
        assert check_quotient(bundle.default_connection, bundle.default_mu, bundle.default_state.q) <= 1e-8


class TestCovariantDerivative:
    """关联丛上的协变导数"""

    def test_abelian_reduces_to_time_derivative(self):
        bundle = get_system("heavy-top")
        times = np.linspace(0.0, 1.0, 11)
        q = np.column_stack([times, np.full(11, 1.0), np.zeros(11)])
        v = np.tile([1.0, 0.0, 0.0], (11, 1))
        traj = Trajectory.from_arrays(bundle.sys.chart, times, q, v)
        e = np.column_stack([times**2])
        out = covariant_derivative(bundle.default_connection, traj, e)
        np.testing.assert_allclose(out[:, 0], 2.0 * times, atol=1e-10)

    def test_rotating_vector_is_parallel(self):
        """左作用 SO(3)：ė = ad_{ω(q̇)} e 时协变导数为零"""
        bundle = get_system("rigid-body")
        conn = bundle.default_connection
        times = np.linspace(0.0, 0.5, 501)
        # 绕空间 z 轴匀速转动：φ 线性增长
        q = np.column_stack([0.2 + 0.8 * times, np.full_like(times, 1.0), np.full_like(times, 0.5)])
        v = np.tile([0.8, 0.0, 0.0], (len(times), 1))
        traj = Trajectory.from_arrays(bundle.sys.chart, times, q, v)
        rate = conn.omega(q[0], v[0])
        np.testing.assert_allclose(rate, [0.0, 0.0, 0.8], atol=1e-12)
        e0 = np.array([1.0, 0.0, 0.3])
        angle = 0.8 * times
        e = np.column_stack([np.cos(angle) * e0[0], np.sin(angle) * e0[0], np.full_like(times, e0[2])])
        out = covariant_derivative(conn, traj, e)
        np.testing.assert_allclose(out, np.zeros_like(out), atol=1e-5)
