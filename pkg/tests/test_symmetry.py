"""李群、群作用与动量映射测试"""

import numpy as np
import pytest

from routh_reduction.core.calculus import ChartState, quasi_random
from routh_reduction.core.lagrangian import ForceTerm, LagrangianSystem, integrate_full
from routh_reduction.core.symmetry import (
    LieGroup,
    check_equivariance,
    check_invariance,
    enforce_momentum,
    isotropy_subalgebra,
    locked_inertia,
    momentum_drift,
    momentum_map,
)
from routh_reduction.systems import get_system
from routh_reduction.utils.errors import DiagnosticsMissingError, NotInvariantError


class TestLieGroup:
    """李群与李代数"""

    def test_so3_bracket(self):
        """SO(3) 括号反对称且满足 Jacobi 恒等式"""
        group = LieGroup.so3()
        points = quasi_random(30, [-1.0] * 9, [1.0] * 9, seed=0)
        for p in points:
            a, b, c = p[:3], p[3:6], p[6:]
            np.testing.assert_allclose(group.bracket(a, b), -group.bracket(b, a), atol=1e-12)
            jacobi = (
                group.bracket(a, group.bracket(b, c))
                + group.bracket(b, group.bracket(c, a))
                + group.bracket(c, group.bracket(a, b))
            )
            assert float(np.max(np.abs(jacobi))) <= 1e-12

    def test_coadjoint_pairing(self):
        """⟨ad*_ξ μ, η⟩ = ⟨μ, [ξ, η]⟩"""
        group = LieGroup.so3()
        for p in quasi_random(20, [-1.0] * 9, [1.0] * 9, seed=1):
            xi, eta, mu = p[:3], p[3:6], p[6:]
            lhs = float(group.coad_star(xi, mu) @ eta)
            rhs = float(mu @ group.bracket(xi, eta))
            assert lhs == pytest.approx(rhs, abs=1e-12)
            np.testing.assert_allclose(group.coad_star(xi, mu), np.cross(mu, xi), atol=1e-12)

    def test_abelian_bracket_is_zero(self):
        group = LieGroup.torus(2)
        np.testing.assert_array_equal(group.bracket(np.array([1.0, 2.0]), np.array([3.0, -1.0])), np.zeros(2))
        assert group.is_abelian

    def test_so3_elements(self):
        group = LieGroup.so3()
        for g in group.sample(10, seed=0):
            assert group.defect(g) <= 1e-12
            np.testing.assert_allclose(group.compose(g, group.inverse(g)), np.eye(3), atol=1e-12)


class TestGroupAction:
    """群作用与生成元"""

    @pytest.mark.parametrize("name", ["rigid-body", "heavy-top", "tippe-top", "pp-wave", "toy"])
    def test_generators_match_action(self, name):
        """σ_q(ξ) = d/dε act(exp(εξ), q)"""
        bundle = get_system(name)
        action = bundle.action
        q = bundle.default_state.q
        for xi in np.eye(action.group.dim):
            assert action.generator_defect(q, xi) <= 1e-6

    def test_generator_linear(self):
        action = get_system("rigid-body").action
        q = np.array([0.3, 1.1, -0.4])
        a, b = np.array([1.0, -2.0, 0.5]), np.array([0.3, 0.1, 2.0])
        np.testing.assert_allclose(
            action.generator(q, 2.0 * a - 3.0 * b),
            2.0 * action.generator(q, a) - 3.0 * action.generator(q, b),
            atol=1e-12,
        )


class TestMomentumMap:
    """动量映射"""

    def test_toy(self):
        """J_L = q̇¹"""
        bundle = get_system("toy")
        s = ChartState(bundle.sys.chart, [0.0, 0.0], [3.0, 5.0])
        np.testing.assert_allclose(momentum_map(bundle.sys, bundle.action, s).mu, [3.0])

    def test_tippe_top_jellet(self):
        """J_L = RA sin²θ φ̇ + C(ψ̇ + cosθ φ̇)(R cosθ − ε)"""
        bundle = get_system("tippe-top")
        p = bundle.params
        s = ChartState(bundle.sys.chart, [0.2, 1.0, -0.3], [0.7, 0.4, 2.5])
        theta, phi_dot, psi_dot = s.q[1], s.v[0], s.v[2]
        expected = p["R"] * p["A"] * np.sin(theta) ** 2 * phi_dot + p["C"] * (
            psi_dot + np.cos(theta) * phi_dot
        ) * (p["R"] * np.cos(theta) - p["epsilon"])
        assert momentum_map(bundle.sys, bundle.action, s).mu[0] == pytest.approx(expected, abs=1e-12)
        assert bundle.reference_formulas["jellet"](s) == pytest.approx(expected, abs=1e-12)

    def test_velocity_independent(self):
        bundle = get_system("toy")
        sys = LagrangianSystem(bundle.sys.chart, lambda s: -0.5 * float(s.q[0]) ** 2)
        s = ChartState(sys.chart, [0.4, 1.0], [2.0, -1.0])
        np.testing.assert_allclose(momentum_map(sys, bundle.action, s).mu, [0.0], atol=1e-9)

    def test_heavy_top_with_field(self):
        bundle = get_system("heavy-top", omega_B=0.01)
        s = bundle.default_state
        expected = bundle.reference_formulas["momentum"](s)
        assert momentum_map(bundle.sys, bundle.action, s).mu[0] == pytest.approx(expected, abs=1e-12)


class TestInvariance:
    """不变性检验"""

    @pytest.mark.parametrize("name", ["rigid-body", "tippe-top", "heavy-top", "pp-wave", "toy"])
    def test_builtins_invariant(self, name):
        bundle = get_system(name)
        report = check_invariance(bundle.sys, bundle.action)
        assert report.L_invariant and report.F_cond1 and report.F_cond2

    def test_broken_symmetry(self):
        """q² 依赖的势能破坏对称性"""
        bundle = get_system("toy", breaking=0.5)
        report = check_invariance(bundle.sys, bundle.action)
        assert not report.L_invariant
        assert report.max_violations["L"] > 1e-8
        with pytest.raises(NotInvariantError):
            check_invariance(bundle.sys, bundle.action, strict=True)

    def test_report_is_reproducible(self):
        bundle = get_system("heavy-top")
        first = check_invariance(bundle.sys, bundle.action, seed=0).to_dict()
        second = check_invariance(bundle.sys, bundle.action, seed=0).to_dict()
        assert first == second

    @pytest.mark.parametrize("name", ["rigid-body", "heavy-top"])
    def test_equivariance(self, name):
        bundle = get_system(name)
        assert check_equivariance(bundle.sys, bundle.action) <= 1e-8


class TestMomentumDrift:
    """动量守恒"""

    def test_rigid_body_conserved(self):
        """自由刚体空间角动量三个分量漂移 ≤ 1e-7"""
        bundle = get_system("rigid-body")
        traj = integrate_full(bundle.sys, bundle.default_state, 0.0, 5.0, 1e-3, bundle.action)
        drift = momentum_drift(traj)
        assert drift.shape == (3,)
        assert float(np.max(drift)) <= 1e-7

    def test_breaking_force_drifts_linearly(self):
        """违反条件二的力使动量线性漂移"""
        toy = get_system("toy")
        sys = LagrangianSystem(
            toy.sys.chart,
            toy.sys.L,
            ForceTerm.general(lambda s: np.array([0.0, -0.1])),
            toy.sys.partials,
            toy.sys.kinetic,
            "toy/forced",
        )
        traj = integrate_full(sys, toy.default_state, 0.0, 2.0, 1e-2, toy.action)
        values = traj.channel("J_L").reshape(-1)
        np.testing.assert_allclose(values - values[0], -0.1 * traj.times, atol=1e-9)
        assert momentum_drift(traj)[0] == pytest.approx(0.2, abs=1e-9)

    def test_missing_channel(self):
        bundle = get_system("toy")
        traj = integrate_full(bundle.sys, bundle.default_state, 0.0, 0.1, 1e-2)
        with pytest.raises(DiagnosticsMissingError):
            momentum_drift(traj)


class TestLockedInertia:
    """锁定惯性"""

    def test_rigid_body_principal_moments(self):
        """空间基下的锁定惯性与 diag(I₁, I₂, I₃) 相似"""
        bundle = get_system("rigid-body")
        s = ChartState(bundle.sys.chart, [0.3, 1.2, -0.5], [0.0, 0.0, 0.0])
        inertia = locked_inertia(bundle.sys, bundle.action, s)
        np.testing.assert_allclose(inertia, inertia.T, atol=1e-12)
        np.testing.assert_allclose(np.linalg.eigvalsh(inertia), [1.0, 2.0, 3.0], atol=1e-10)

    def test_toy_degenerate(self):
        bundle = get_system("toy")
        inertia = locked_inertia(bundle.sys, bundle.action, bundle.default_state)
        np.testing.assert_allclose(inertia, [[0.0]], atol=1e-12)

    def test_heavy_top(self):
        """[ρ_φφ] = [I₁sin²θ + I₃cos²θ]"""
        bundle = get_system("heavy-top")
        s = ChartState(bundle.sys.chart, [0.0, 0.8, 0.0], [0.1, 0.2, 0.3])
        expected = bundle.params["I1"] * np.sin(0.8) ** 2 + bundle.params["I3"] * np.cos(0.8) ** 2
        np.testing.assert_allclose(locked_inertia(bundle.sys, bundle.action, s), [[expected]], atol=1e-12)

    def test_pp_wave_null_direction(self):
        bundle = get_system("pp-wave")
        np.testing.assert_allclose(locked_inertia(bundle.sys, bundle.action, bundle.default_state), [[0.0]], atol=1e-12)


class TestIsotropy:
    """迷向子代数"""

    def test_so3_axis(self):
        """μ = (0, 0, μ₃) → span{e₃}"""
        basis = isotropy_subalgebra(LieGroup.so3(), [0.0, 0.0, 2.0])
        assert basis.shape == (1, 3)
        np.testing.assert_allclose(np.abs(basis[0]), [0.0, 0.0, 1.0], atol=1e-12)

    def test_abelian_full(self):
        assert isotropy_subalgebra(LieGroup.abelian(2), [1.0, -3.0]).shape == (2, 2)

    def test_so3_zero_momentum(self):
        assert isotropy_subalgebra(LieGroup.so3(), np.zeros(3)).shape == (3, 3)


class TestEnforceMomentum:
    """初始状态的动量投影"""

    def test_heavy_top(self):
        bundle = get_system("heavy-top")
        corrected, mismatch = enforce_momentum(bundle.sys, bundle.action, bundle.default_state, [3.0])
        assert mismatch <= 1e-12
        assert momentum_map(bundle.sys, bundle.action, corrected).mu[0] == pytest.approx(3.0, abs=1e-12)
        np.testing.assert_array_equal(corrected.q, bundle.default_state.q)

    def test_toy_cannot_change_momentum(self):
        """锁定惯性为零时无法通过竖直速度修正动量"""
        bundle = get_system("toy")
        _, mismatch = enforce_momentum(bundle.sys, bundle.action, bundle.default_state, [2.0])
        assert mismatch == pytest.approx(1.0, abs=1e-12)
