import numpy as np
import pytest

from helpers import qk_two_piece, rotation_matrix
from slenderquad.finitepart import (
    LineDensity,
    SlenderParams,
    build_weight_table,
    centerline_velocity,
    eval_K,
    eval_K_all,
    eval_L,
    eval_Lambda,
    g0_scalar,
    g_limit,
    g_pair,
    g_vector,
    qk_signkernel,
)
from slenderquad import forces
from slenderquad.forces import legendre_mixture, splitmix64_uniforms
from slenderquad.geometry import discretize, make_custom, make_helix, make_straight
from slenderquad.oracle import diagonal_eigenvalues, scaled_legendre
from slenderquad.quadcore import gauss_legendre, panelize

RULE = gauss_legendre(16)
TABLE = build_weight_table(RULE)


class TestQkSignKernel:
    def test_k0_closed_form(self):
        for eta_bar in (-1.0, -0.3, 0.0, 0.7, 1.0):
            assert qk_signkernel(0, eta_bar) == pytest.approx(-2.0 * eta_bar, abs=0)

    def test_k1_at_zero(self):
        assert qk_signkernel(1, 0.0) == pytest.approx(1.0, abs=0)

    def test_against_two_piece_integration(self):
        assert qk_signkernel(5, 0.3) == pytest.approx(qk_two_piece(5, 0.3), abs=1e-14)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            qk_signkernel(-1, 0.0)
        with pytest.raises(ValueError):
            qk_signkernel(64, 0.0)
        with pytest.raises(ValueError):
            qk_signkernel(3, 1.5)


class TestWeightTable:
    def test_monomial_moments(self):
        vander = np.vander(RULE.nodes, increasing=True)
        for ell in range(16):
            got = TABLE.weights[ell] @ vander
            expected = np.array([qk_signkernel(k, RULE.nodes[ell]) for k in range(16)])
            assert np.max(np.abs(got - expected)) <= 1e-10

    def test_constant_and_linear_moment_invariants(self):
        for ell in range(16):
            assert TABLE.weights[ell].sum() == pytest.approx(
                -2.0 * RULE.nodes[ell], abs=1e-10
            )
            assert TABLE.weights[ell] @ RULE.nodes == pytest.approx(
                1.0 - RULE.nodes[ell] ** 2, abs=1e-10
            )

    def test_odd_kernel_symmetry(self):
        # mirroring the target and reversing the samples flips the sign
        rng = np.random.default_rng(2)
        phi = rng.standard_normal(16)
        for ell in range(16):
            mirrored = TABLE.weights[15 - ell] @ phi[::-1]
            assert mirrored == pytest.approx(-(TABLE.weights[ell] @ phi), abs=1e-9)


class TestG0Scalar:
    def test_difference_quotient(self):
        f = lambda s: s**2
        fp = lambda s: 2 * s
        assert g0_scalar(f, fp, 0.5, 0.2) == pytest.approx(0.7, abs=1e-15)

    def test_diagonal_limit(self):
        f = lambda s: s**2
        fp = lambda s: 2 * s
        assert g0_scalar(f, fp, 0.2, 0.2) == pytest.approx(0.4, abs=0)

    def test_constant(self):
        f = lambda s: 3.0
        fp = lambda s: 0.0
        for s in (0.1, 0.5, 0.5000001):
            assert g0_scalar(f, fp, s, 0.5) == 0.0


def _constant_density(grid, value):
    vec = np.asarray(value, dtype=float)
    return LineDensity(samples=np.tile(vec, (grid.node_count, 1)))


class TestGVector:
    def test_straight_constant_vanishes(self):
        fiber = make_straight((1.0, 0.0, 0.0), 1.0)
        pc = discretize(fiber, 2, RULE)
        dens = _constant_density(pc.grid, (0.4, -1.1, 0.9))
        t = 13
        for j in (0, 5, 13, 27):
            assert np.max(np.abs(g_vector(pc, dens, j, t))) <= 1e-13

    def test_straight_linear_diagonal(self):
        fiber = make_straight((1.0, 0.0, 0.0), 1.0)
        pc = discretize(fiber, 2, RULE)
        f = lambda s: np.stack(
            [np.asarray(s), np.zeros_like(np.asarray(s)), np.zeros_like(np.asarray(s))],
            axis=-1,
        )
        dens = LineDensity.from_closure(f, pc.grid)
        t = 9
        assert g_vector(pc, dens, t, t) == pytest.approx([2.0, 0.0, 0.0], abs=1e-11)

    def test_limit_linear_in_h(self):
        helix = make_helix(8.0, 3.0, 1.5)
        f, fp = forces.testf(1.5)
        s_bar = 0.8
        limit = g_pair(helix, f, fp, s_bar, s_bar)
        errs = [
            np.linalg.norm(g_pair(helix, f, fp, s_bar + h, s_bar) - limit)
            for h in (1e-2, 1e-3, 1e-4)
        ]
        assert 5.0 <= errs[0] / errs[1] <= 20.0
        assert 5.0 <= errs[1] / errs[2] <= 20.0

    def test_discrete_matches_closure_form(self):
        helix = make_helix(8.0, 3.0, 1.5)
        pc = discretize(helix, 4, RULE)
        f, fp = forces.testf(1.5)
        dens = LineDensity.from_closure(f, pc.grid, derivative=fp)
        s = pc.grid.global_nodes
        t = 37
        for j in (2, 30, 37, 60):
            expected = g_pair(helix, f, fp, s[j], s[t])
            assert g_vector(pc, dens, j, t) == pytest.approx(expected, abs=1e-11)


class TestEvalL:
    def test_first_mode_any_panelization(self):
        lam1 = 2.0
        for m in (1, 2, 4, 8):
            grid = panelize(1.0, m, RULE)
            f, fp = legendre_mixture(np.array([0.0, 1.0]), 1.0)
            dens = LineDensity.from_closure(f, grid, derivative=fp)
            s = grid.global_nodes
            expected = -lam1 * scaled_legendre(1, s, 1.0)
            got = np.array([eval_L(dens, grid, TABLE, t) for t in range(grid.node_count)])
            assert np.max(np.abs(got - expected)) <= 1e-13

    def test_constant_density_vanishes(self):
        grid = panelize(1.0, 4, RULE)
        dens = LineDensity(samples=np.full(grid.node_count, 2.5))
        got = np.array([eval_L(dens, grid, TABLE, t) for t in range(grid.node_count)])
        assert np.max(np.abs(got)) <= 1e-14

    def test_random_mixture_diagonalization(self):
        alpha = splitmix64_uniforms(99, 5)
        lam = diagonal_eigenvalues(5)
        f, fp = legendre_mixture(alpha, 1.0)
        for m in (1, 2, 4, 8):
            grid = panelize(1.0, m, RULE)
            dens = LineDensity.from_closure(f, grid, derivative=fp)
            s = grid.global_nodes
            expected = -sum(alpha[n] * lam[n] * scaled_legendre(n, s, 1.0) for n in range(5))
            got = np.array([eval_L(dens, grid, TABLE, t) for t in range(grid.node_count)])
            assert np.max(np.abs(got - expected)) <= 1e-13

    def test_spectral_derivative_fallback(self):
        # no analytic derivative attached: the self-panel interpolant supplies it
        alpha = splitmix64_uniforms(5, 4)
        f, _ = legendre_mixture(alpha, 1.0)
        lam = diagonal_eigenvalues(4)
        grid = panelize(1.0, 2, RULE)
        dens = LineDensity.from_closure(f, grid)
        s = grid.global_nodes
        expected = -sum(alpha[n] * lam[n] * scaled_legendre(n, s, 1.0) for n in range(4))
        got = np.array([eval_L(dens, grid, TABLE, t) for t in range(grid.node_count)])
        assert np.max(np.abs(got - expected)) <= 1e-13

    def test_reflection_symmetry(self):
        # substituting u = L - s in the defining integral shows the operator
        # commutes with reflection: L[f o reflect](L - sbar) = L[f](sbar)
        rng = np.random.default_rng(12)
        coeffs = rng.uniform(-1, 1, 6)
        grid = panelize(1.0, 4, RULE)
        poly = np.polynomial.Polynomial(coeffs)
        dens = LineDensity(samples=poly(grid.global_nodes))
        reflected = LineDensity(samples=poly(1.0 - grid.global_nodes))
        n = grid.node_count
        for t in (3, 17, 40):
            mirror_t = n - 1 - t
            left = eval_L(reflected, grid, TABLE, mirror_t)
            assert left == pytest.approx(eval_L(dens, grid, TABLE, t), abs=1e-12)

    def test_rejects_vector_density(self):
        grid = panelize(1.0, 1, RULE)
        dens = _constant_density(grid, (1.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            eval_L(dens, grid, TABLE, 0)


class TestEvalK:
    def test_straight_constant_vanishes(self):
        fiber = make_straight((1.0, 0.0, 0.0), 1.0)
        pc = discretize(fiber, 4, RULE)
        dens = _constant_density(pc.grid, (0.2, 0.5, -0.3))
        values = eval_K_all(pc, dens, TABLE)
        assert np.max(np.abs(values)) <= 1e-14

    def test_straight_reduces_to_projected_L(self):
        fiber = make_straight((1.0, 0.0, 0.0), 1.0)
        pc = discretize(fiber, 4, RULE)

        def f(s):
            s = np.asarray(s, dtype=float)
            return np.stack([np.sin(2 * np.pi * s), np.cos(s), s**2], axis=-1)

        dens = LineDensity.from_closure(f, pc.grid)
        projector = np.array([2.0, 1.0, 1.0])  # I + ss for the x tangent
        for t in range(0, pc.grid.node_count, 9):
            per_component = np.array(
                [
                    eval_L(LineDensity(samples=dens.samples[:, c]), pc.grid, TABLE, t)
                    for c in range(3)
                ]
            )
            assert eval_K(pc, dens, TABLE, t) == pytest.approx(
                projector * per_component, abs=1e-12
            )

    def test_rigid_motion_invariance(self):
        helix = make_helix(8.0, 3.0, 1.5)
        f, fp = forces.testf(1.5)
        pc = discretize(helix, 8, RULE)
        dens = LineDensity.from_closure(f, pc.grid, derivative=fp)
        base = eval_K_all(pc, dens, TABLE)

        rot = rotation_matrix((1.0, 2.0, -0.5), 1.1)
        shift = np.array([0.4, -2.0, 0.7])
        moved = make_custom(
            lambda s: helix.position(s) @ rot.T + shift,
            lambda s: helix.tangent(s) @ rot.T,
            lambda s: helix.second_derivative(s) @ rot.T,
            1.5,
        )
        pc_m = discretize(moved, 8, RULE)
        dens_m = LineDensity.from_closure(
            lambda s: f(s) @ rot.T, pc_m.grid, derivative=lambda s: fp(s) @ rot.T
        )
        rotated = eval_K_all(pc_m, dens_m, TABLE)
        assert np.max(
            np.abs(np.linalg.norm(rotated, axis=1) - np.linalg.norm(base, axis=1))
        ) <= 1e-12


class TestEvalLambda:
    def setup_method(self):
        fiber = make_straight((1.0, 0.0, 0.0), 1.0)
        self.pc = discretize(fiber, 1, RULE)
        self.params = SlenderParams(epsilon=np.exp(-1.0))  # c = -1

    def test_tangential_component(self):
        dens = _constant_density(self.pc.grid, (1.0, 0.0, 0.0))
        assert eval_Lambda(self.pc, dens, self.params, 4) == pytest.approx(
            [3.0, 0.0, 0.0], abs=1e-14
        )

    def test_normal_component(self):
        dens = _constant_density(self.pc.grid, (0.0, 1.0, 0.0))
        assert eval_Lambda(self.pc, dens, self.params, 4) == pytest.approx(
            [0.0, 3.0, 0.0], abs=1e-14
        )

    def test_variants_differ_tangentially_only(self):
        dens = _constant_density(self.pc.grid, (1.0, 1.0, 0.0))
        matrix = eval_Lambda(self.pc, dens, self.params, 0, variant="matrix")
        projector = eval_Lambda(self.pc, dens, self.params, 0, variant="projector")
        assert matrix == pytest.approx([3.0, 3.0, 0.0], abs=1e-14)
        assert projector == pytest.approx([2.0, 3.0, 0.0], abs=1e-14)
        with pytest.raises(ValueError):
            eval_Lambda(self.pc, dens, self.params, 0, variant="bogus")

    def test_linearity(self):
        rng = np.random.default_rng(4)
        v = rng.standard_normal(3)
        base = eval_Lambda(self.pc, _constant_density(self.pc.grid, v), self.params, 2)
        scaled = eval_Lambda(self.pc, _constant_density(self.pc.grid, 3.5 * v), self.params, 2)
        assert scaled == pytest.approx(3.5 * base, abs=1e-13)

    def test_epsilon_validation(self):
        with pytest.raises(ValueError):
            SlenderParams(epsilon=1.5)
        params = SlenderParams(epsilon=0.8)  # c > 0
        dens = _constant_density(self.pc.grid, (1.0, 0.0, 0.0))
        with pytest.raises(ValueError):
            eval_Lambda(self.pc, dens, params, 0)


class TestCenterlineVelocity:
    def setup_method(self):
        self.helix = make_helix(8.0, 3.0, 1.5)
        self.pc = discretize(self.helix, 4, RULE)
        self.params = SlenderParams(epsilon=1e-3, mu=1.0)

    def test_zero_force_gives_background(self):
        dens = _constant_density(self.pc.grid, (0.0, 0.0, 0.0))
        background = lambda x: np.array([1.0, -2.0, 0.5])
        vel = centerline_velocity(self.pc, dens, self.params, background, TABLE)
        assert np.max(np.abs(vel - np.array([1.0, -2.0, 0.5]))) <= 1e-14

    def test_linearity_of_force_response(self):
        f, fp = forces.testf(1.5)
        d1 = LineDensity.from_closure(f, self.pc.grid, derivative=fp)
        d2 = _constant_density(self.pc.grid, (0.3, -0.2, 0.1))
        dsum = LineDensity(samples=d1.samples + d2.samples)
        background = lambda x: np.zeros(3)
        v1 = centerline_velocity(self.pc, d1, self.params, background, TABLE)
        v2 = centerline_velocity(self.pc, d2, self.params, background, TABLE)
        vsum = centerline_velocity(self.pc, dsum, self.params, background, TABLE)
        assert np.max(np.abs(vsum - v1 - v2)) <= 1e-12

    def test_composition_identity(self):
        f, fp = forces.testf(1.5)
        dens = LineDensity.from_closure(f, self.pc.grid, derivative=fp)
        background = lambda x: np.zeros(3)
        vel = centerline_velocity(self.pc, dens, self.params, background, TABLE)
        for t in (0, 20, 45):
            lam = eval_Lambda(self.pc, dens, self.params, t)
            k = eval_K(self.pc, dens, TABLE, t)
            assert vel[t] == pytest.approx(-(lam + k) / (8 * np.pi), abs=1e-13)


class TestMomentExactness:
    def test_sign_kernel_quadrature_on_monomials(self):
        # product integration reproduces the analytic sign-kernel moments
        grid = panelize(1.0, 3, RULE)
        for t in (5, 20, 40):
            m, ell = grid.panel_of_target(t)
            eta_bar = RULE.nodes[ell]
            for k in range(16):
                phi = RULE.nodes**k
                got = TABLE.weights[ell] @ phi
                assert got == pytest.approx(qk_signkernel(k, eta_bar), abs=1e-10)


class TestGLimit:
    def test_straight_reduces_to_projected_derivative(self):
        xs = np.array([0.0, 0.0, 1.0])
        out = g_limit(xs, np.zeros(3), np.array([5.0, 5.0, 5.0]), np.array([1.0, 2.0, 3.0]))
        assert out == pytest.approx([1.0, 2.0, 6.0], abs=0)
