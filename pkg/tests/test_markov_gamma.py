"""Generators, Gamma-calculus, BE/BL certification, and spectral gaps."""

import math

import numpy as np
import pytest

from cdtk.metric_measure import flat_space, model_space
from cdtk.markov_gamma import (
    MarkovGenerator,
    build_fd_generator,
    build_graph_generator,
    check_be,
    check_bl,
    check_lichnerowicz,
    cycle_generator,
    gamma,
    gamma_bilinear,
    gamma2,
    generator_from_json,
    generator_to_json,
    heat_semigroup,
    path_generator,
    ric_nv_1d,
    spectral_gap,
    battery_functions,
    two_point_space,
)


@pytest.fixture(scope="module")
def fd_model():
    return build_fd_generator(model_space(2.0, 3.0, 400))


class TestBuilders:
    def test_two_point_matrix(self):
        gen = two_point_space(0.7)
        np.testing.assert_allclose(gen.matrix, 0.7 * np.array([[-1, 1], [1, -1]]), atol=1e-15)

    def test_cycle_row_sums_and_symmetry(self):
        gen = cycle_generator(5, 1.3)
        assert np.max(np.abs(gen.matrix.sum(axis=1))) <= 1e-12
        db = gen.m[:, None] * gen.matrix
        np.testing.assert_allclose(db, db.T, atol=1e-15)

    def test_path_nonuniform_detailed_balance(self):
        gen = path_generator([1.0, 0.5, 2.0], [0.1, 0.4, 0.3, 0.2])
        db = gen.m[:, None] * gen.matrix
        assert np.max(np.abs(db - db.T)) <= 1e-12

    def test_disconnected_rejected(self):
        w = np.zeros((4, 4))
        w[0, 1] = w[1, 0] = 1.0
        w[2, 3] = w[3, 2] = 1.0
        with pytest.raises(ValueError):
            build_graph_generator(w, np.full(4, 0.25))

    def test_asymmetric_rates_rejected(self):
        w = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(ValueError):
            build_graph_generator(w, np.array([0.5, 0.5]))

    def test_fd_needs_resolution(self):
        with pytest.raises(ValueError):
            build_fd_generator(flat_space(0, 1, 8))

    def test_fd_constant_in_kernel(self, fd_model):
        assert np.max(np.abs(fd_model.apply(np.ones(fd_model.n)))) <= 1e-10


class TestSemigroup:
    def test_time_zero_identity(self, fd_model):
        f = np.sin(np.linspace(-1, 1, fd_model.n))
        out = heat_semigroup(fd_model, 0.0, f).values
        np.testing.assert_allclose(out, f, atol=1e-10)

    def test_constants_fixed(self, fd_model):
        out = heat_semigroup(fd_model, 0.3, np.full(fd_model.n, 2.5)).values
        np.testing.assert_allclose(out, 2.5, atol=1e-10)

    def test_two_point_closed_form(self):
        q = 1.4
        gen = two_point_space(q)
        f = np.array([0.0, 1.0])
        for t in (0.1, 0.7, 2.0):
            got = heat_semigroup(gen, t, f).values
            mean = 0.5
            ref = mean + (f - mean) * math.exp(-2 * q * t)
            np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_semigroup_property(self, fd_model):
        rng = np.random.default_rng(0)
        f = rng.standard_normal(fd_model.n)
        one = heat_semigroup(fd_model, 0.7, f).values
        two = heat_semigroup(fd_model, 0.3, heat_semigroup(fd_model, 0.4, f).values).values
        assert np.max(np.abs(one - two)) <= 1e-9

    def test_maximum_principle(self):
        gen = cycle_generator(7, 2.0)
        rng = np.random.default_rng(1)
        f = rng.standard_normal(7)
        out = heat_semigroup(gen, 0.5, f).values
        assert out.min() >= f.min() - 1e-12 and out.max() <= f.max() + 1e-12


class TestGammaCalculus:
    def test_constant_annihilated(self, fd_model):
        # round-off scales with the FD rates (~1/h^2 with weight ratios)
        c = np.full(fd_model.n, 3.0)
        scale = np.max(np.abs(fd_model.matrix)) * 9.0
        assert np.max(np.abs(gamma(fd_model, c))) <= 1e-13 * scale
        assert np.max(np.abs(gamma2(fd_model, c))) <= 1e-12 * scale**2

    def test_two_point_values(self):
        gen = two_point_space(1.0)
        f = np.array([0.0, 1.0])
        np.testing.assert_allclose(gamma(gen, f), [0.5, 0.5], atol=1e-15)
        np.testing.assert_allclose(gamma2(gen, f), [1.0, 1.0], atol=1e-15)

    def test_gamma_nonnegative_on_graphs(self):
        gen = cycle_generator(6, 0.8)
        rng = np.random.default_rng(2)
        for _ in range(5):
            assert gamma(gen, rng.standard_normal(6)).min() >= -1e-14

    def test_fd_gamma_approximates_squared_derivative(self):
        gen = build_fd_generator(flat_space(0.0, math.pi, 600))
        x = np.linspace(0, math.pi, 601)[:-1] + math.pi / 1200
        f = np.sin(x)
        got = gamma(gen, f)
        assert np.max(np.abs(got - np.cos(x) ** 2)) <= 50 * gen.step**2 * np.max(np.abs(gen.matrix))

    def test_fd_model_gamma2_equality_case(self, fd_model):
        # on the sharp space: Gamma2(sin) = K Gamma(sin) + (L sin)^2 / N
        x = model_space(2.0, 3.0, 400).nodes[:-1] + model_space(2.0, 3.0, 400).step / 2
        f = np.sin(x)
        lhs = gamma2(fd_model, f)
        rhs = 2.0 * gamma(fd_model, f) + fd_model.apply(f) ** 2 / 3.0
        interior = slice(40, fd_model.n - 40)
        scale = np.max(np.abs(lhs[interior]))
        assert np.max(np.abs(lhs - rhs)[interior]) <= 50 * fd_model.step * scale

    def test_integration_by_parts(self):
        gen = path_generator([1.0, 0.5, 2.0, 0.7], [0.1, 0.3, 0.2, 0.25, 0.15])
        rng = np.random.default_rng(3)
        for _ in range(5):
            f, g = rng.standard_normal(5), rng.standard_normal(5)
            lhs = gen.integrate(gamma_bilinear(gen, f, g))
            rhs = -gen.integrate(f * gen.apply(g))
            assert abs(lhs - rhs) <= 1e-10

    def test_leibniz_rule(self):
        gen = cycle_generator(6, 1.0)
        rng = np.random.default_rng(4)
        f, g, h = (rng.standard_normal(6) for _ in range(3))
        lhs = gen.integrate(gamma_bilinear(gen, f, g * h))
        rhs = gen.integrate(h * gamma_bilinear(gen, f, g) + g * gamma_bilinear(gen, f, h))
        assert abs(lhs - rhs) <= 1e-10


class TestBochnerInequality:
    def test_weak_margin_with_unit_test_function(self):
        gen = two_point_space(1.0)
        f = np.array([0.0, 1.0])
        rep = check_be(gen, f, np.ones(2), 0.5, 2.0)
        direct = gen.integrate(gamma2(gen, f) - 0.5 * gamma(gen, f) - gen.apply(f) ** 2 / 2.0)
        assert rep.weak_margin == pytest.approx(direct, abs=1e-14)

    def test_two_point_threshold(self):
        # pointwise BE holds iff K <= 2q(1 - 1/N)
        for q, n_dim in ((1.0, 2.0), (2.0, 3.0), (0.5, 10.0)):
            gen = two_point_space(q)
            f = np.array([0.0, 1.0])
            kstar = 2 * q * (1 - 1 / n_dim)
            assert check_be(gen, f, np.ones(2), kstar - 1e-6, n_dim).passed
            assert not check_be(gen, f, np.ones(2), kstar + 1e-6, n_dim).passed

    def test_threshold_uniform_over_battery(self):
        gen = two_point_space(1.0)
        kstar = 1.0
        for name, f in battery_functions(gen, seed=5):
            if np.ptp(f) < 1e-12:
                continue
            assert check_be(gen, f, np.ones(2), kstar - 1e-6, 2.0).passed, name

    def test_fd_model_battery(self, fd_model):
        for name, f in battery_functions(fd_model, seed=0):
            rep = check_be(fd_model, f, np.ones(fd_model.n), 2.0, 3.0)
            assert rep.passed, (name, rep.min_pointwise, rep.tol)

    def test_negative_g_rejected(self):
        gen = two_point_space(1.0)
        with pytest.raises(ValueError):
            check_be(gen, np.array([0.0, 1.0]), np.array([1.0, -1.0]), 0.0, 2.0)


class TestGradientEstimate:
    def test_margin_vanishes_as_t_to_zero(self):
        gen = two_point_space(1.0)
        f = np.array([0.0, 1.0])
        m = check_bl(gen, f, 1e-8, 0.5, 2.0)
        assert np.max(np.abs(m)) <= 1e-6

    def test_two_point_below_threshold(self):
        gen = two_point_space(1.0)
        f = np.array([0.0, 1.0])
        for t in (0.1, 0.5, 1.0):
            assert np.min(check_bl(gen, f, t, 0.9, 2.0)) >= -1e-12

    def test_be_implies_bl_over_battery(self, fd_model):
        for name, f in battery_functions(fd_model, seed=1):
            scale = float(np.max(np.abs(gamma2(fd_model, f))))
            tol = 20 * fd_model.step * max(scale, 1.0)
            for t in np.linspace(0.05, 2.0, 10):
                worst = float(np.min(check_bl(fd_model, f, float(t), 2.0, 3.0)))
                assert worst >= -tol, (name, t, worst, tol)

    def test_bl_derivative_recovers_be(self):
        # d/dt of the BL margin at 0+ equals twice the pointwise BE margin
        for gen, k, n_dim in (
            (two_point_space(1.0), 0.5, 2.0),
            (path_generator([1.0, 0.7, 1.3], [0.2, 0.3, 0.3, 0.2]), 0.3, 4.0),
            (cycle_generator(6, 1.1), 0.4, 3.0),
        ):
            rng = np.random.default_rng(6)
            f = rng.standard_normal(gen.n)
            be = check_be(gen, f, np.ones(gen.n), k, n_dim).pointwise_margins
            t = 1e-3
            fd = check_bl(gen, f, t, k, n_dim) / (2 * t)
            rel = np.abs(fd - be) / np.maximum(np.abs(be), 1e-12)
            assert np.max(rel) <= 0.05

    def test_requires_positive_time(self):
        with pytest.raises(ValueError):
            check_bl(two_point_space(1.0), np.array([0.0, 1.0]), 0.0, 0.5, 2.0)


class TestRicNV:
    def test_flat_potential(self):
        sp = flat_space(0.0, 1.0, 200)
        ric = ric_nv_1d(sp, 5.0)
        assert np.max(np.abs(ric.values)) <= 1e-10

    def test_model_potential_exact_constant(self):
        sp = model_space(2.0, 3.0, 2000)
        ric = ric_nv_1d(sp, 3.0)
        assert np.max(np.abs(ric.values - 2.0)) <= 1e-6

    def test_gaussian_large_n_limit(self):
        sp_grid = np.linspace(-1.0, 1.0, 2001)
        from cdtk.convexity import ScalarFunctionGrid
        from cdtk.metric_measure import WeightedInterval

        sp = WeightedInterval(ScalarFunctionGrid(-1.0, 1.0, sp_grid**2 / 2))
        ric = ric_nv_1d(sp, 1e8)
        assert np.max(np.abs(ric.values - 1.0)) <= 1e-6

    def test_requires_n_above_one(self):
        with pytest.raises(ValueError):
            ric_nv_1d(flat_space(0, 1, 64), 1.0)


class TestSpectralGap:
    def test_two_point_gap(self):
        lam, vec = spectral_gap(two_point_space(1.7))
        assert lam == pytest.approx(2 * 1.7, abs=1e-12)
        # eigenfunction is m-orthogonal to constants
        gen = two_point_space(1.7)
        assert abs(float(vec @ gen.m)) <= 1e-10

    def test_neumann_laplacian(self):
        gen = build_fd_generator(flat_space(0.0, 1.0, 2000))
        lam, _ = spectral_gap(gen)
        assert lam == pytest.approx(math.pi**2, abs=1e-3)

    def test_model_space_sharp(self):
        gen = build_fd_generator(model_space(2.0, 3.0, 2000))
        lam, _ = spectral_gap(gen)
        assert lam == pytest.approx(3.0, abs=1e-3)

    def test_eigenpair_identity(self, fd_model):
        lam, psi = spectral_gap(fd_model)
        lhs = fd_model.integrate(gamma_bilinear(fd_model, psi, fd_model.apply(psi)))
        rhs = -lam * fd_model.integrate(gamma(fd_model, psi))
        assert abs(lhs - rhs) <= 1e-9 * max(abs(rhs), 1.0)


class TestLichnerowicz:
    def test_model_margin_near_zero(self):
        gen = build_fd_generator(model_space(2.0, 3.0, 2000))
        margin = check_lichnerowicz(gen, 2.0, 3.0)
        assert abs(margin) <= 1e-3

    def test_flat_circle_trivial_bound(self):
        assert check_lichnerowicz(cycle_generator(10, 1.0), 0.0, 3.0) >= 0.0

    def test_detects_inflated_curvature(self):
        gen = build_fd_generator(model_space(2.0, 3.0, 500))
        assert check_lichnerowicz(gen, 2.5, 3.0) < -0.5


class TestJsonRoundTrip:
    def test_generator_round_trip(self):
        gen = path_generator([1.0, 0.5], [0.3, 0.4, 0.3])
        back = generator_from_json(generator_to_json(gen))
        np.testing.assert_allclose(back.matrix, gen.matrix)
        np.testing.assert_allclose(back.m, gen.m)

    def test_detailed_balance_enforced_on_import(self):
        bad = '{"matrix": [[-1.0, 1.0], [2.0, -2.0]], "weights": [0.5, 0.5]}'
        with pytest.raises(ValueError):
            generator_from_json(bad)
