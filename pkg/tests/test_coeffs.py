"""Coefficient definitions, frozen high-precision values, and identities."""

import math

import numpy as np
import pytest

from cdtk.coeffs import (
    ExtendedReal,
    c_kappa,
    e_kappa,
    g_interp,
    s_kappa,
    sigma,
    sigma_array,
)

# frozen with mpmath at 40 digits
SINH_1 = 1.1752011936438014568823818505956
COSH_1 = 1.5430806348152437784779056207571
E_MINUS_1 = 1.7182818284590452353602874713527
G_HALF_EXAMPLE = 0.5643650709267499038141072767261  # log[sin(.5)/sin(1) (e + 1/e)]


class TestComparisonFunctions:
    def test_s_kappa_zero_curvature(self):
        assert s_kappa(0.0, 2.5) == 2.5

    def test_s_kappa_positive(self):
        assert s_kappa(1.0, math.pi / 2) == pytest.approx(1.0, abs=1e-15)

    def test_s_kappa_negative(self):
        assert s_kappa(-1.0, 1.0) == pytest.approx(SINH_1, abs=1e-14)

    def test_c_kappa_zero(self):
        assert c_kappa(0.0, 7.3) == 1.0

    def test_c_kappa_positive(self):
        assert c_kappa(1.0, math.pi) == pytest.approx(-1.0, abs=1e-15)

    def test_c_kappa_negative(self):
        # c_{-4}(0.5) = cosh(2 * 0.5) = cosh(1)
        assert c_kappa(-4.0, 0.5) == pytest.approx(COSH_1, abs=1e-14)

    def test_continuity_in_kappa_at_zero(self):
        for kappa in (1e-12, -1e-12):
            assert s_kappa(kappa, 1.7) == pytest.approx(1.7, abs=1e-12)

    def test_vectorized(self):
        th = np.array([0.0, 0.5, 1.0])
        np.testing.assert_allclose(s_kappa(1.0, th), np.sin(th), atol=1e-15)
        np.testing.assert_allclose(c_kappa(-1.0, th), np.cosh(th), atol=1e-15)


class TestSigma:
    def test_zero_product_branch(self):
        assert sigma(0.0, 0.37, 5.0).value == 0.37
        assert sigma(3.0, 0.37, 0.0).value == 0.37

    def test_ratio_branch(self):
        assert sigma(1.0, 0.5, math.pi / 2).value == pytest.approx(
            math.sqrt(0.5), abs=1e-15
        )

    def test_singular_regime(self):
        assert sigma(1.0, 0.5, math.pi).is_infinite
        assert sigma(2.0, 1.0, 3.0).is_infinite  # kappa theta^2 = 18 > pi^2

    def test_boundary_values(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            kappa = rng.uniform(-4, 4)
            theta = rng.uniform(0, 2)
            if kappa * theta**2 >= math.pi**2:
                continue
            assert sigma(kappa, 0.0, theta).value == 0.0
            assert sigma(kappa, 1.0, theta).value == pytest.approx(1.0, abs=1e-14)

    def test_series_matches_ratio_at_cutoff(self):
        # both branches agree where they meet
        t = 0.37
        for z in (9e-7, -9e-7, 2e-6, -2e-6):
            theta = 1.3
            kappa = z / theta**2
            direct = s_kappa(kappa, t * theta) / s_kappa(kappa, theta)
            assert sigma(kappa, t, theta).value == pytest.approx(direct, abs=1e-13)

    def test_array_form_flags_singular(self):
        vals, singular = sigma_array(1.0, np.array([0.2, 0.5]), np.array([1.0, math.pi]))
        assert not singular[0] and singular[1]
        assert np.isinf(vals[1])
        assert vals[0] == pytest.approx(math.sin(0.2) / math.sin(1.0), abs=1e-14)


class TestEKappa:
    def test_zero(self):
        assert e_kappa(0.0, 3.0) == 3.0

    def test_unit(self):
        assert e_kappa(1.0, 1.0) == pytest.approx(E_MINUS_1, abs=1e-15)

    def test_empty_integral(self):
        assert e_kappa(-2.0, 0.0) == 0.0

    def test_small_kappa_t_stability(self):
        # quadrature-free series comparison: e_k(t) = t + k t^2/2 + ...
        k, t = 1e-9, 2.0
        assert e_kappa(k, t) == pytest.approx(t + k * t * t / 2, rel=1e-12)


class TestGInterp:
    def test_flat_case(self):
        assert g_interp(0.5, 0.0, 0.0, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_endpoint_degeneracy(self):
        for a, b, kappa in [(3.0, -7.0, 2.0), (-1.0, 4.0, -5.0)]:
            assert g_interp(0.0, a, b, kappa) == pytest.approx(a, abs=1e-12)
            assert g_interp(1.0, a, b, kappa) == pytest.approx(b, abs=1e-12)

    def test_half_point_value(self):
        assert g_interp(0.5, 1.0, -1.0, 1.0) == pytest.approx(G_HALF_EXAMPLE, abs=1e-13)

    def test_domain_error(self):
        with pytest.raises(ValueError):
            g_interp(0.5, 0.0, 0.0, math.pi**2)

    def test_monotone_in_arguments(self):
        base = g_interp(0.3, 0.2, -0.4, 1.5)
        assert g_interp(0.3, 0.4, -0.4, 1.5) >= base
        assert g_interp(0.3, 0.2, -0.2, 1.5) >= base


class TestExtendedReal:
    def test_absorption(self):
        inf = ExtendedReal.inf()
        assert (inf + 5.0).is_infinite
        assert (inf * 2.0).is_infinite
        assert (ExtendedReal(2.0) + ExtendedReal(3.0)).value == 5.0

    def test_comparisons_treat_inf_as_maximal(self):
        assert ExtendedReal(1e300) < ExtendedReal.inf()
        assert ExtendedReal.inf() >= ExtendedReal.inf()
        assert not ExtendedReal.inf() < ExtendedReal(1.0)

    def test_nonpositive_factor_rejected(self):
        with pytest.raises(ValueError):
            ExtendedReal.inf() * (-1.0)


class TestIdentities:
    """The randomized identity suite (the acceptance run uses 1e4 cases)."""

    def _draw(self, n, seed=0):
        rng = np.random.default_rng(seed)
        k = rng.uniform(-4.0, 4.0, n)
        n_dim = rng.uniform(0.5, 10.0, n)
        # keep theta inside the positive-curvature window [0, pi sqrt(N/K))
        cap = np.where(k > 0, 0.999 * math.pi / np.sqrt(np.abs(k) / n_dim + 1e-300), 3.0)
        theta = rng.uniform(0.0, 1.0, n) * np.minimum(cap, 3.0)
        return k, n_dim, theta

    def test_sc_trick(self):
        # 1 - c(theta) cancels below kappa theta^2 ~ 1e-3, where doubles
        # cannot express a 1e-12 relative claim; draw past that zone
        k, n_dim, theta = self._draw(30_000)
        keep = np.abs(k / n_dim) * theta**2 >= 1e-3
        k, n_dim, theta = k[keep][:10_000], n_dim[keep][:10_000], theta[keep][:10_000]
        assert len(k) == 10_000
        lhs = np.array([2 / n * s_kappa(ki / n, th / 2) ** 2 for ki, n, th in zip(k, n_dim, theta)])
        rhs = np.array([(1 - c_kappa(ki / n, th)) / ki for ki, n, th in zip(k, n_dim, theta)])
        rel = np.abs(lhs - rhs) / np.abs(rhs)
        assert rel.max() <= 1e-12

    def test_pythagorean(self):
        # relative to the term size: cosh^2 - sinh^2 grows like e^{2|x|}
        k, n_dim, theta = self._draw(10_000, seed=1)
        rel = np.array(
            [
                (c_kappa(ki / n, th) ** 2 + (ki / n) * s_kappa(ki / n, th) ** 2 - 1.0)
                / max(1.0, c_kappa(ki / n, th) ** 2)
                for ki, n, th in zip(k, n_dim, theta)
            ]
        )
        assert np.abs(rel).max() <= 1e-12

    def test_sigma_monotone_in_kappa(self):
        rng = np.random.default_rng(2)
        for _ in range(2000):
            t = rng.uniform(0, 1)
            theta = rng.uniform(0, 2)
            k1 = rng.uniform(-4, 4)
            k2 = k1 + rng.uniform(0, 0.5)
            if k2 * theta**2 >= math.pi**2:
                continue
            assert sigma(k2, t, theta).value >= sigma(k1, t, theta).value - 1e-12

    def test_kappa_continuity_against_taylor(self):
        rng = np.random.default_rng(3)
        for _ in range(500):
            t = rng.uniform(0, 1)
            theta = rng.uniform(0.1, 2)
            kappa = 1e-10 / theta**2
            taylor = t + kappa * (t - t**3) * theta**2 / 6
            assert abs(sigma(kappa, t, theta).value - taylor) <= 1e-8

    def test_g_midpoint_convexity(self):
        rng = np.random.default_rng(4)
        for _ in range(2500):
            t = rng.uniform(0, 1)
            x0, y0, x1, y1 = rng.uniform(-2, 2, 4)
            k0, k1 = rng.uniform(-4, 0.99 * math.pi**2, 2)
            mid = g_interp(t, (x0 + x1) / 2, (y0 + y1) / 2, (k0 + k1) / 2)
            avg = (g_interp(t, x0, y0, k0) + g_interp(t, x1, y1, k1)) / 2
            assert mid <= avg + 1e-10
