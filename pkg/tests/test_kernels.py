"""Oracle tests for heat and resolvent kernels.

Closed forms used: Cauchy/Poisson kernel at s = 1/2, Gaussian at s = 1,
the exponential resolvent e^(-sqrt(lam)|x|)/(2 sqrt(lam)) at s = 1, the
peak value Gamma(1/2s) t^(-1/2s)/(2 pi s), the on-diagonal resolvent
lam^(1/2s - 1) / (2s sin(pi/2s)) for s > 1/2, and the total masses
(1 for the heat kernel, 1/lam for the resolvent).
"""

import numpy as np
import pytest
from scipy.special import gamma

from fracground.grids import make_grid
from fracground.kernels import (
    check_heat_kernel_bounds,
    check_resolvent_bounds,
    gauss_kernel,
    heat_kernel,
    heat_kernel_peak,
    poisson_kernel,
    resolvent_kernel,
    resolvent_mass,
    resolvent_two_route_deviation,
    semigroup_check,
)


X_WIDE = np.linspace(-20.0, 20.0, 401)


class TestHeatKernel:
    def test_poisson_oracle(self):
        for t in (0.3, 1.0, 4.0):
            k = heat_kernel(0.5, t, X_WIDE)
            assert np.max(np.abs(k - poisson_kernel(t, X_WIDE))) < 1e-10

    def test_poisson_oracle_interp(self):
        k = heat_kernel(0.5, 1.0, X_WIDE, method="interp")
        assert np.max(np.abs(k - poisson_kernel(1.0, X_WIDE))) < 1e-8

    def test_gaussian_oracle(self):
        for t in (0.5, 2.0):
            k = heat_kernel(1.0, t, X_WIDE)
            assert np.max(np.abs(k - gauss_kernel(t, X_WIDE))) < 1e-10

    def test_peak_closed_form(self):
        for s in (0.3, 0.5, 0.7, 0.9, 1.0):
            got = heat_kernel(s, 1.7, np.array([0.0]))[0]
            assert got == pytest.approx(heat_kernel_peak(s, 1.7), rel=1e-10)

    def test_self_similarity(self):
        # K_t(x) = t^(-1/2s) K_1(t^(-1/2s) x)
        s, t = 0.4, 2.3
        scale = t ** (-1.0 / (2 * s))
        k_t = heat_kernel(s, t, X_WIDE)
        k_1 = heat_kernel(s, 1.0, scale * X_WIDE)
        assert np.max(np.abs(k_t - scale * k_1)) < 1e-10

    def test_interp_matches_quad(self):
        for s in (0.3, 0.6, 0.9):
            a = heat_kernel(s, 0.8, X_WIDE, method="interp")
            b = heat_kernel(s, 0.8, X_WIDE, method="quad")
            assert np.max(np.abs(a - b)) < 1e-8 * b.max()

    def test_bounds_certificate(self):
        xs = np.linspace(-50.0, 50.0, 2001)
        for s in (0.3, 0.5, 0.7, 1.0):
            rep = check_heat_kernel_bounds(s, 1.0, xs)
            assert rep["positive"]
            assert rep["x_bound_ok"]
            assert rep["x_bound"] <= 1.0 / np.pi + 1e-12
            assert rep["unimodal"]
            assert rep["peak_matches"]

    def test_poisson_xk_bound_sharp_value(self):
        # for the Cauchy kernel max |x K_t| = 1/(2 pi), safely below 1/pi
        rep = check_heat_kernel_bounds(0.5, 1.0, np.linspace(-30, 30, 4001))
        # tolerance reflects the abscissa spacing around the maximizer x = t
        assert rep["x_bound"] == pytest.approx(1.0 / (2 * np.pi), rel=1e-4)

    def test_algebraic_tail_constant(self):
        # K_1(z) z^(1+2s) -> sin(pi s) Gamma(2s+1) / pi as z -> inf
        for s in (0.3, 0.45, 0.7):
            z = np.array([3000.0, 6000.0])
            lead = np.sin(np.pi * s) * gamma(2 * s + 1) / np.pi
            ratio = heat_kernel(s, 1.0, z, method="interp") * z ** (1 + 2 * s) / lead
            assert np.max(np.abs(ratio - 1.0)) < 1e-2

    def test_mass_unit(self):
        xs = np.linspace(-4000.0, 4000.0, 2 ** 17 + 1)
        for s in (0.5, 0.8):
            k = heat_kernel(s, 1.0, xs, method="interp")
            assert np.trapezoid(k, xs) == pytest.approx(1.0, abs=5e-4)


class TestSemigroup:
    def test_poisson_point(self):
        grid = make_grid(400.0, 2 ** 12)
        assert semigroup_check(0.5, 1.0, 1.0, grid) < 1e-6

    def test_gaussian_point(self):
        grid = make_grid(400.0, 2 ** 12)
        assert semigroup_check(1.0, 0.5, 1.5, grid) < 1e-6

    def test_generic_point(self):
        grid = make_grid(400.0, 2 ** 12)
        assert semigroup_check(0.6, 0.7, 0.7, grid) < 1e-5

    def test_small_s_resolved_times(self):
        # for s = 0.3 the kernel at small t is narrower than this spacing,
        # so only well-resolved times are meaningful on the L=400 grid
        grid = make_grid(400.0, 2 ** 12)
        assert semigroup_check(0.3, 2.0, 3.0, grid) < 1e-5


class TestResolvent:
    def test_exponential_oracle_s1(self):
        lam = 1.7
        x = np.array([0.2, 0.5, 1.0, 3.0, 8.0])
        g = resolvent_kernel(1.0, lam, x)
        ref = np.exp(-np.sqrt(lam) * np.abs(x)) / (2 * np.sqrt(lam))
        assert np.max(np.abs(g - ref)) < 1e-10

    def test_on_diagonal_closed_form(self):
        # int_0^inf du/(u^p + lam) = (pi/p)/sin(pi/p) lam^(1/p - 1), p = 2s
        for s, lam in ((0.7, 1.0), (0.9, 2.5)):
            p = 2 * s
            ref = lam ** (1.0 / p - 1.0) / (p * np.sin(np.pi / p))
            got = resolvent_kernel(s, lam, np.array([0.0]))[0]
            assert got == pytest.approx(ref, rel=1e-9)

    def test_diverges_at_origin_small_s(self):
        with pytest.raises(ValueError):
            resolvent_kernel(0.4, 1.0, np.array([0.0]))

    def test_two_route_agreement(self):
        x = np.array([0.1, 0.5, 1.0, 3.0, 10.0, 20.0])
        for s in (0.3, 0.5, 0.7, 0.9):
            assert resolvent_two_route_deviation(s, 1.0, x) < 1e-5

    def test_two_route_other_lambda(self):
        x = np.array([0.2, 1.0, 5.0])
        assert resolvent_two_route_deviation(0.6, 2.5, x) < 1e-5

    def test_mass(self):
        for s in (0.3, 0.5, 0.7, 0.9):
            assert abs(resolvent_mass(s, 1.0) - 1.0) < 1e-6
        assert abs(resolvent_mass(0.6, 1.7) - 1.0 / 1.7) < 1e-6

    def test_bounds_certificate(self):
        x = np.array([0.05, 0.1, 0.5, 1.0, 5.0, 20.0])
        for s, lam in ((0.3, 1.0), (0.5, 1.0), (0.8, 3.0)):
            rep = check_resolvent_bounds(s, lam, x)
            assert rep["positive"]
            assert rep["pointwise_bound_ok"]
            assert rep["monotone"]
