"""Oracle tests for the weighted half-plane extension machinery.

Closed forms used: c_0 = 1 and c_(1/2) = sqrt(2) Gamma(3/4)/Gamma(1/4);
the reciprocal law c_a c_(-a) = 1; the exponential profile m_0(r) = e^(-r)
(half-integer Bessel); the harmonic extension of a single cosine mode at
s = 1/2; scipy's modified Bessel function as an independent oracle for the
profile table; and the unit mass of the convolution kernel.
"""

import numpy as np
import pytest
from scipy.special import gamma, kv

from fracground.extension import (
    ExtensionError,
    ExtensionField,
    boundary_convergence,
    c_constant,
    convolution_cross_check,
    damped_copy,
    dirichlet_energy,
    extend,
    harmonicity_residual,
    kernel_mass,
    neumann_trace,
    nodal_domains,
    profile_m,
    profile_table,
    rayleigh_eigen_check,
    scalar_profile_identity,
    trace_energy_ratio,
    trace_inequality_trials,
    weight_exponent,
)
from fracground.grids import Field, make_grid


GRID = make_grid(60.0, 512)
GAUSS = Field(GRID, np.exp(-GRID.x ** 2))
LORENTZ = Field(GRID, 1.0 / (1.0 + GRID.x ** 2))
TWO_BUMP = Field(GRID, np.exp(-(GRID.x - 3.0) ** 2)
                 + 0.7 * np.exp(-(GRID.x + 2.5) ** 2 / 2.0))


class TestConstants:
    def test_values(self):
        assert c_constant(0.0) == pytest.approx(1.0, abs=1e-14)
        ref = np.sqrt(2.0) * gamma(0.75) / gamma(0.25)
        assert c_constant(0.5) == pytest.approx(ref, rel=1e-14)

    def test_reciprocal_law(self):
        for a in (0.3, 0.6):
            assert c_constant(a) * c_constant(-a) == pytest.approx(1.0, rel=1e-13)

    def test_pole(self):
        for a in (1.0, -1.0, 1.5):
            with pytest.raises(ExtensionError):
                c_constant(a)

    def test_weight_exponent_domain(self):
        assert weight_exponent(0.25) == pytest.approx(0.5)
        assert weight_exponent(1.0) == pytest.approx(-1.0)
        for s in (0.0, 1.3):
            with pytest.raises(ExtensionError):
                weight_exponent(s)


class TestProfile:
    def test_bessel_oracle(self):
        r = np.geomspace(1e-6, 100.0, 60)
        for a in (-0.5, -0.4, 0.0, 0.4, 0.5):
            nu = (1.0 - a) / 2.0
            ref = (2.0 / gamma(nu)) * (r / 2.0) ** nu * kv(nu, r)
            assert np.max(np.abs(profile_m(a, r) - ref)) < 1e-9

    def test_exponential_closed_form(self):
        r = np.linspace(0.0, 30.0, 301)
        assert np.max(np.abs(profile_m(0.0, r) - np.exp(-r))) < 1e-10

    def test_value_one_at_origin(self):
        for a in (-0.5, 0.0, 0.5):
            assert profile_m(a, np.array([0.0]))[0] == pytest.approx(1.0, abs=1e-12)

    def test_table_invariants(self):
        r = np.geomspace(1e-8, 50.0, 400)
        for a in (-0.6, 0.0, 0.6):
            tab = profile_table(a, r)
            assert np.all(tab.m > 0.0)
            assert np.all(tab.m <= 1.0)
            assert np.all(np.diff(tab.m) < 0.0)
            assert np.all(tab.mprime < 0.0)

    def test_derivative_boundary_limit(self):
        a = 0.4
        got = 1e-4 ** a * profile_m(a, np.array([1e-4]), deriv=True)[0]
        assert abs(got + c_constant(a)) < 1e-3

    def test_rejects_negative_abscissae(self):
        with pytest.raises(ExtensionError):
            profile_m(0.2, np.array([-1.0]))


class TestExtend:
    def test_harmonic_cosine_mode(self):
        # at s = 1/2 a cosine mode extends with an exponential profile
        f = Field(GRID, np.cos(2.0 * np.pi * GRID.x / GRID.length))
        ext = extend(f, 0.5)
        ref = (np.exp(-2.0 * np.pi * ext.levels / GRID.length)[:, None]
               * f.values[None, :])
        assert np.max(np.abs(ext.values - ref)) < 1e-10

    def test_zero_field(self):
        ext = extend(Field(GRID, np.zeros(GRID.n)), 0.6)
        assert np.max(np.abs(ext.values)) == 0.0

    def test_boundary_slice_convergence(self):
        devs = boundary_convergence(extend(GAUSS, 0.7), [1e-1, 1e-2, 1e-3])
        assert devs[0] > devs[1] > devs[2]

    def test_kernel_mass(self):
        for a in (-0.4, 0.0, 0.4):
            assert kernel_mass(a) == pytest.approx(1.0, abs=1e-10)

    def test_convolution_route(self):
        for s in (0.3, 0.5, 0.7):
            assert convolution_cross_check(extend(GAUSS, s)) < 1e-5


class TestEnergy:
    def test_identity_ratio(self):
        for s in (0.3, 0.5, 0.7):
            for f in (GAUSS, LORENTZ, TWO_BUMP):
                assert trace_energy_ratio(extend(f, s)) == pytest.approx(
                    1.0, abs=1e-3)

    def test_scalar_identity(self):
        for a in (-0.4, 0.0, 0.4):
            assert abs(scalar_profile_identity(a) - c_constant(a)) < 1e-6

    def test_damped_field_exceeds_bound(self):
        ext = extend(GAUSS, 0.5)
        assert trace_energy_ratio(damped_copy(ext)) > 1.0 + 1e-3

    def test_random_trials_strict(self):
        report = trace_inequality_trials(GAUSS, 0.4, n_trials=20, seed=1)
        assert report["all_strict"]
        assert len(report["trial_energies"]) == 20
        assert report["extension_energy"] == pytest.approx(
            report["bound"], rel=1e-3)

    def test_harmonicity_refines_at_least_second_order(self):
        for s in (0.3, 0.7):
            r1 = harmonicity_residual(extend(GAUSS, s, n_levels=256))
            r2 = harmonicity_residual(extend(GAUSS, s, n_levels=512))
            assert r2 < r1 / 4.0


class TestNeumann:
    def test_cosine_closed_form(self):
        # -d_y u at y = eps equals (2 pi / L) f + O(eps) for the harmonic
        # extension of a single cosine mode
        f = Field(GRID, np.cos(2.0 * np.pi * GRID.x / GRID.length))
        report = neumann_trace(extend(f, 0.5), [1e-1, 1e-2, 1e-3])
        xi0 = 2.0 * np.pi / GRID.length
        for eps, dev in zip(report["eps"], report["deviations"]):
            assert dev < 2.0 * xi0 * eps

    def test_decreasing_deviation(self):
        for s in (0.5, 0.7):
            report = neumann_trace(extend(GAUSS, s), [1e-1, 1e-2, 1e-3])
            assert report["decreasing"]

    def test_zero_trace(self):
        report = neumann_trace(extend(Field(GRID, np.zeros(GRID.n)), 0.6),
                               [1e-2])
        assert report["deviations"][0] == 0.0


class TestNodal:
    def test_synthetic_checkerboard(self):
        grid = make_grid(16.0, 64)
        levels = np.geomspace(0.01, 10.0, 40)
        xblock = np.sign(np.sin(2.0 * np.pi * grid.x / grid.length * 2))
        vals = np.outer(np.ones(40), xblock)
        vals[20:] *= -1.0  # 4 sign blocks in x, flipped halfway up: 8 domains
        ext = ExtensionField(grid=grid, s=0.5, levels=levels, values=vals)
        assert nodal_domains(ext) == 8

    def test_positive_field_single_domain(self):
        assert nodal_domains(extend(GAUSS, 0.5)) == 1

    def test_one_sign_change_two_domains(self):
        f = Field(GRID, (1.0 - GRID.x ** 2) * np.exp(-GRID.x ** 2 / 2.0))
        assert nodal_domains(extend(f, 0.5)) == 2


class TestRayleigh:
    def test_ground_state_eigenpair(self):
        # the soliton 2/(1+x^2) solves the s=1/2, cubic-nonlinearity-free
        # equation; its linearized operator has the translation eigenfield
        # at eigenvalue 0 and a sign-definite bottom eigenfield below it
        from fracground.groundstate import ModelParams, half_laplacian_soliton
        from fracground.linearization import build_lplus, spectrum
        from fracground.groundstate import GroundState

        grid = make_grid(200.0, 2048)
        params = ModelParams(s=0.5, alpha=1.0)
        q = half_laplacian_soliton(grid)
        sol = GroundState(field=q, params=params, iterations=0, residual=0.0,
                          converged=True, multiplier_drift=0.0, wall_time=0.0)
        spec = spectrum(build_lplus(sol, parity="even"), n_fields=2)
        for idx in (0, 1):
            mu = spec.eigenvalues[idx]
            psi = spec.fields[idx]
            psi = Field(grid, psi.values / np.sqrt(
                np.sum(psi.values ** 2) * grid.h))
            potential = Field(grid, params.lam - 2.0 * q.values)
            dev = rayleigh_eigen_check(psi, potential, mu, 0.5)
            assert dev < 1e-3
