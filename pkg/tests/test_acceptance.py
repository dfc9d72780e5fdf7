"""End-to-end acceptance suite.

Ten criteria certify the package at benchmark parameters: the two closed
forms, the virial-identity ledger, the nondegeneracy and Morse/oscillation
suites over a 16-point (s, alpha) sweep, the interpolation-constant table,
the branch endgame, the seed-independence experiment, and the kernel and
extension certificate batteries. Each test prints one pass/fail line.
"""

import time

import numpy as np
import pytest

from fracground.continuation import (
    continue_branch,
    lambda_star,
    uniqueness_experiment,
    verify_limit,
)
from fracground.extension import (
    c_constant,
    extend,
    neumann_trace,
    nodal_domains,
    scalar_profile_identity,
    trace_energy_ratio,
    trace_inequality_trials,
    weight_exponent,
)
from fracground.grids import Field, make_grid
from fracground.groundstate import (
    ModelParams,
    alpha_max,
    classical_soliton,
    gn_constant,
    half_laplacian_soliton,
    pohozaev_certified,
    solve_robust,
)
from fracground.kernels import (
    check_heat_kernel_bounds,
    heat_kernel,
    poisson_kernel,
    resolvent_mass,
    resolvent_two_route_deviation,
)
from fracground.linearization import (
    build_lplus,
    kernel_residual,
    morse_index_even,
    perron_checks,
    sign_changes,
    spectrum,
    spectrum_solution,
)

SWEEP_S = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]
SWEEP_ALPHA = [1.0, 2.0]


def announce(capsys, num, label, ok):
    with capsys.disabled():
        print(f"\n[criterion {num:02d}] {'PASS' if ok else 'FAIL'} — {label}")
    assert ok


@pytest.fixture(scope="module")
def sweep():
    """Solutions and sector spectra at every admissible sweep point."""
    data = {}
    for s in SWEEP_S:
        for alpha in SWEEP_ALPHA:
            assert alpha < alpha_max(s)
            sol = spectrum_solution(ModelParams(s=s, alpha=alpha))
            even = spectrum(build_lplus(sol, "even"), n_fields=2)
            odd = spectrum(build_lplus(sol, "odd"), n_fields=1)
            data[(s, alpha)] = (sol, even, odd)
    return data


def test_01_algebraic_soliton_benchmark(capsys):
    t0 = time.perf_counter()
    grid = make_grid(400.0, 2 ** 14)
    sol = solve_robust(ModelParams(s=0.5, alpha=1.0), grid)
    ref = half_laplacian_soliton(grid)
    win = np.abs(grid.x) <= 10.0
    dev = float(np.max(np.abs(sol.field.values - ref.values)[win])
                / np.max(np.abs(ref.values[win])))
    elapsed = time.perf_counter() - t0
    ok = sol.converged and dev <= 1e-3 and elapsed < 30.0
    announce(capsys, 1,
             f"s=1/2 closed form: max rel dev {dev:.2e} (tol 1e-3), "
             f"{elapsed:.1f}s (< 30s)", ok)


def test_02_classical_soliton_benchmark(capsys):
    t0 = time.perf_counter()
    grid = make_grid(128.0, 2048)
    devs = []
    for alpha in (1.0, 2.0, 3.0):
        sol = solve_robust(ModelParams(s=1.0, alpha=alpha), grid)
        ref = classical_soliton(grid, alpha)
        win = np.abs(grid.x) <= 10.0
        devs.append(float(np.max(np.abs(sol.field.values - ref.values)[win])
                          / np.max(np.abs(ref.values[win]))))
    elapsed = time.perf_counter() - t0
    ok = max(devs) <= 1e-8 and elapsed < 10.0
    announce(capsys, 2,
             f"s=1 closed forms (alpha=1,2,3): worst rel dev "
             f"{max(devs):.2e} (tol 1e-8), {elapsed:.1f}s (< 10s)", ok)


def test_03_virial_identity_ledger(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for s in SWEEP_S:
        for alpha in SWEEP_ALPHA:
            cert = pohozaev_certified(ModelParams(s=s, alpha=alpha))
            assert all(sol.converged for sol in cert.solutions)
            worst = max(worst, cert.r_mass, cert.r_kinetic)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-5 and elapsed < 300.0
    announce(capsys, 3,
             f"virial identities over the 16-point sweep: worst residual "
             f"{worst:.2e} (tol 1e-5), {elapsed:.0f}s (< 300s)", ok)


def test_04_nondegeneracy_suite(sweep, capsys):
    worst_kernel, worst_odd, worst_gap = 0.0, 0.0, np.inf
    for (s, alpha), (sol, even, odd) in sweep.items():
        lam = sol.params.lam
        worst_kernel = max(worst_kernel, kernel_residual(sol))
        worst_odd = max(worst_odd, abs(odd.eigenvalues[0]) / lam)
        worst_gap = min(worst_gap,
                        np.min(np.abs(even.eigenvalues)) / (1e-3 * lam))
    ok = worst_kernel <= 1e-3 and worst_odd <= 1e-4 and worst_gap > 1.0
    announce(capsys, 4,
             f"nondegeneracy over the sweep: |L+ Q'| ratio {worst_kernel:.2e} "
             f"(tol 1e-3), odd zero mode {worst_odd:.2e} (tol 1e-4), even "
             f"gap margin x{worst_gap:.1f} (> 1 required)", ok)


def test_05_morse_and_oscillation(sweep, capsys):
    ok = True
    detail = ""
    for (s, alpha), (sol, even, odd) in sweep.items():
        point_ok = (
            morse_index_even(even) == 1
            and perron_checks(even, odd)["sign_definite"]
            and sign_changes(even.fields[1]) == 1
            and nodal_domains(extend(even.fields[1], s)) == 2)
        if not point_ok and not detail:
            detail = f" (first failure at s={s}, alpha={alpha})"
        ok = ok and point_ok
    announce(capsys, 5,
             "Morse index 1, sign-definite ground mode, one sign change and "
             "2 nodal domains for the second even mode, at all 16 sweep "
             "points" + detail, ok)


def test_06_interpolation_constant(sweep, capsys):
    ref = 3.0 / (2.0 * np.sqrt(np.pi))
    c_half = gn_constant(sweep[(0.5, 1.0)][0])
    table = {key: gn_constant(sol) for key, (sol, _, _) in sweep.items()}
    vals = np.array(list(table.values()))
    bounded = bool(np.all(np.isfinite(vals)) and np.all(vals > 0.0)
                   and np.max(vals) < 10.0)
    dev = abs(c_half - ref) / ref
    ok = dev <= 1e-3 and bounded
    announce(capsys, 6,
             f"sharp interpolation constant at (1/2, 1): rel dev {dev:.2e} "
             f"(tol 1e-3); sweep table bounded in (0, 10): {bounded}", ok)


def test_07_continuation_endgame(capsys):
    t0 = time.perf_counter()
    start = solve_robust(ModelParams(s=0.9, alpha=2.0),
                         make_grid(192.0, 2048))
    branch = continue_branch(start, 0.999)
    limit = verify_limit(branch)
    power_worst = max(pt.monitors["power_defect"] for pt in branch.points)
    elapsed = time.perf_counter() - t0
    ok = (branch.termination == "reached-target"
          and limit["lambda_deviation"] <= 1e-2
          and limit["field_deviation"] <= 1e-2
          and power_worst <= 1e-8
          and elapsed < 900.0)
    announce(capsys, 7,
             f"branch (0.9, 2) -> 0.999 [{branch.termination}]: lam dev "
             f"{limit['lambda_deviation']:.2e}, field dev "
             f"{limit['field_deviation']:.2e} (tol 1e-2), power drift "
             f"{power_worst:.2e} (tol 1e-8), {elapsed:.0f}s (< 900s)", ok)


def test_08_seed_independence(capsys):
    grid = make_grid(256.0, 2048)
    x = grid.x
    seeds = [np.exp(-x ** 2), np.exp(-x ** 2 / 9.0), 1.0 / (1.0 + x ** 4)]
    result = uniqueness_experiment(1.0, 0.5, seeds, grid, s_target=0.6)
    state_dev = max(result["state_deviations"])
    branch_dev = max(result["branch_deviations"] + result["lambda_deviations"])
    ok = (state_dev <= 1e-3 and result["states_coincide"]
          and result["branches_coincide"])
    announce(capsys, 8,
             f"3 independent seeds at (1/2, 1): state deviation "
             f"{state_dev:.2e} (tol 1e-3), branch deviation "
             f"{branch_dev:.2e} (tol 10x Newton tol)", ok)


def test_09_kernel_certificates(capsys):
    x = np.linspace(-50.0, 50.0, 2001)
    poisson_dev = float(np.max(np.abs(heat_kernel(0.5, 1.0, x)
                                      - poisson_kernel(1.0, x))))
    worst_route, worst_mass, bound_ok = 0.0, 0.0, True
    probes = np.array([0.1, 0.5, 1.0, 3.0, 10.0])
    for s in (0.3, 0.5, 0.7, 0.9):
        bounds = check_heat_kernel_bounds(s, 1.0, x)
        bound_ok = bound_ok and bounds["x_bound"] <= 1.0 / np.pi + 1e-12
        worst_route = max(worst_route,
                          resolvent_two_route_deviation(s, 1.0, probes))
        worst_mass = max(worst_mass, abs(resolvent_mass(s, 1.0) - 1.0))
    ok = (poisson_dev <= 1e-8 and bound_ok
          and worst_route <= 1e-5 and worst_mass <= 1e-6)
    announce(capsys, 9,
             f"kernels: Poisson oracle {poisson_dev:.2e} (tol 1e-8), "
             f"|xK| <= 1/pi: {bound_ok}, two-route {worst_route:.2e} "
             f"(tol 1e-5), mass defect {worst_mass:.2e} (tol 1e-6)", ok)


def test_10_extension_certificates(capsys):
    grid = make_grid(60.0, 512)
    x = grid.x
    tests = [Field(grid, np.exp(-x ** 2)),
             Field(grid, 1.0 / (1.0 + x ** 2)),
             Field(grid, np.exp(-(x - 2.0) ** 2) + np.exp(-(x + 2.0) ** 2))]
    worst_ratio = 0.0
    for s in (0.3, 0.5, 0.7):
        for f in tests:
            worst_ratio = max(worst_ratio,
                              abs(trace_energy_ratio(extend(f, s)) - 1.0))
    worst_scalar = max(
        abs(scalar_profile_identity(weight_exponent(s))
            - c_constant(weight_exponent(s)))
        for s in (0.3, 0.5, 0.7))
    trials = trace_inequality_trials(tests[0], 0.5, n_trials=20, seed=0)
    neumann = neumann_trace(extend(tests[0], 0.5), [1e-1, 1e-2, 1e-3])
    ok = (worst_ratio <= 1e-3 and worst_scalar <= 1e-6
          and trials["all_strict"] and neumann["decreasing"])
    announce(capsys, 10,
             f"extension: energy ratio dev {worst_ratio:.2e} (tol 1e-3), "
             f"scalar identity {worst_scalar:.2e} (tol 1e-6), 20/20 strict "
             f"trace trials: {trials['all_strict']}, Neumann deviation "
             f"decreasing: {neumann['decreasing']}", ok)
