"""Command-line surface.

Subcommands: solve | spectrum | continue | kernels | extend | verify-all.
Each command runs its numerical suite, writes a versioned JSON report with
a property ledger (plus CSV/JSONL artifacts and optional PNG figures), and
exits 0 only if every ledger check passes. Usage and precondition errors
exit 2; failed checks exit 1.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .grids import Field, make_grid
from .groundstate import (
    ModelParams,
    check_symmetry_monotonicity,
    classical_soliton,
    default_grid,
    equation_residual,
    gn_constant,
    half_laplacian_soliton,
    pohozaev_residuals,
    solve_robust,
)
from .reports import (
    Report,
    branch_manifest,
    branch_to_jsonl,
    check_eq,
    check_flag,
    check_leq,
    default_output_root,
    extension_to_csv,
    field_to_csv,
    write_report,
)


def _outdir(args, command: str) -> Path:
    root = Path(args.out) if args.out else default_output_root()
    path = root / command
    path.mkdir(parents=True, exist_ok=True)
    return path


def _grid(args, params):
    if args.L is not None or args.N is not None:
        if args.L is None or args.N is None:
            raise ValueError("--L and --N must be given together")
        return make_grid(args.L, args.N)
    return default_grid(params.s)


def _config_echo(args, command: str) -> dict:
    keys = ("s", "alpha", "lam", "L", "N", "tol", "target_s", "seed")
    return {"command": command,
            **{k: getattr(args, k, None) for k in keys}}


# ---------------------------------------------------------------------------

def cmd_solve(args) -> Report:
    params = ModelParams(s=args.s, alpha=args.alpha, lam=args.lam)
    grid = _grid(args, params)
    sol = solve_robust(params, grid, tol=args.tol)
    q = sol.field
    shape = check_symmetry_monotonicity(q, eps=1e-8)
    poho = pohozaev_residuals(sol)
    ledger = [
        check_flag("converged", "the fixed-point/Newton solve converged",
                   sol.converged),
        check_leq("equation_residual",
                  "relative L2 residual of (-Lap)^s Q + lam Q - Q^(alpha+1)",
                  equation_residual(sol.field, sol.params),
                  max(100.0 * args.tol, 1e-8)),
        check_flag("positive", "Q > 0 on the grid", shape["positive"]),
        check_leq("monotone_defect",
                  "largest relative rise of Q on x > 0 (should decay)",
                  shape["monotone_defect"], 1e-8),
        check_leq("even_defect", "relative deviation from Q(x) = Q(-x)",
                  shape["even_defect"], 1e-10),
        check_leq("virial_identity_mass",
                  "lam/2 int Q^2 = (alpha(2s-1)/(4s)+1)/(alpha+2) "
                  "int Q^(alpha+2), relative defect",
                  abs(poho[0]), 1e-3),
        check_leq("virial_identity_seminorm",
                  "1/2 |Q|_{Hs}^2 = (alpha/(4s))/(alpha+2) int Q^(alpha+2), "
                  "relative defect",
                  abs(poho[1]), 1e-3),
    ]
    results = {"grid": {"length": q.grid.length, "n": q.grid.n},
               "iterations": sol.iterations,
               "residual": sol.residual,
               "wall_time": sol.wall_time,
               "peak": float(np.max(q.values))}
    if params.lam == 1.0:
        results["gagliardo_nirenberg_constant"] = gn_constant(sol)
    if params.s == 0.5 and params.alpha == 1.0 and params.lam == 1.0:
        ref = half_laplacian_soliton(q.grid)
        win = np.abs(q.grid.x) <= 10.0
        dev = float(np.max(np.abs(q.values - ref.values)[win]))
        ledger.append(check_leq(
            "algebraic_soliton_deviation",
            "max |Q - 2/(1+x^2)| on |x| <= 10", dev, 1e-3))
    if params.s == 1.0 and params.lam == 1.0:
        ref = classical_soliton(q.grid, params.alpha)
        win = np.abs(q.grid.x) <= 10.0
        dev = float(np.max(np.abs(q.values - ref.values)[win]))
        ledger.append(check_leq(
            "classical_soliton_deviation",
            "max |Q - scaled sech profile| on |x| <= 10", dev, 1e-8))

    out = _outdir(args, "solve")
    field_to_csv(q, out / "solution.csv")
    if args.plots:
        from .figures import render_field
        render_field(q, out / "solution.png")
    report = Report("solve", _config_echo(args, "solve"), results, ledger)
    write_report(report, out / "report.json")
    return report


def cmd_spectrum(args) -> Report:
    from .linearization import (
        build_lplus,
        coercivity_check,
        kernel_residual,
        morse_index_even,
        perron_checks,
        prepare_for_spectrum,
        sign_changes,
        spectrum,
        spectrum_solution,
    )

    params = ModelParams(s=args.s, alpha=args.alpha, lam=args.lam)
    if args.L is not None or args.N is not None:
        sol = solve_robust(params, _grid(args, params), tol=args.tol)
        sol = prepare_for_spectrum(sol)
    else:
        sol = spectrum_solution(params)
    even = spectrum(build_lplus(sol, "even"), n_fields=3)
    odd = spectrum(build_lplus(sol, "odd"), n_fields=1)
    perron = perron_checks(even, odd)
    psi2_changes = sign_changes(even.fields[1])
    delta = coercivity_check(sol, even)
    ledger = [
        check_eq("morse_even",
                 "exactly one negative eigenvalue in the even sector",
                 morse_index_even(even), 1, 0),
        check_leq("translation_kernel",
                  "|L+ Q'|_2 / |Q'|_2 (translation mode in the kernel)",
                  kernel_residual(sol), 1e-3),
        check_leq("odd_zero_mode",
                  "|lowest odd eigenvalue| / lam (zero at the odd bottom)",
                  abs(odd.eigenvalues[0]) / params.lam, 1e-4),
        check_flag("ground_is_even",
                   "the bottom eigenvalue lives in the even sector",
                   perron["ground_is_even"]),
        check_flag("ground_sign_definite",
                   "the bottom eigenfield has one sign",
                   perron["sign_definite"]),
        check_eq("second_even_sign_changes",
                 "second even eigenfield changes sign exactly once on x > 0",
                 psi2_changes, 1, 0),
        check_flag("coercivity_positive",
                   "L+ is positive on the complement of the bottom "
                   "eigenfield and Q'", delta > 0.0),
    ]
    results = {
        "grid": {"length": sol.field.grid.length, "n": sol.field.grid.n},
        "even_eigenvalues": even.eigenvalues[:8],
        "odd_eigenvalues": odd.eigenvalues[:8],
        "essential_edge": even.essential_edge,
        "coercivity_delta": delta,
        "ground_gap": perron["simple_gap"],
    }
    out = _outdir(args, "spectrum")
    field_to_csv(even.fields[0], out / "ground_eigenfield.csv")
    field_to_csv(even.fields[1], out / "second_even_eigenfield.csv")
    if args.plots:
        from .figures import render_spectrum
        render_spectrum(even.eigenvalues, odd.eigenvalues,
                        even.essential_edge, out / "spectrum.png")
    report = Report("spectrum", _config_echo(args, "spectrum"), results,
                    ledger)
    write_report(report, out / "report.json")
    return report


def cmd_continue(args) -> Report:
    from .continuation import (
        ContinuationConfig,
        continue_branch,
        verify_limit,
    )

    params = ModelParams(s=args.s, alpha=args.alpha, lam=args.lam)
    grid = _grid(args, params) if (args.L or args.N) else make_grid(192.0,
                                                                    2048)
    start = solve_robust(params, grid, tol=args.tol)
    target = args.target_s if args.target_s is not None else 0.999
    config = ContinuationConfig(newton_tol=max(args.tol, 1e-12))
    branch = continue_branch(start, target, config)
    reached = branch.termination == "reached-target"
    power_worst = max(pt.monitors["power_defect"] for pt in branch.points)
    morse_ok = all(pt.monitors["morse_even"] == 1 for pt in branch.points)
    ledger = [
        check_flag("reached_target",
                   f"branch continued from s={params.s} to s={target} "
                   f"(termination: {branch.termination})", reached),
        check_leq("power_conservation",
                  "max relative drift of int |Q|^(alpha+2) along the branch",
                  power_worst, 10.0 * config.newton_tol),
        check_flag("morse_even_along_branch",
                   "even Morse index is 1 at every accepted point",
                   morse_ok),
    ]
    results = branch_manifest(branch, {"newton_tol": config.newton_tol,
                                       "ds_max": config.ds_max})
    if reached and branch.points[-1].s >= 0.99:
        limit = verify_limit(branch)
        results["limit"] = limit
        ledger.append(check_leq(
            "limit_multiplier",
            "relative gap between the endpoint lam and the scaled-soliton "
            "value", limit["lambda_deviation"], 1e-2))
        ledger.append(check_leq(
            "limit_profile",
            "relative L2 gap between the endpoint and the scaled classical "
            "soliton", limit["field_deviation"], 1e-2))
    out = _outdir(args, "continue")
    branch_to_jsonl(branch, out / "branch.jsonl", field_dir=out / "fields")
    if args.plots:
        from .figures import render_branch
        render_branch(branch, out / "branch.png")
    report = Report("continue", _config_echo(args, "continue"), results,
                    ledger)
    write_report(report, out / "report.json")
    return report


def cmd_kernels(args) -> Report:
    from .kernels import (
        check_heat_kernel_bounds,
        check_resolvent_bounds,
        heat_kernel,
        poisson_kernel,
        resolvent_mass,
        resolvent_two_route_deviation,
        semigroup_check,
    )

    s, lam, t = args.s, args.lam, 1.0
    x = np.linspace(-20.0, 20.0, 401)
    bounds = check_heat_kernel_bounds(s, t, np.linspace(-50.0, 50.0, 2001))
    grid = make_grid(400.0, 2 ** 12)
    semi = semigroup_check(s, 1.0, 1.0, grid)
    two_route = resolvent_two_route_deviation(
        s, lam, np.array([0.1, 0.5, 1.0, 3.0, 10.0]))
    mass_dev = abs(resolvent_mass(s, lam) - 1.0 / lam)
    res_bounds = check_resolvent_bounds(
        s, lam, np.array([0.05, 0.1, 0.5, 1.0, 5.0, 20.0]))
    ledger = [
        check_flag("heat_positive", "K_t > 0 everywhere",
                   bounds["positive"]),
        check_leq("heat_x_bound", "max |x K_t(x)| <= 1/pi",
                  bounds["x_bound"], 1.0 / np.pi + 1e-12),
        check_flag("heat_unimodal", "K_t decreases away from the origin",
                   bounds["unimodal"]),
        check_flag("heat_peak",
                   "K_t(0) matches Gamma(1/2s) t^(-1/2s)/(2 pi s)",
                   bounds["peak_matches"]),
        check_leq("semigroup",
                  "sup |K_t * K_t - K_2t| under grid convolution",
                  semi, 1e-5),
        check_leq("resolvent_two_routes",
                  "Laplace-transform and direct Fourier routes to the "
                  "resolvent kernel agree", two_route, 1e-5),
        check_leq("resolvent_mass", "int G = 1/lam", mass_dev, 1e-6),
        check_flag("resolvent_bounds",
                   "G > 0, decreasing, and G <= 1/(pi lam |x|)",
                   res_bounds["positive"]
                   and res_bounds["pointwise_bound_ok"]
                   and res_bounds["monotone"]),
    ]
    kernel_vals = heat_kernel(s, t, x)
    if s == 0.5:
        dev = float(np.max(np.abs(kernel_vals - poisson_kernel(t, x))))
        ledger.append(check_leq(
            "poisson_oracle", "max |K_t - t/(pi(t^2+x^2))| at s = 1/2",
            dev, 1e-8))
    results = {"s": s, "lam": lam, "t": t,
               "semigroup_deviation": semi,
               "two_route_deviation": two_route,
               "mass_deviation": mass_dev}
    out = _outdir(args, "kernels")
    with (out / "heat_kernel.csv").open("w") as fh:
        fh.write("x,k\n")
        for xi, ki in zip(x, kernel_vals):
            fh.write(f"{xi:.17g},{ki:.17g}\n")
    if args.plots:
        from .figures import render_kernel
        render_kernel(x, kernel_vals, out / "heat_kernel.png",
                      title=f"heat kernel, s={s}, t={t}")
    report = Report("kernels", _config_echo(args, "kernels"), results,
                    ledger)
    write_report(report, out / "report.json")
    return report


def cmd_extend(args) -> Report:
    from .extension import (
        c_constant,
        convolution_cross_check,
        extend,
        neumann_trace,
        scalar_profile_identity,
        trace_energy_ratio,
        trace_inequality_trials,
        weight_exponent,
    )

    s = args.s
    a = weight_exponent(s)
    grid = make_grid(args.L or 60.0, args.N or 512)
    f = Field(grid, np.exp(-grid.x ** 2))
    ext = extend(f, s)
    ratio = trace_energy_ratio(ext)
    scalar_dev = abs(scalar_profile_identity(a) - c_constant(a))
    neumann = neumann_trace(ext, [1e-1, 1e-2, 1e-3])
    conv = convolution_cross_check(ext, seed=args.seed)
    trials = trace_inequality_trials(f, s, n_trials=20, seed=args.seed)
    ledger = [
        check_eq("energy_identity",
                 "weighted Dirichlet energy / (c_a |f|_{Hs}^2) = 1",
                 ratio, 1.0, 1e-3),
        check_leq("scalar_identity",
                  "int r^a (m'(r)^2 + m(r)^2) dr = c_a", scalar_dev, 1e-6),
        check_flag("neumann_decreasing",
                   "deviation of -c_a^(-1) eps^a d_y u from (-Lap)^s f "
                   "decreases over eps = 1e-1, 1e-2, 1e-3",
                   neumann["decreasing"]),
        check_leq("convolution_route",
                  "mode-multiplier and kernel-convolution extensions agree",
                  conv, 1e-5),
        check_flag("trace_inequality_strict",
                   "20 random non-extension fields all exceed the sharp "
                   "trace bound", trials["all_strict"]),
    ]
    results = {"s": s, "a": a, "energy_ratio": ratio,
               "neumann_deviations": neumann["deviations"],
               "trial_margin_min": min(trials["trial_energies"])
               - trials["bound"],
               "seed": args.seed}
    out = _outdir(args, "extend")
    extension_to_csv(ext, out / "extension.csv")
    if args.plots:
        from .figures import render_extension
        render_extension(ext, out / "extension.png")
    report = Report("extend", _config_echo(args, "extend"), results, ledger)
    write_report(report, out / "report.json")
    return report


def cmd_verify_all(args) -> Report:
    """Fast end-to-end pass over every suite at benchmark parameters."""
    sub_reports = []

    def run(cmd, **overrides):
        ns = argparse.Namespace(**{**vars(args), **overrides})
        sub_reports.append(cmd(ns))

    run(cmd_solve, s=0.5, alpha=1.0, lam=1.0, L=400.0, N=2 ** 14)
    run(cmd_solve, s=1.0, alpha=2.0, lam=1.0, L=128.0, N=2048)
    run(cmd_spectrum, s=1.0, alpha=2.0, lam=1.0, L=128.0, N=2048)
    run(cmd_kernels, s=0.5, lam=1.0, L=None, N=None)
    run(cmd_extend, s=0.5, lam=1.0, L=None, N=None)
    ledger = [
        check_flag(f"{r.command}[{i}]",
                   f"all {len(r.ledger)} checks of the {r.command} run pass",
                   r.all_passed)
        for i, r in enumerate(sub_reports)
    ]
    results = {"sub_reports": [r.to_dict() for r in sub_reports]}
    report = Report("verify-all", _config_echo(args, "verify-all"), results,
                    ledger)
    write_report(report, _outdir(args, "verify-all") / "report.json")
    return report


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracground",
        description="Ground states of the fractional nonlinear scalar "
                    "field equation: solvers, spectral certificates, "
                    "branch continuation, and kernel/extension checks.")
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--s", type=float, default=0.5,
                        help="fractional order in (0, 1]")
    common.add_argument("--alpha", type=float, default=1.0,
                        help="nonlinearity power")
    common.add_argument("--lambda", dest="lam", type=float, default=1.0,
                        help="frequency / multiplier")
    common.add_argument("--L", type=float, default=None, help="box length")
    common.add_argument("--N", type=int, default=None,
                        help="grid points (power of two)")
    common.add_argument("--tol", type=float, default=1e-10,
                        help="solver tolerance")
    common.add_argument("--target-s", dest="target_s", type=float,
                        default=None, help="continuation target order")
    common.add_argument("--seed", type=int, default=0,
                        help="seed for random trial fields")
    common.add_argument("--out", type=str, default=None,
                        help="output root (default $FRACGROUND_OUT or ./runs)")
    common.add_argument("--plots", action="store_true",
                        help="also render PNG figures")
    for name, fn, blurb in (
            ("solve", cmd_solve, "solve one ground state and certify it"),
            ("spectrum", cmd_spectrum,
             "linearized spectrum and its certificates"),
            ("continue", cmd_continue, "continue the branch toward s = 1"),
            ("kernels", cmd_kernels, "heat and resolvent kernel checks"),
            ("extend", cmd_extend, "half-plane extension checks"),
            ("verify-all", cmd_verify_all, "fast pass over every suite")):
        p = sub.add_parser(name, parents=[common], help=blurb)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        report = args.func(args)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    elapsed = time.perf_counter() - t0
    for c in report.ledger:
        status = "pass" if c.passed else "FAIL"
        print(f"[{status}] {c.name}: value={c.value:.6g} "
              f"tol={c.tolerance:.6g}")
    print(f"{report.command}: "
          f"{'all checks passed' if report.all_passed else 'CHECKS FAILED'} "
          f"({elapsed:.1f}s)")
    return 0 if report.all_passed else 1


if __name__ == "__main__":
    sys.exit(main())
