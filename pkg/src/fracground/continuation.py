"""Branch continuation of ground states in the fractional order s.

A ground state of (-Lap)^s Q + lam Q = Q^(alpha+1) at order s0 is continued
toward s = 1 while the nonlinear-power norm int |Q|^(alpha+2) is held at its
starting value c0; the multiplier lam becomes the second unknown. Each step
is a tangent predictor plus a bordered Newton corrector on

    F1(Q, lam, s) = Q - ((-Lap)^s + lam)^(-1) |Q|^alpha Q,
    F2(Q)         = int |Q|^(alpha+2) - c0,

solved in the even cosine sector by dense LU with scalar elimination of the
lam-column. Every accepted point is certified: positivity, radial
monotonicity, even-sector Morse index 1 (matrix inertia), translation
kernel residual, power-norm conservation, and boundedness windows for lam,
the mass, its logarithmic s-derivative, the log-symbol pairing
<Q, (-Lap)^s log(-Lap) Q>, and the 1/|x| decay envelope; windows are
calibrated from the first accepted points with a safety factor.

The s -> 1 endpoint is checked against the closed-form limit: the classical
soliton P(x) = (sigma+1)^(1/(2 sigma)) cosh(sigma x)^(-1/sigma), sigma =
alpha/2, scaled by lambda_star = (alpha/(2(alpha+2)) * c0 / int P'^2)
^(2 alpha/(alpha+4)).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg
from scipy.integrate import quad

from .grids import (
    Field,
    SymbolSpec,
    apply_symbol,
    even_part,
    hs_seminorm_sq,
    inner,
    l2_norm_sq,
    lp_norm,
)
from .groundstate import (
    GroundState,
    ModelParams,
    alpha_max,
    check_symmetry_monotonicity,
)
from .linearization import (
    SectorOperator,
    _project_to_sector,
    _synthesize,
    build_lplus,
    kernel_residual,
)


class ContinuationError(RuntimeError):
    pass


class BranchAssumptionError(ContinuationError):
    """Even-sector invertibility (or its structural consequences) failed."""


@dataclass
class ContinuationConfig:
    ds_init: float = 0.005
    ds_min: float = 1e-5
    ds_max: float = 0.01
    newton_tol: float = 1e-10
    newton_max_iter: int = 12
    safety_factor: float = 10.0   # monitor windows = early data x this
    calibration_points: int = 5
    s_end: float = 0.999          # hard ceiling short of the local limit

    def __post_init__(self):
        if not 0.0 < self.ds_min <= self.ds_init <= self.ds_max:
            raise ContinuationError("need 0 < ds_min <= ds_init <= ds_max")
        if self.newton_tol <= 0.0:
            raise ContinuationError("newton_tol must be positive")


@dataclass
class BranchPoint:
    s: float
    lam: float
    field: Field
    monitors: dict


@dataclass
class Branch:
    alpha: float
    s0: float
    c0: float
    points: list
    termination: str       # reached-target | monitor-failure | newton-failure
    detail: str = ""


def power_norm(q: Field, alpha: float) -> float:
    return lp_norm(q, alpha + 2.0) ** (alpha + 2.0)


def residual_F(q: Field, lam: float, s: float, alpha: float,
               c0: float) -> tuple[Field, float]:
    """The two components of the continuation map; zero at branch points."""
    if lam <= 0.0:
        raise ContinuationError(f"multiplier must stay positive, got {lam}")
    p = Field(q.grid, np.abs(q.values) ** alpha * q.values)
    resolvent_p = apply_symbol(p, SymbolSpec(s, lam, power=-1))
    f1 = Field(q.grid, q.values - resolvent_p.values)
    f2 = power_norm(q, alpha) - c0
    return f1, f2


def _even_operator(q: Field, lam: float, s: float,
                   alpha: float) -> SectorOperator:
    params = ModelParams(s=s, alpha=alpha, lam=lam)
    sol = GroundState(field=q, params=params, iterations=0, residual=0.0,
                      converged=True, multiplier_drift=0.0, wall_time=0.0)
    return build_lplus(sol, parity="even")


@dataclass
class _BorderedSystem:
    """Dense even-sector factorization of one linearization point."""
    op: SectorOperator
    lu: tuple
    p_coeffs: np.ndarray    # |Q|^alpha Q in the sector basis
    g_coeffs: np.ndarray    # ((-Lap)^s + lam)^(-2) |Q|^alpha Q
    gamma_inner: float      # <p, (1+K)^(-1) g>, must stay away from zero
    alpha: float

    def solve(self, rhs_coeffs: np.ndarray,
              rhs_scalar: float) -> tuple[np.ndarray, float]:
        a_f = scipy.linalg.lu_solve(self.lu, rhs_coeffs)
        num = (self.alpha + 2.0) * float(self.p_coeffs @ a_f) - rhs_scalar
        gamma = num / ((self.alpha + 2.0) * self.gamma_inner)
        a_g = scipy.linalg.lu_solve(self.lu, self.g_coeffs)
        return a_f - gamma * a_g, gamma


def factor_bordered(q: Field, lam: float, s: float,
                    alpha: float) -> _BorderedSystem:
    """LU of 1 + K = D^(-1) L+ in the even sector plus the border data.

    D is the diagonal symbol (|xi|^(2s) + lam); the solvability of the
    border rests on <|Q|^alpha Q, (1+K)^(-1) g> = -(1/alpha) int Q^2, which
    is monitored and must not vanish.
    """
    op = _even_operator(q, lam, s, alpha)
    d = op.freqs ** (2.0 * s) + lam
    one_plus_k = op.matrix / d[:, None]
    try:
        lu = scipy.linalg.lu_factor(one_plus_k)
    except scipy.linalg.LinAlgError as exc:
        raise BranchAssumptionError(
            f"even-sector operator is singular at s={s}") from exc
    p = Field(q.grid, np.abs(q.values) ** alpha * q.values)
    p_coeffs = _project_to_sector(op, p)
    g_coeffs = p_coeffs / d ** 2
    gamma_inner = float(p_coeffs @ scipy.linalg.lu_solve(lu, g_coeffs))
    scale = l2_norm_sq(q) / alpha
    if abs(gamma_inner) < 1e-8 * scale:
        raise BranchAssumptionError(
            "the border pairing <|Q|^a Q, (1+K)^(-1) g> vanished; the "
            "bordered system lost solvability")
    return _BorderedSystem(op=op, lu=lu, p_coeffs=p_coeffs,
                           g_coeffs=g_coeffs, gamma_inner=gamma_inner,
                           alpha=alpha)


def solve_bordered(q: Field, lam: float, s: float, alpha: float,
                   rhs_field: Field, rhs_scalar: float) -> tuple[Field, float]:
    """Solve (1+K) eta + gamma g = rhs, (alpha+2) <p, eta> = rhs_scalar."""
    sys = factor_bordered(q, lam, s, alpha)
    coeffs, gamma = sys.solve(_project_to_sector(sys.op, rhs_field),
                              rhs_scalar)
    return _synthesize(sys.op, coeffs), gamma


def border_pairing(q: Field, lam: float, s: float, alpha: float) -> float:
    """<|Q|^alpha Q, (1+K)^(-1) g>; equals -(1/alpha) int Q^2 at a solution."""
    return factor_bordered(q, lam, s, alpha).gamma_inner


def _ds_rhs(q: Field, lam: float, s: float, alpha: float) -> Field:
    """dF1/ds = ((-Lap)^s log(-Lap) / ((-Lap)^s + lam)^2) |Q|^alpha Q."""
    p = Field(q.grid, np.abs(q.values) ** alpha * q.values)
    logged = apply_symbol(p, SymbolSpec(s, 0.0, power=1, log_factor=True))
    return apply_symbol(logged, SymbolSpec(s, lam, power=-2))


def predictor(q: Field, lam: float, s: float, alpha: float,
              ds: float) -> tuple[Field, float]:
    """First-order tangent step to s + ds (identity at ds = 0)."""
    if ds == 0.0:
        return q, lam
    rhs = _ds_rhs(q, lam, s, alpha)
    dq, dlam = solve_bordered(q, lam, s, alpha,
                              Field(q.grid, -ds * rhs.values), 0.0)
    return Field(q.grid, q.values + dq.values), lam + dlam


def tangent(q: Field, lam: float, s: float, alpha: float) -> tuple[Field, float]:
    """(dQ/ds, dlam/ds) along the branch."""
    rhs = _ds_rhs(q, lam, s, alpha)
    dq, dlam = solve_bordered(q, lam, s, alpha,
                              Field(q.grid, -rhs.values), 0.0)
    return dq, dlam


def corrector(q_pred: Field, lam_pred: float, s: float, alpha: float,
              c0: float, config: ContinuationConfig | None = None
              ) -> tuple[Field, float, float, int]:
    """Newton iteration at fixed s; returns (Q, lam, residual, iterations)."""
    config = config or ContinuationConfig()
    q, lam = even_part(q_pred), lam_pred
    for it in range(1, config.newton_max_iter + 1):
        f1, f2 = residual_F(q, lam, s, alpha, c0)
        res = np.sqrt(l2_norm_sq(f1)) + abs(f2) / max(c0, 1.0)
        if res <= config.newton_tol:
            return q, lam, res, it - 1
        sys = factor_bordered(q, lam, s, alpha)
        coeffs, gamma = sys.solve(
            -_project_to_sector(sys.op, f1), -f2)
        eta = _synthesize(sys.op, coeffs)
        q = Field(q.grid, q.values + eta.values)
        lam = lam + gamma
        if not np.isfinite(lam) or lam <= 0.0:
            raise ContinuationError(
                f"Newton pushed the multiplier to {lam} at s={s}")
    f1, f2 = residual_F(q, lam, s, alpha, c0)
    res = np.sqrt(l2_norm_sq(f1)) + abs(f2) / max(c0, 1.0)
    if res <= config.newton_tol:
        return q, lam, res, config.newton_max_iter
    raise ContinuationError(
        f"Newton stalled at s={s}: residual {res:.3e}")


def _morse_even(op: SectorOperator, lam: float) -> int:
    """Negative-eigenvalue count of the even sector by matrix inertia."""
    band = 1e-6 * lam
    shifted = op.matrix + band * np.eye(op.matrix.shape[0])
    _, d, _ = scipy.linalg.ldl(shifted)
    count, i, n = 0, 0, d.shape[0]
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            count += int(np.sum(np.linalg.eigvalsh(
                d[i:i + 2, i:i + 2]) < 0.0))
            i += 2
        else:
            count += int(d[i, i] < 0.0)
            i += 1
    return count


def log_pairing(q: Field, s: float) -> float:
    """<Q, (-Lap)^s log(-Lap) Q>, the logarithmic-symbol monitor."""
    return inner(q, apply_symbol(q, SymbolSpec(s, 0.0, power=1,
                                               log_factor=True)))


def decay_envelope(q: Field, r0: float) -> float:
    """max |x Q(x)| over r0 <= |x| <= 0.4 L (the 1/|x| decay monitor)."""
    g = q.grid
    mask = (np.abs(g.x) >= r0) & (np.abs(g.x) <= 0.4 * g.length)
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(g.x[mask] * q.values[mask])))


def half_width(q: Field) -> float:
    """Half-width at half-maximum of an even, peaked field."""
    half = q.grid.n // 2
    vals = q.values[half:]
    target = 0.5 * vals[0]
    idx = np.argmax(vals <= target)
    return float(q.grid.x[half + idx])


def _assemble_monitors(q: Field, lam: float, s: float, alpha: float,
                       c0: float, res: float, r0: float) -> dict:
    params = ModelParams(s=s, alpha=alpha, lam=lam)
    sol = GroundState(field=q, params=params, iterations=0, residual=res,
                      converged=True, multiplier_drift=0.0, wall_time=0.0)
    shape = check_symmetry_monotonicity(q, eps=1e-7)
    op = _even_operator(q, lam, s, alpha)
    return {
        "l2_norm_sq": float(l2_norm_sq(q)),
        "hs_seminorm_sq": float(hs_seminorm_sq(q, s)),
        "power_norm": float(power_norm(q, alpha)),
        "power_defect": float(abs(power_norm(q, alpha) - c0) / c0),
        "lam_l2_product": float(lam * l2_norm_sq(q)),
        "positive": bool(shape["positive"]),
        "monotone": bool(shape["monotone_defect"] < 1e-7),
        "log_pairing": float(log_pairing(q, s)),
        "decay_envelope": float(decay_envelope(q, r0)),
        "morse_even": int(_morse_even(op, lam)),
        "translation_residual": float(kernel_residual(sol)),
        "newton_residual": float(res),
    }


_WINDOWED = ("lam", "l2_norm_sq", "lam_l2_product", "log_pairing",
             "decay_envelope", "gron_rate")


def _check_windows(values: dict, windows: dict) -> str | None:
    for key, (lo, hi) in windows.items():
        v = values.get(key)
        if v is not None and not lo <= v <= hi:
            return (f"monitor '{key}' = {v:.6g} left its calibrated "
                    f"window [{lo:.6g}, {hi:.6g}]")
    return None


def continue_branch(start: GroundState, s_target: float,
                    config: ContinuationConfig | None = None,
                    experimental_decreasing: bool = False) -> Branch:
    """March the branch from the start solution toward s_target.

    Adaptive steps: halve on Newton failure, grow by 1.3 after fast
    convergence. Every accepted point must pass structural monitors
    (positivity, monotonicity, Morse index 1, translation kernel) and
    boundedness windows calibrated on the first accepted points.
    """
    config = config or ContinuationConfig()
    p = start.params
    alpha, s0 = p.alpha, p.s
    s_target = min(s_target, config.s_end)
    if s_target < s0 and not experimental_decreasing:
        raise ContinuationError(
            "decreasing-s continuation is experimental; pass "
            "experimental_decreasing=True to enable it")
    if alpha >= alpha_max(min(s0, s_target)):
        raise ContinuationError(
            "the branch would cross the existence threshold "
            f"alpha_max(s) at s={min(s0, s_target)}")
    direction = 1.0 if s_target >= s0 else -1.0
    q, lam = even_part(start.field), p.lam
    c0 = power_norm(q, alpha)
    r0 = 8.0 * half_width(q)

    q, lam, res, _ = corrector(q, lam, s0, alpha, c0, config)
    mon = _assemble_monitors(q, lam, s0, alpha, c0, res, r0)
    if mon["morse_even"] != 1:
        raise BranchAssumptionError(
            f"starting point has even Morse index {mon['morse_even']}, not 1")
    points = [BranchPoint(s=s0, lam=lam, field=q, monitors=mon)]
    if s_target == s0:
        return Branch(alpha, s0, c0, points, "reached-target")

    windows: dict = {}
    ds = config.ds_init
    s = s0
    while (s_target - s) * direction > 1e-12:
        step = direction * min(ds, abs(s_target - s))
        s_next = s + step
        try:
            q_pred, lam_pred = predictor(q, lam, s, alpha, step)
            q_new, lam_new, res, iters = corrector(
                q_pred, lam_pred, s_next, alpha, c0, config)
        except (ContinuationError, BranchAssumptionError) as exc:
            if isinstance(exc, BranchAssumptionError):
                return Branch(alpha, s0, c0, points, "monitor-failure",
                              detail=str(exc))
            ds *= 0.5
            if ds < config.ds_min:
                return Branch(alpha, s0, c0, points, "newton-failure",
                              detail=str(exc))
            continue
        mon = _assemble_monitors(q_new, lam_new, s_next, alpha, c0, res, r0)
        mon["lam"] = float(lam_new)
        prev = points[-1]
        mon["gron_rate"] = abs(np.log(mon["l2_norm_sq"]
                                      / prev.monitors["l2_norm_sq"])) / abs(step)
        structural = (mon["positive"] and mon["monotone"]
                      and mon["morse_even"] == 1
                      and mon["power_defect"] <= 10.0 * config.newton_tol
                      and mon["translation_residual"] < 1e-2)
        if not structural:
            return Branch(alpha, s0, c0, points, "monitor-failure",
                          detail=f"structural monitor failed at s={s_next}: "
                                 f"{mon}")
        fail = _check_windows(mon, windows)
        if fail is not None:
            return Branch(alpha, s0, c0, points, "monitor-failure",
                          detail=f"at s={s_next}: {fail}")
        points.append(BranchPoint(s=s_next, lam=lam_new, field=q_new,
                                  monitors=mon))
        q, lam, s = q_new, lam_new, s_next
        if len(points) == config.calibration_points + 1 and not windows:
            for key in _WINDOWED:
                vals = [pt.monitors.get(key) for pt in points[1:]]
                vals = [v for v in vals if v is not None]
                hi = max(abs(v) for v in vals)
                windows[key] = (-config.safety_factor * hi,
                                config.safety_factor * hi)
            # multiplier and mass are strictly positive quantities
            lam_vals = [pt.lam for pt in points[1:]]
            windows["lam"] = (min(lam_vals) / config.safety_factor,
                              max(lam_vals) * config.safety_factor)
            l2_vals = [pt.monitors["l2_norm_sq"] for pt in points[1:]]
            windows["l2_norm_sq"] = (min(l2_vals) / config.safety_factor,
                                     max(l2_vals) * config.safety_factor)
        if iters <= 3:
            ds = min(ds * 1.3, config.ds_max)
    return Branch(alpha, s0, c0, points, "reached-target")


# ---------------------------------------------------------------------------
# the s -> 1 limit

def classical_profile(alpha: float, x: np.ndarray) -> np.ndarray:
    """P(x) = (sigma+1)^(1/(2 sigma)) cosh(sigma x)^(-1/sigma), sigma=alpha/2."""
    sigma = alpha / 2.0
    return (sigma + 1.0) ** (1.0 / (2.0 * sigma)) / np.cosh(
        sigma * np.asarray(x, dtype=float)) ** (1.0 / sigma)


def _classical_gradient_norm_sq(alpha: float) -> float:
    sigma = alpha / 2.0

    def dp(x):
        # d/dx of the classical profile
        return (-(sigma + 1.0) ** (1.0 / (2.0 * sigma)) * np.tanh(sigma * x)
                / np.cosh(sigma * x) ** (1.0 / sigma))

    val, _ = quad(lambda x: dp(x) ** 2, 0.0, 60.0 / max(sigma, 0.25),
                  epsabs=1e-13, limit=400)
    return 2.0 * val


def lambda_star(alpha: float, c0: float) -> float:
    """Multiplier of the s = 1 limit fixed by power-norm conservation."""
    if alpha <= 0.0 or c0 <= 0.0:
        raise ContinuationError("lambda_star needs alpha > 0 and c0 > 0")
    base = (alpha / (2.0 * (alpha + 2.0))) * c0 / _classical_gradient_norm_sq(alpha)
    return base ** (2.0 * alpha / (alpha + 4.0))


def verify_limit(branch: Branch) -> dict:
    """Compare the branch endpoint with the scaled classical soliton."""
    end = branch.points[-1]
    if end.s < 0.99:
        raise ContinuationError(
            f"branch ends at s={end.s}; the limit check needs s >= 0.99")
    alpha = branch.alpha
    lam_ref = lambda_star(alpha, branch.c0)
    g = end.field.grid
    ref_vals = lam_ref ** (1.0 / alpha) * classical_profile(
        alpha, np.sqrt(lam_ref) * g.x)
    num = l2_norm_sq(Field(g, end.field.values - ref_vals))
    den = float(np.sum(ref_vals ** 2) * g.h)
    grad_sq = hs_seminorm_sq(end.field, 1.0)
    poho = abs(grad_sq - alpha / (2.0 * (alpha + 2.0))
               * power_norm(end.field, alpha)) / grad_sq
    return {
        "s_end": float(end.s),
        "lambda_end": float(end.lam),
        "lambda_star": float(lam_ref),
        "lambda_deviation": float(abs(end.lam - lam_ref) / lam_ref),
        "field_deviation": float(np.sqrt(num / den)),
        "classical_pohozaev_residual": float(poho),
    }


# ---------------------------------------------------------------------------
# branch-coincidence (uniqueness) experiment

def uniqueness_experiment(alpha: float, s0: float, seeds: list,
                          grid, s_target: float = None,
                          config: ContinuationConfig | None = None,
                          solve_tol: float = 1e-10) -> dict:
    """Solve from independent seeds and continue each branch.

    All solved ground states must coincide after recentring, and the
    branches must coincide pointwise at shared s checkpoints; fixed-step
    configs make the checkpoints identical across branches.
    """
    from .groundstate import solve_robust

    if len(seeds) < 2:
        raise ContinuationError("the experiment needs at least two seeds")
    if s_target is None:
        s_target = min(s0 + 0.1, 0.999)
    config = config or ContinuationConfig(ds_init=0.005, ds_min=0.005,
                                          ds_max=0.005)
    params = ModelParams(s=s0, alpha=alpha)
    branches = []
    states = []
    for seed in seeds:
        sol = solve_robust(params, grid, tol=solve_tol,
                           init=Field(grid, np.asarray(seed, dtype=float)))
        states.append(sol)
        branches.append(continue_branch(sol, s_target, config))

    base = states[0].field.values
    state_devs = [
        float(np.sqrt(np.sum((st.field.values - base) ** 2)
                      / max(np.sum(base ** 2), 1e-300)))
        for st in states[1:]]

    ref = branches[0]
    branch_devs, lam_devs = [], []
    for other in branches[1:]:
        shared = min(len(ref.points), len(other.points))
        worst_q, worst_lam = 0.0, 0.0
        for i in range(shared):
            a, b = ref.points[i], other.points[i]
            if abs(a.s - b.s) > 1e-12:
                raise ContinuationError(
                    "checkpoints diverged; use a fixed-step config")
            dq = np.sqrt(np.sum((a.field.values - b.field.values) ** 2)
                         / np.sum(a.field.values ** 2))
            worst_q = max(worst_q, float(dq))
            worst_lam = max(worst_lam, abs(a.lam - b.lam) / a.lam)
        branch_devs.append(worst_q)
        lam_devs.append(float(worst_lam))

    tol_branch = 10.0 * config.newton_tol
    return {
        "s_values": [pt.s for pt in ref.points],
        "state_deviations": state_devs,
        "branch_deviations": branch_devs,
        "lambda_deviations": lam_devs,
        "states_coincide": bool(all(d <= 1e-6 for d in state_devs)),
        "branches_coincide": bool(
            all(d <= tol_branch for d in branch_devs + lam_devs)),
        "branches": branches,
        "states": states,
    }
