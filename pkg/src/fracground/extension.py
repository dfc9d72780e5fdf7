"""Weighted harmonic extension of line fields to the upper half-plane.

For 0 < s < 1 put a = 1 - 2s. A field f on the line extends to
W(x, y), y > 0, solving div(y^a grad W) = 0 with trace f; per Fourier
mode the extension is exactly

    W_hat(xi, y) = f_hat(xi) * m(|xi| y),

where m = m_a is the Bessel-type profile

    m_a(r) = (2 / Gamma((1-a)/2)) (r/2)^((1-a)/2) K_(1-a)/2(r),

normalized so m_a(0) = 1. The machinery certified here: the energy
identity  iint y^a |grad W|^2 = c_a * |f|_{H^s-seminorm}^2  with the sharp
constant c_a = 2^a Gamma((1+a)/2)/Gamma((1-a)/2); the Neumann boundary law
-c_a^(-1) y^a dW/dy -> (-Lap)^s f; the trace inequality (strict for
non-extension fields); the convolution route through the kernel
P_a(x) = Gamma((2-a)/2)/(sqrt(pi) Gamma((1-a)/2)) (1+x^2)^(-(2-a)/2);
and nodal-domain counting for extended eigenfields.

The modified Bessel function is evaluated from its integral representation
K_nu(r) = int_0^inf exp(-r cosh t) cosh(nu t) dt by the trapezoid rule,
which is spectrally accurate here because the integrand is even in t and
decays double-exponentially.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad, simpson
from scipy.interpolate import CubicSpline
from scipy.ndimage import label
from scipy.special import gamma

from .grids import Field, Grid, SymbolSpec, apply_symbol, hs_seminorm_sq


class ExtensionError(Exception):
    pass


def weight_exponent(s: float) -> float:
    """Weight exponent a = 1 - 2s of the extension problem.

    s = 1 (a = -1) is admitted for valuewise use of the extension — the
    mode profile m_a is still well defined there — but the energy and
    trace constants degenerate, so every energy-based certificate raises
    through c_constant at that endpoint.
    """
    if not 0.0 < s <= 1.0:
        raise ExtensionError(f"extension requires 0 < s <= 1, got s={s}")
    return 1.0 - 2.0 * s


def c_constant(a: float) -> float:
    """Sharp trace constant 2^a Gamma((1+a)/2) / Gamma((1-a)/2)."""
    if not -1.0 < a < 1.0:
        raise ExtensionError(f"weight exponent must lie in (-1, 1), got {a}")
    return 2.0 ** a * gamma((1.0 + a) / 2.0) / gamma((1.0 - a) / 2.0)


def _bessel_k(nu: float, r: float) -> float:
    """K_nu(r) by trapezoid on the cosh integral representation."""
    # integrand e^(-r cosh t) cosh(nu t) is even in t and decays like
    # exp(-(r/2) e^t); cut where the exponent reaches ~750
    t_max = np.arccosh(max(750.0 / r, 2.0))
    step = 0.02
    t = np.arange(0.0, t_max + step, step)
    vals = np.exp(-r * np.cosh(t)) * np.cosh(nu * t)
    return step * (np.sum(vals) - 0.5 * vals[0])


R_TINY = 1e-9
R_HUGE = 650.0


@lru_cache(maxsize=32)
def _profile_splines(a: float):
    """Cached splines of m_a and of q(r) = -r^a m_a'(r) over log r.

    q is splined instead of m' because q is smooth and tends to c_a at
    r = 0, whereas m' blows up like r^(-a) there.
    """
    nu = (1.0 - a) / 2.0
    front = (2.0 / gamma(nu)) * 0.5 ** nu
    u = np.linspace(np.log(R_TINY), np.log(R_HUGE), 2500)
    r = np.exp(u)
    m = np.array([front * ri ** nu * _bessel_k(nu, ri) for ri in r])
    # d/dr [r^nu K_nu(r)] = -r^nu K_(nu-1)(r), and K is even in its order
    mp = np.array([-front * ri ** nu * _bessel_k(1.0 - nu, ri) for ri in r])
    return CubicSpline(u, m), CubicSpline(u, -mp * r ** a)


def profile_m(a: float, r: np.ndarray, deriv: bool = False) -> np.ndarray:
    """The extension profile m_a (or its derivative) on abscissae r >= 0."""
    if not -1.0 <= a < 1.0:
        raise ExtensionError(f"weight exponent must lie in [-1, 1), got {a}")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r < 0.0):
        raise ExtensionError("profile abscissae must be nonnegative")
    m_spline, q_spline = _profile_splines(a)
    out = np.empty_like(r)
    tiny = r < R_TINY
    huge = r > R_HUGE
    mid = ~(tiny | huge)
    if deriv:
        if a == -1.0:
            # m(r) = r K_1(r): m'(r) ~ r log r vanishes at the origin
            out[tiny] = 0.0
        else:
            # small r: m'(r) = -c_a r^(-a) (1 + O(r^(1-a)))
            with np.errstate(divide="ignore"):
                out[tiny] = -c_constant(a) * r[tiny] ** (-a)
        out[mid] = -q_spline(np.log(r[mid])) * r[mid] ** (-a)
        out[huge] = 0.0
    else:
        if a == -1.0:
            out[tiny] = 1.0
        else:
            out[tiny] = 1.0 - c_constant(a) * r[tiny] ** (1.0 - a) / (1.0 - a)
        out[mid] = m_spline(np.log(r[mid]))
        out[huge] = 0.0
    return out


@dataclass(frozen=True)
class ProfileTable:
    a: float
    r: np.ndarray
    m: np.ndarray
    mprime: np.ndarray


def profile_table(a: float, r: np.ndarray) -> ProfileTable:
    return ProfileTable(a=a, r=np.asarray(r, dtype=float),
                        m=profile_m(a, r), mprime=profile_m(a, r, deriv=True))


def default_levels(grid: Grid, n_levels: int = 256) -> np.ndarray:
    """Log-spaced heights from 1e-4 * h up to 2 L."""
    return np.geomspace(1e-4 * grid.h, 2.0 * grid.length, n_levels)


@dataclass(frozen=True)
class ExtensionField:
    """Samples of a field on the upper half-plane over grid.x x levels."""
    grid: Grid
    s: float
    levels: np.ndarray          # strictly increasing heights y > 0
    values: np.ndarray          # shape (n_levels, grid.n)
    trace: Field | None = None  # boundary field, when known

    @property
    def a(self) -> float:
        return weight_exponent(self.s)


def extend(f: Field, s: float, levels: np.ndarray | None = None,
           n_levels: int = 256) -> ExtensionField:
    """Weighted harmonic extension of f, mode by mode."""
    a = weight_exponent(s)
    grid = f.grid
    if levels is None:
        levels = default_levels(grid, n_levels)
    levels = np.asarray(levels, dtype=float)
    if np.any(levels <= 0.0) or np.any(np.diff(levels) <= 0.0):
        raise ExtensionError("levels must be positive and increasing")
    coeffs = np.fft.rfft(f.values)
    freqs = np.abs(2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.h) )
    vals = np.empty((levels.size, grid.n))
    for i, y in enumerate(levels):
        vals[i] = np.fft.irfft(coeffs * profile_m(a, freqs * y), n=grid.n)
    return ExtensionField(grid=grid, s=s, levels=levels, values=vals, trace=f)


def poisson_type_kernel(a: float, x: np.ndarray) -> np.ndarray:
    """P_a(x) = Gamma((2-a)/2) / (sqrt(pi) Gamma((1-a)/2)) (1+x^2)^(-(2-a)/2)."""
    x = np.asarray(x, dtype=float)
    front = gamma((2.0 - a) / 2.0) / (np.sqrt(np.pi) * gamma((1.0 - a) / 2.0))
    return front * (1.0 + x ** 2) ** (-(2.0 - a) / 2.0)


def kernel_mass(a: float) -> float:
    """int P_a dx over the line (should be exactly 1)."""
    val, _ = quad(lambda x: poisson_type_kernel(a, np.array([x]))[0],
                  0.0, np.inf, epsabs=1e-12, limit=400)
    return 2.0 * val


def convolution_cross_check(ext: ExtensionField, n_slices: int = 3,
                            seed: int = 0, images: int = 40) -> float:
    """Max relative deviation of slices from direct kernel convolution.

    The scaled kernel is y^(-1) P_a(x/y); it is periodized over the box so
    the comparison is against the same periodic object the mode formula
    produces. Slices are drawn where the kernel is grid-resolved.
    """
    if ext.trace is None:
        raise ExtensionError("cross check needs the boundary trace")
    grid, a = ext.grid, ext.a
    lo = np.searchsorted(ext.levels, 10.0 * grid.h)
    hi = np.searchsorted(ext.levels, grid.length / 4.0)
    if hi <= lo:
        raise ExtensionError("no grid-resolved levels to cross-check")
    rng = np.random.default_rng(seed)
    picks = rng.choice(np.arange(lo, hi), size=min(n_slices, hi - lo),
                       replace=False)
    worst = 0.0
    for i in picks:
        y = ext.levels[i]
        kern = np.zeros(grid.n)
        for mshift in range(-images, images + 1):
            kern += poisson_type_kernel(
                a, (grid.x + mshift * grid.length) / y) / y
        # images beyond the fold are nearly flat across the box; add their
        # mass density using the kernel's |x|^(-(2-a)) asymptotic tail
        front = gamma((2.0 - a) / 2.0) / (np.sqrt(np.pi)
                                          * gamma((1.0 - a) / 2.0))
        cut = (images + 0.5) * grid.length / y
        kern += 2.0 * front * cut ** (a - 1.0) / ((1.0 - a) * grid.length)
        conv = np.fft.ifft(np.fft.fft(kern)
                           * np.fft.fft(ext.trace.values)).real * grid.h
        conv = np.roll(conv, grid.n // 2)  # grid starts at -L/2
        dev = np.max(np.abs(conv - ext.values[i]))
        worst = max(worst, dev / np.max(np.abs(ext.values[i])))
    return float(worst)


def _dy_nonuniform(values: np.ndarray, y: np.ndarray) -> np.ndarray:
    """First derivative in the level direction (axis 0).

    Log-spaced levels get a fourth-order stencil in log y (d/dy =
    (1/y) d/du with uniform u); general increasing levels fall back to the
    second-order three-point formula.
    """
    u = np.log(y)
    du = np.diff(u)
    if np.max(np.abs(du - du[0])) < 1e-9 * du[0] and y.size >= 7:
        step = du[0]
        dv = np.empty_like(values)
        dv[2:-2] = (values[:-4] - 8 * values[1:-3]
                    + 8 * values[3:-1] - values[4:]) / (12 * step)
        # one-sided fourth-order stencils at the edges
        edge = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
        for j in (0, 1):
            dv[j] = np.tensordot(edge, values[j:j + 5], axes=1) / step
            dv[-1 - j] = -np.tensordot(edge, values[-1 - j:-6 - j:-1],
                                       axes=1) / step
        return dv / y[:, None]
    out = np.empty_like(values)
    h1 = (y[1:-1] - y[:-2])[:, None]
    h2 = (y[2:] - y[1:-1])[:, None]
    out[1:-1] = (h1 ** 2 * values[2:] - h2 ** 2 * values[:-2]
                 + (h2 ** 2 - h1 ** 2) * values[1:-1]) / (h1 * h2 * (h1 + h2))
    out[0] = (values[1] - values[0]) / (y[1] - y[0])
    out[-1] = (values[-1] - values[-2]) / (y[-1] - y[-2])
    return out


def dirichlet_energy(ext: ExtensionField) -> float:
    """iint y^a (|d_x u|^2 + |d_y u|^2) dx dy by quadrature.

    x-derivatives are spectral per slice; y-derivatives are second-order
    finite differences on the (log-spaced) levels; the y-integral is a
    trapezoid in log y with an analytic power-law head for (0, y_min],
    where the integrand behaves like y^(-|a|).
    """
    grid, a, y = ext.grid, ext.a, ext.levels
    xi = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.h)
    coeffs = np.fft.rfft(ext.values, axis=1)
    # per-level integral over x of |d_x u|^2, by the Fourier norm
    # (one-sided spectrum: double the interior modes)
    fac = np.full(xi.size, 2.0)
    fac[0] = 1.0
    if grid.n % 2 == 0:
        fac[-1] = 1.0
    dx_sq = (np.abs(coeffs) ** 2 * (xi ** 2 * fac)).sum(axis=1) / grid.n ** 2 * grid.length
    dy = _dy_nonuniform(ext.values, y)
    dy_sq = (dy ** 2).sum(axis=1) * grid.h
    integrand = (dx_sq + dy_sq) * y ** a
    u = np.log(y)
    body = simpson(integrand * y, x=u)
    head = integrand[0] * y[0] / (1.0 - abs(a))
    return float(body + head)


def trace_energy_ratio(ext: ExtensionField) -> float:
    """dirichlet_energy / (c_a * H^s-seminorm^2 of the trace); 1 at equality."""
    if ext.trace is None:
        raise ExtensionError("ratio needs the boundary trace")
    denom = c_constant(ext.a) * hs_seminorm_sq(ext.trace, ext.s)
    return dirichlet_energy(ext) / denom


def scalar_profile_identity(a: float) -> float:
    """int_0^inf r^a (m_a'(r)^2 + m_a(r)^2) dr; equals c_a exactly."""
    f = lambda r: r ** a * (profile_m(a, np.array([r]), deriv=True)[0] ** 2
                            + profile_m(a, np.array([r]))[0] ** 2)
    # integrand ~ c_a^2 r^(-a) + r^a near zero; QAGS handles the endpoint
    head, _ = quad(f, 0.0, 1.0, epsabs=1e-12, limit=800)
    body, _ = quad(f, 1.0, 60.0, epsabs=1e-12, limit=400)
    return head + body


def neumann_trace(ext: ExtensionField, eps_list) -> dict:
    """Boundary law report: -c_a^(-1) eps^a d_y u(., eps) vs (-Lap)^s f.

    Uses the exact per-mode derivative of the extension profile, so eps
    need not lie on the level grid.
    """
    if ext.trace is None:
        raise ExtensionError("Neumann trace needs the boundary trace")
    grid, a, s = ext.grid, ext.a, ext.s
    f = ext.trace
    target = apply_symbol(f, SymbolSpec(s=s)).values
    target_norm = np.sqrt(np.sum(target ** 2) * grid.h)
    coeffs = np.fft.rfft(f.values)
    freqs = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.h)
    c_a = c_constant(a)
    deviations = []
    for eps in eps_list:
        dmode = coeffs * freqs * profile_m(a, freqs * eps, deriv=True)
        neumann = -np.fft.irfft(dmode, n=grid.n) * eps ** a / c_a
        dev = np.sqrt(np.sum((neumann - target) ** 2) * grid.h)
        deviations.append(float(dev / max(target_norm, 1e-300)))
    decreasing = all(b < a_ for a_, b in zip(deviations, deviations[1:]))
    return {"eps": list(map(float, eps_list)), "deviations": deviations,
            "decreasing": decreasing}


def boundary_convergence(ext: ExtensionField, eps_list) -> list[float]:
    """L2 distance of the slice u(., eps) from the trace, per eps."""
    if ext.trace is None:
        raise ExtensionError("needs the boundary trace")
    grid = ext.grid
    coeffs = np.fft.rfft(ext.trace.values)
    freqs = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.h)
    out = []
    for eps in eps_list:
        slice_vals = np.fft.irfft(coeffs * profile_m(ext.a, freqs * eps),
                                  n=grid.n)
        out.append(float(np.sqrt(
            np.sum((slice_vals - ext.trace.values) ** 2) * grid.h)))
    return out


def damped_copy(ext: ExtensionField) -> ExtensionField:
    """Multiply by 1 + y/(1+y): same trace, strictly larger energy."""
    damp = (1.0 + ext.levels / (1.0 + ext.levels))[:, None]
    return ExtensionField(grid=ext.grid, s=ext.s, levels=ext.levels,
                          values=ext.values * damp, trace=ext.trace)


def random_non_extension(ext: ExtensionField, rng) -> ExtensionField:
    """Perturb an extension without touching its trace.

    Adds a random smooth field that vanishes at y = 0 (factor y/(1+y))
    and decays in y, built from a few low x-modes.
    """
    grid, y = ext.grid, ext.levels
    amp = 0.3 * np.max(np.abs(ext.values))
    profile = (y / (1.0 + y) * np.exp(-y / (0.05 * grid.length)))[:, None]
    bump = np.zeros(grid.n)
    for k in range(1, 6):
        bump += rng.normal() * np.cos(2 * np.pi * k * grid.x / grid.length)
        bump += rng.normal() * np.sin(2 * np.pi * k * grid.x / grid.length)
    pert = amp * profile * bump[None, :] / max(np.max(np.abs(bump)), 1e-300)
    return ExtensionField(grid=grid, s=ext.s, levels=y,
                          values=ext.values + pert, trace=ext.trace)


def trace_inequality_trials(f: Field, s: float, n_trials: int = 20,
                            seed: int = 0, n_levels: int = 256) -> dict:
    """Energies of random non-extension fields vs the sharp trace bound."""
    ext = extend(f, s, n_levels=n_levels)
    bound = c_constant(ext.a) * hs_seminorm_sq(f, s)
    rng = np.random.default_rng(seed)
    energies = [dirichlet_energy(random_non_extension(ext, rng))
                for _ in range(n_trials)]
    return {"bound": float(bound),
            "extension_energy": float(dirichlet_energy(ext)),
            "trial_energies": [float(e) for e in energies],
            "all_strict": bool(all(e > bound for e in energies))}


def rayleigh_eigen_check(psi: Field, potential: Field, lam_claimed: float,
                         s: float, n_levels: int = 256) -> float:
    """|c_a^(-1) energy(extend(psi)) + int V psi^2 - lam_claimed|.

    The half-plane route to the Rayleigh quotient of (-Lap)^s + V; psi is
    assumed L2-normalized.
    """
    a = weight_exponent(s)
    energy = dirichlet_energy(extend(psi, s, n_levels=n_levels))
    pot = float(np.sum(potential.values * psi.values ** 2) * psi.grid.h)
    return abs(energy / c_constant(a) + pot - lam_claimed)


def nodal_domains(ext: ExtensionField, threshold_fraction: float = 1e-6) -> int:
    """Count sign-definite connected components (4-connectivity).

    The strip is periodic in x, so components touching at the left and
    right edges of the array are the same domain and are merged.
    """
    vmax = np.max(np.abs(ext.values))
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    total = 0
    for sign in (1.0, -1.0):
        mask = sign * ext.values > threshold_fraction * vmax
        labels, count = label(mask, structure=structure)
        parent = list(range(count + 1))

        def find(i):
            while parent[i] != i:
                parent[i] = parent[parent[i]]
                i = parent[i]
            return i

        for left, right in zip(labels[:, 0], labels[:, -1]):
            if left and right:
                ra, rb = find(int(left)), find(int(right))
                if ra != rb:
                    parent[rb] = ra
        total += len({find(i) for i in range(1, count + 1)})
    return total


def harmonicity_residual(ext: ExtensionField) -> float:
    """Sup norm of div(y^a grad u) / y^a on interior levels, normalized.

    Spectral in x, finite differences in y; an extension field should
    drive this to zero at second order in the level spacing.
    """
    grid, a, y = ext.grid, ext.a, ext.levels
    xi = 2.0 * np.pi * np.fft.rfftfreq(grid.n, d=grid.h)
    coeffs = np.fft.rfft(ext.values, axis=1)
    uxx = np.fft.irfft(coeffs * (-xi ** 2), n=grid.n, axis=1)
    uy = _dy_nonuniform(ext.values, y)
    uyy = _dy_nonuniform(uy, y)
    resid = uxx + uyy + (a / y)[:, None] * uy
    # measure on a resolved mid band: away from edge stencils and from the
    # smallest levels, where the relative finite-difference error diverges
    rows = np.where((y >= 0.05) & (y <= grid.length / 8.0))[0]
    rows = rows[(rows >= 4) & (rows < y.size - 4)]
    if rows.size == 0:
        raise ExtensionError("no resolved levels for the harmonicity check")
    scale = np.max(np.abs(uxx[rows])) + np.max(np.abs(uyy[rows]))
    return float(np.max(np.abs(resid[rows])) / max(scale, 1e-300))
