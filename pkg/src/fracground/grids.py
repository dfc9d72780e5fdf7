"""Periodic collocation grid, Fourier multipliers, norms.

Conventions used throughout the package:

* grid nodes x_j = -L/2 + j*h, j = 0..N-1, h = L/N, N a power of two;
* frequencies xi_k = 2*pi*k/L in FFT ordering;
* semi-discrete transform fhat_k = h * sum_j f_j exp(-i xi_k x_j), so that
  integral norms are approximated by h * sums and Parseval reads
  int |f|^2 dx ~= h*sum|f_j|^2 = (1/L) * sum_k |fhat_k|^2.

Radial Fourier multipliers m(xi) = (|xi|^(2s) + lam)^power, optionally
multiplied by log(xi^2) (set to 0 at xi = 0, where the product has a
removable limit), cover the fractional Laplacian, its resolvent and the
logarithmic derivative of the symbol in s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L/2, L/2)."""

    length: float
    n: int

    def __post_init__(self):
        if self.length <= 0:
            raise GridError("grid length must be positive")
        if self.n < 4 or (self.n & (self.n - 1)) != 0:
            raise GridError("grid size must be a power of two >= 4")

    @property
    def h(self) -> float:
        return self.length / self.n

    @property
    def x(self) -> np.ndarray:
        return -0.5 * self.length + self.h * np.arange(self.n)

    @property
    def xi(self) -> np.ndarray:
        # FFT-ordered frequencies 2*pi*k/L
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.h)


def make_grid(length: float, n: int) -> Grid:
    return Grid(float(length), int(n))


@dataclass(frozen=True)
class SymbolSpec:
    """Radial multiplier m(xi) = (|xi|^(2s) + lam)^power [* log(xi^2)]."""

    s: float
    lam: float = 0.0
    power: float = 1.0
    log_factor: bool = False

    def __post_init__(self):
        if not (0.0 < self.s <= 1.0):
            raise GridError(f"order s must lie in (0, 1], got {self.s}")
        if self.lam < 0.0:
            raise GridError("lam must be nonnegative")


@dataclass
class Field:
    """Real scalar field sampled on a Grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n,):
            raise GridError("field values must match the grid size")

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


def symbol_values(spec: SymbolSpec, xi: np.ndarray) -> np.ndarray:
    """Evaluate the multiplier on an array of frequencies."""
    base = np.abs(xi) ** (2.0 * spec.s) + spec.lam
    if spec.power != 1.0:
        if spec.lam == 0.0 and spec.power < 0:
            # keep the zero mode finite: 1/|xi|^(2s) is only used with lam>0,
            # guard anyway so diagnostics don't blow up
            with np.errstate(divide="ignore"):
                m = np.where(base > 0, base ** spec.power, 0.0)
        else:
            m = base ** spec.power
    else:
        m = base
    if spec.log_factor:
        with np.errstate(divide="ignore"):
            lg = np.where(xi == 0.0, 0.0, np.log(xi * xi))
        m = m * lg
    return m


def fourier_coeffs(field: Field) -> np.ndarray:
    """Semi-discrete Fourier coefficients fhat_k = h * DFT(f)_k."""
    return field.grid.h * np.fft.fft(field.values)


def apply_symbol(field: Field, spec: SymbolSpec) -> Field:
    """Apply a radial Fourier multiplier; parity and realness preserved."""
    fh = np.fft.fft(field.values)
    m = symbol_values(spec, field.grid.xi)
    out = np.fft.ifft(m * fh).real
    return Field(field.grid, out)


def derivative(field: Field, order: int = 1) -> Field:
    """Spectral derivative d^order/dx^order."""
    fh = np.fft.fft(field.values)
    mult = (1j * field.grid.xi) ** order
    if order % 2 == 1:
        # zero the Nyquist mode for odd derivatives (it has no well-defined sign)
        mult[field.grid.n // 2] = 0.0
    return Field(field.grid, np.fft.ifft(mult * fh).real)


def hs_seminorm_sq(field: Field, s: float) -> float:
    """int |(-Lap)^{s/2} f|^2 dx via Parseval on the grid."""
    fh = fourier_coeffs(field)
    xi = field.grid.xi
    return float(np.sum(np.abs(xi) ** (2.0 * s) * np.abs(fh) ** 2) / field.grid.length)


def l2_norm_sq(field: Field) -> float:
    return float(field.grid.h * np.sum(field.values ** 2))


def lp_norm(field: Field, p: float) -> float:
    if p == np.inf:
        return float(np.max(np.abs(field.values)))
    if p <= 0:
        raise GridError("p must be positive")
    return float((field.grid.h * np.sum(np.abs(field.values) ** p)) ** (1.0 / p))


def inner(f: Field, g: Field) -> float:
    """Grid L2 inner product h * sum f g."""
    if f.grid != g.grid:
        raise GridError("fields live on different grids")
    return float(f.grid.h * np.sum(f.values * g.values))


def integral(f: Field) -> float:
    return float(f.grid.h * np.sum(f.values))


def resample(field: Field, n_new: int) -> Field:
    """Fourier interpolation / decimation onto an N_new grid, same length.

    Decimation keeps the lowest modes (band truncation); interpolation
    zero-pads. The Nyquist coefficient is split symmetrically on upsampling.
    """
    grid = field.grid
    n_old = grid.n
    if n_new == n_old:
        return field.copy()
    fh = np.fft.fft(field.values)
    out = np.zeros(n_new, dtype=complex)
    half = min(n_old, n_new) // 2
    out[:half] = fh[:half]
    out[-(half - 1):] = fh[-(half - 1):]
    if n_new > n_old:
        out[half] = 0.5 * fh[half]
        out[-half] = 0.5 * np.conj(fh[half])
    else:
        out[half] = fh[half].real + fh[-half].real  # fold the split pair
    vals = np.fft.ifft(out).real * (n_new / n_old)
    return Field(make_grid(grid.length, n_new), vals)


def recenter_peak(field: Field) -> Field:
    """Roll the field so its maximum sits at x = 0."""
    j_max = int(np.argmax(field.values))
    j_zero = field.grid.n // 2  # index of x = 0
    return Field(field.grid, np.roll(field.values, j_zero - j_max))


def even_part(field: Field) -> Field:
    v = field.values
    refl = np.roll(v[::-1], 1)  # f(-x) on the offset grid
    return Field(field.grid, 0.5 * (v + refl))


def odd_part(field: Field) -> Field:
    v = field.values
    refl = np.roll(v[::-1], 1)
    return Field(field.grid, 0.5 * (v - refl))


def parity_defect(field: Field) -> float:
    """sup |f(x) - f(-x)| relative to sup |f|; zero for even fields."""
    denom = np.max(np.abs(field.values)) or 1.0
    return float(np.max(np.abs(odd_part(field).values)) * 2.0 / denom)
