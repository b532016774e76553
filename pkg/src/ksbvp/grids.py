"""Uniform grids, spectral fields, and half-line extension rules.

Space is discretized on a uniform periodic grid; Fourier coefficients
follow the integral convention

    fhat(xi) = int f(x) exp(-i x xi) dx,   f(x) = (1/2pi) int fhat exp(i x xi) dxi,

so discrete coefficients are dx * exp(-i x0 xi) * FFT(values) and
Parseval reads sum |f|^2 dx = sum |fhat|^2 dxi / (2pi).  Half-line data
lives on a grid with origin 0; whole-line operations act on the doubled
grid [-L, L) with the half-line field extended by a reflection blend or
by zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "Grid1D",
    "TimeGrid",
    "ModelParams",
    "SpectralField",
    "FieldSeries",
    "BLEND4_COEFFS",
    "blend_coefficients",
    "extend_to_line",
    "extend_rows",
    "restrict_to_halfline",
    "gradient4",
]

# Reflection-blend coefficients a_k for psi(x) = sum a_k f(k x); they are
# the Lagrange weights l_k(-1) on nodes {1,..,order}, which make the
# blended reflection match f and its first (order-1) derivatives at x = 0.
BLEND4_COEFFS = (10.0, -20.0, 15.0, -4.0)


def blend_coefficients(order):
    """Reflection-blend weights l_k(-1) on nodes {1..order}."""
    if not 1 <= order <= 8:
        raise ConfigurationError("blend order must be between 1 and 8")
    out = []
    for k in range(1, order + 1):
        a = 1.0
        for j in range(1, order + 1):
            if j != k:
                a *= (-1.0 - j) / (k - j)
        out.append(a)
    return tuple(out)


def _require_power_of_two(n):
    if n < 8 or (n & (n - 1)) != 0:
        raise ConfigurationError(f"grid size must be a power of two >= 8, got {n}")


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1-d grid with n nodes x_j = origin + j*dx covering [origin, origin+length)."""

    n: int
    length: float
    origin: float = 0.0

    def __post_init__(self):
        _require_power_of_two(self.n)
        if not self.length > 0:
            raise ConfigurationError(f"grid length must be positive, got {self.length}")

    @property
    def dx(self):
        return self.length / self.n

    @cached_property
    def nodes(self):
        return self.origin + self.dx * np.arange(self.n)

    @cached_property
    def wavenumbers(self):
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.dx)

    @property
    def nyquist_index(self):
        return self.n // 2

    def doubled(self):
        """Whole-line companion grid [origin-length, origin+length) with 2n nodes."""
        return Grid1D(2 * self.n, 2.0 * self.length, self.origin - self.length)

    def index_of(self, x, tol=1e-9):
        j = (x - self.origin) / self.dx
        ji = int(round(j))
        if abs(j - ji) > tol or not (0 <= ji < self.n):
            raise ConfigurationError(f"x = {x} is not a node of this grid")
        return ji


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time nodes t_j = start + j*dt, j = 0..steps."""

    horizon: float
    steps: int
    start: float = 0.0

    def __post_init__(self):
        if not self.horizon > 0:
            raise ConfigurationError(f"time horizon must be positive, got {self.horizon}")
        if self.steps < 1:
            raise ConfigurationError(f"need at least one step, got {self.steps}")

    @property
    def dt(self):
        return self.horizon / self.steps

    @cached_property
    def nodes(self):
        return self.start + self.dt * np.arange(self.steps + 1)

    @property
    def end(self):
        return self.start + self.horizon


@dataclass(frozen=True)
class ModelParams:
    """Model parameters: dispersion coefficient, regularity index, weight offset."""

    delta: float = 0.0
    s: float = 0.0
    eps: float = 0.0

    def __post_init__(self):
        if self.s < -2.0:
            raise ConfigurationError(f"regularity index below -2 unsupported, got s={self.s}")

    @property
    def branch(self):
        return "nonneg" if self.s >= 0.0 else "weighted"

    def require_weighted(self):
        if not (-2.0 + 4.0 * self.eps < self.s < 0.0):
            raise ConfigurationError(
                f"weighted branch needs -2+4*eps < s < 0, got s={self.s}, eps={self.eps}"
            )


class SpectralField:
    """A field on a Grid1D holding values and/or Fourier coefficients lazily.

    Whichever representation was set last is authoritative; the other is
    computed on first access and cached.
    """

    def __init__(self, grid, values=None, coeffs=None):
        if values is None and coeffs is None:
            raise ConfigurationError("need values or coeffs")
        self.grid = grid
        self._values = None if values is None else np.asarray(values, dtype=complex)
        self._coeffs = None if coeffs is None else np.asarray(coeffs, dtype=complex)
        for arr in (self._values, self._coeffs):
            if arr is not None and arr.shape != (grid.n,):
                raise ConfigurationError(f"array shape {arr.shape} does not match grid n={grid.n}")

    @classmethod
    def from_function(cls, grid, f):
        return cls(grid, values=f(grid.nodes))

    @property
    def values(self):
        if self._values is None:
            phase = np.exp(1j * self.grid.origin * self.grid.wavenumbers)
            self._values = np.fft.ifft(self._coeffs * phase) / self.grid.dx
        return self._values

    @property
    def coeffs(self):
        if self._coeffs is None:
            phase = np.exp(-1j * self.grid.origin * self.grid.wavenumbers)
            self._coeffs = self.grid.dx * phase * np.fft.fft(self._values)
        return self._coeffs

    @property
    def real_values(self):
        return np.real(self.values)

    def derivative(self, order=1):
        """Spectral derivative; Nyquist mode is zeroed for odd orders."""
        ik = 1j * self.grid.wavenumbers
        mult = ik**order
        if order % 2 == 1:
            mult = mult.copy()
            mult[self.grid.nyquist_index] = 0.0
        return SpectralField(self.grid, coeffs=self.coeffs * mult)

    def l2_norm(self):
        return float(np.sqrt(self.grid.dx * np.sum(np.abs(self.values) ** 2)))

    def __add__(self, other):
        self._check_same_grid(other)
        return SpectralField(self.grid, values=self.values + other.values)

    def __sub__(self, other):
        self._check_same_grid(other)
        return SpectralField(self.grid, values=self.values - other.values)

    def __mul__(self, scalar):
        return SpectralField(self.grid, values=self.values * scalar)

    __rmul__ = __mul__

    def _check_same_grid(self, other):
        if other.grid != self.grid:
            raise ConfigurationError("fields live on different grids")


def extend_to_line(phi, rule="blend4", s=None):
    """Extend a half-line field (grid origin 0) to the doubled grid.

    rule "blend4" reflects through x=0 with the order-4 blend (continuous
    up to the third derivative for smooth data); rule "zero" pads with
    zeros.  The blend samples phi at stretched arguments k*x and treats
    points beyond the grid as zero, so it is intended for decaying data.
    """
    grid = phi.grid
    if abs(grid.origin) > 1e-12:
        raise ConfigurationError("extension expects a half-line grid with origin 0")
    if rule != "zero" and not (rule.startswith("blend") and rule[5:].isdigit()):
        raise ConfigurationError(f"unknown extension rule {rule!r}")
    if rule != "zero" and s is not None and s < 0:
        raise ConfigurationError("blend extensions are not defined for negative regularity; use zero")
    big = grid.doubled()
    vals = np.zeros(big.n, dtype=complex)
    v = phi.values
    n = grid.n
    vals[n:] = v
    if rule != "zero":
        coeffs = blend_coefficients(int(rule[5:]))
        m = np.arange(1, n)  # negative node -m*dx sits at doubled index n-m
        acc = np.zeros(n - 1, dtype=complex)
        for k, a in enumerate(coeffs, start=1):
            idx = k * m
            ok = idx <= n - 1
            acc[ok] += a * v[idx[ok]]
        vals[n - m] = acc
    return SpectralField(big, values=vals)


def extend_rows(grid, rows, rule="blend4"):
    """Vectorized extend_to_line for a stack of value rows on a half grid.

    rows has shape (m, grid.n); the result has shape (m, 2*grid.n) on
    the doubled companion grid.
    """
    rows = np.asarray(rows)
    n = grid.n
    out = np.zeros((rows.shape[0], 2 * n), dtype=rows.dtype)
    out[:, n:] = rows
    if rule != "zero":
        if not (rule.startswith("blend") and rule[5:].isdigit()):
            raise ConfigurationError(f"unknown extension rule {rule!r}")
        coeffs = blend_coefficients(int(rule[5:]))
        m = np.arange(1, n)
        acc = np.zeros((rows.shape[0], n - 1), dtype=rows.dtype)
        for k, a in enumerate(coeffs, start=1):
            idx = k * m
            ok = idx <= n - 1
            acc[:, ok] += a * rows[:, idx[ok]]
        out[:, n - m] = acc
    return out


def restrict_to_halfline(field, half_grid):
    """Restrict a doubled-grid field back to the half-line nodes [0, L)."""
    big = field.grid
    if big.n != 2 * half_grid.n or abs(big.origin + half_grid.length) > 1e-12:
        raise ConfigurationError("field is not on the doubled companion of the half grid")
    return SpectralField(half_grid, values=field.values[half_grid.n :])


_EDGE0 = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0
_EDGE1 = np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0


def gradient4(values, dx, axis=-1):
    """Fourth-order finite-difference first derivative on a uniform grid."""
    v = np.moveaxis(np.asarray(values), axis, -1)
    if v.shape[-1] < 6:
        raise ConfigurationError("gradient4 needs at least 6 nodes")
    out = np.empty_like(v, dtype=float if np.isrealobj(v) else complex)
    out[..., 2:-2] = (v[..., :-4] - 8 * v[..., 1:-3] + 8 * v[..., 3:-1] - v[..., 4:]) / (12 * dx)
    out[..., 0] = v[..., :5] @ _EDGE0 / dx
    out[..., 1] = v[..., :5] @ _EDGE1 / dx
    out[..., -1] = -(v[..., -1:-6:-1] @ _EDGE0) / dx
    out[..., -2] = -(v[..., -1:-6:-1] @ _EDGE1) / dx
    return np.moveaxis(out, -1, axis)


class FieldSeries:
    """A time-indexed family of fields on a common grid.

    values has shape (steps+1, n); row j is the field at time node t_j.
    """

    def __init__(self, grid, tgrid, values):
        values = np.asarray(values)
        if values.shape != (tgrid.steps + 1, grid.n):
            raise ConfigurationError(
                f"series shape {values.shape} does not match (steps+1, n)="
                f"({tgrid.steps + 1}, {grid.n})"
            )
        self.grid = grid
        self.tgrid = tgrid
        self.values = values

    @classmethod
    def zeros(cls, grid, tgrid):
        return cls(grid, tgrid, np.zeros((tgrid.steps + 1, grid.n)))

    def field(self, j):
        return SpectralField(self.grid, values=self.values[j])

    def trace(self, x):
        return self.values[:, self.grid.index_of(x)]

    def x_derivative_values(self):
        """du/dx at every node by fourth-order finite differences."""
        return gradient4(self.values, self.grid.dx, axis=1)

    def __add__(self, other):
        self._check(other)
        return FieldSeries(self.grid, self.tgrid, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return FieldSeries(self.grid, self.tgrid, self.values - other.values)

    def __mul__(self, scalar):
        return FieldSeries(self.grid, self.tgrid, self.values * scalar)

    __rmul__ = __mul__

    def _check(self, other):
        if other.grid != self.grid or other.tgrid != self.tgrid:
            raise ConfigurationError("series live on different grids")
