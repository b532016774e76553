"""Fourier-multiplier propagators and Duhamel integration.

The free linear flow is diagonal in Fourier space with symbol
-xi^4 + i*delta*xi^3 (the xi^3 part is zeroed at the Nyquist mode so the
multiplier stays conjugate-symmetric on even grids, cf.
http://math.mit.edu/~stevenj/fft-deriv.pdf).  Forced problems use an
exponential integrator that applies the multiplier exactly and treats
the source as piecewise linear in time, so constant-in-time sources are
integrated exactly.

Half-line propagation composes three pieces: extend the data to the
doubled grid, run the whole-line flow, then cancel the traces at x = 0
with a boundary-kernel correction supplied by the caller (any object
with a `correction_series(h, grid, eval_times, derivative)` method).
The correction only needs boundary traces up to the evaluation time, so
traces are recorded on a slightly longer horizon and smoothly tapered
before inversion; values at earlier times are unaffected by the tail.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .errors import AccuracyWarning, ConfigurationError
from .grids import (
    FieldSeries,
    Grid1D,
    SpectralField,
    TimeGrid,
    extend_to_line,
    restrict_to_halfline,
)

__all__ = [
    "symbol",
    "forward_transform",
    "inverse_transform",
    "propagate_whole_line",
    "whole_line_series",
    "propagate_half_line",
    "propagate_half_line_series",
    "duhamel_whole_line",
    "duhamel_half_line",
    "smooth_taper",
    "extended_time_grid",
    "check_far_decay",
]

DECAY_TOL = 1e-10
TRACE_MARGIN = 0.25


def symbol(grid, delta):
    """Fourier symbol of the linear flow, -xi^4 + i*delta*xi^3 with masked Nyquist."""
    xi = grid.wavenumbers
    xi3 = xi**3
    xi3 = xi3.copy()
    xi3[grid.nyquist_index] = 0.0  # odd-order term must vanish at the unpaired mode
    return -(xi**4) + 1j * delta * xi3


def forward_transform(field):
    return field.coeffs


def inverse_transform(grid, coeffs):
    return SpectralField(grid, coeffs=coeffs)


def propagate_whole_line(phi, t, params):
    """Apply the free flow for time t >= 0 on the field's own periodic grid."""
    if t < 0:
        raise ConfigurationError("propagation time must be nonnegative")
    mult = np.exp(t * symbol(phi.grid, params.delta))
    return SpectralField(phi.grid, coeffs=phi.coeffs * mult)


def whole_line_series(phi, tgrid, params):
    """Free flow sampled at every node of tgrid (nodes measured from phi's time)."""
    lam = symbol(phi.grid, params.delta)
    rel = tgrid.nodes - tgrid.start
    coeffs = np.exp(np.outer(rel, lam)) * phi.coeffs[None, :]
    vals = _values_rows(phi.grid, coeffs)
    return FieldSeries(phi.grid, tgrid, vals)


def _coeff_rows(grid, values):
    phase = np.exp(-1j * grid.origin * grid.wavenumbers)
    return grid.dx * phase[None, :] * np.fft.fft(values, axis=1)


def _values_rows(grid, coeffs):
    phase = np.exp(1j * grid.origin * grid.wavenumbers)
    return np.fft.ifft(coeffs * phase[None, :], axis=1) / grid.dx


def _etd_weights(z, dt):
    """Exact multiplier E = e^z plus piecewise-linear source weights a, b.

    a multiplies the source at the step start, b at the step end; both
    reduce to dt/2 as z -> 0 (trapezoidal limit).
    """
    z = np.asarray(z, dtype=complex)
    E = np.exp(z)
    small = np.abs(z) < 0.5
    zs = np.where(small, 0.0, z)  # avoid 0/0 in the closed forms
    with np.errstate(divide="ignore", invalid="ignore"):
        phi1 = (E - 1.0) / zs
        phi2 = (E - 1.0 - z) / zs**2
    p1 = np.zeros_like(z)
    p2 = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(18):
        p1 += term / math.factorial(k + 1)
        p2 += term / math.factorial(k + 2)
        term = term * z
    phi1 = np.where(small, p1, phi1)
    phi2 = np.where(small, p2, phi2)
    return E, dt * (phi1 - phi2), dt * phi2


def duhamel_whole_line(source, params, initial=None):
    """March p' = L p + f with the exponential integrator; p(0) = initial or 0."""
    grid, tgrid = source.grid, source.tgrid
    lam = symbol(grid, params.delta)
    E, a, b = _etd_weights(lam * tgrid.dt, tgrid.dt)
    fhat = _coeff_rows(grid, source.values)
    phat = np.zeros(grid.n, dtype=complex) if initial is None else initial.coeffs.astype(complex)
    rows = np.empty((tgrid.steps + 1, grid.n), dtype=complex)
    rows[0] = phat
    for j in range(tgrid.steps):
        phat = E * phat + a * fhat[j] + b * fhat[j + 1]
        rows[j + 1] = phat
    return FieldSeries(grid, tgrid, _values_rows(grid, rows))


def smooth_taper(u):
    """C-infinity transition equal to 1 at u<=0 and 0 at u>=1."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f = np.where(u > 0, np.exp(-1.0 / np.maximum(u, 1e-300)), 0.0)
        g = np.where(u < 1, np.exp(-1.0 / np.maximum(1.0 - u, 1e-300)), 0.0)
    return g / (f + g)


def extended_time_grid(tgrid, margin=TRACE_MARGIN):
    """Same dt, horizon stretched by >= margin (integer number of extra steps)."""
    extra = max(2, math.ceil(tgrid.steps * margin))
    steps = tgrid.steps + extra
    return TimeGrid(steps * tgrid.dt, steps, start=tgrid.start)


def _taper_weights(tgrid_ext, t_live):
    """Weights equal to 1 up to t_live and rolling smoothly to 0 at the horizon."""
    t = tgrid_ext.nodes - tgrid_ext.start
    live = t_live - tgrid_ext.start
    width = (tgrid_ext.nodes[-1] - tgrid_ext.start) - live
    return smooth_taper((t - live) / width)


def check_far_decay(values, what="field"):
    vals = np.abs(np.asarray(values))
    scale = vals.max()
    if scale == 0:
        return
    edge = max(vals[..., 0].max(), vals[..., -1].max())
    if edge > DECAY_TOL * scale:
        warnings.warn(
            f"{what} has relative magnitude {edge / scale:.2e} at the domain edge; "
            "truncation error may exceed the target",
            AccuracyWarning,
            stacklevel=3,
        )


def _boundary_data(boundary_module):
    # local import helper keeps this module free of a hard dependency cycle
    from .boundary import BoundaryData

    return BoundaryData


TRACE_FLOOR = 1e-13


def _trace_refinement(tg_ext, boundary_op):
    """Power-of-two refinement bringing the trace sampling up to the target."""
    quad = getattr(boundary_op, "quad", None)
    target = getattr(quad, "min_trace_samples", 1024)
    r = 1
    while tg_ext.steps * r < target:
        r *= 2
    return r


def _point_weights(grid, index):
    # inverse-DFT row for a single node: u(x_j) = coeffs . w
    n = grid.n
    k = np.arange(n)
    return np.exp(1j * grid.origin * grid.wavenumbers) * np.exp(2j * np.pi * index * k / n) / (n * grid.dx)


def propagate_half_line_series(phi, tgrid, params, boundary_op, rule="blend4"):
    """Homogeneous-boundary flow on the half line, sampled on tgrid.

    Extends phi to the doubled grid, runs the free flow, then subtracts
    the boundary-kernel solution matching the traces of the extended
    flow at x = 0, which enforces u(0,t) = u_x(0,t) = 0.  Traces are
    sampled on a refined time lattice so the correction kernel sees the
    corner behaviour of the extension; the correction is skipped when
    the traces are at roundoff level relative to the field.
    """
    half = phi.grid
    ext = extend_to_line(phi, rule=rule, s=params.s)
    check_far_decay(ext.values, "extended initial data")
    tg_ext = extended_time_grid(tgrid)
    lam = symbol(ext.grid, params.delta)
    rel = tgrid.nodes - tgrid.start
    coeffs = np.exp(np.outer(rel, lam)) * ext.coeffs[None, :]
    vals = _values_rows(ext.grid, coeffs)
    i0 = half.n  # x = 0 sits in the middle of the doubled grid
    out = np.real(vals[:, i0:])
    field_scale = float(np.abs(out).max())

    refine = _trace_refinement(tg_ext, boundary_op)
    tg_fine = TimeGrid(tg_ext.horizon, tg_ext.steps * refine, start=tg_ext.start)
    w0 = _point_weights(ext.grid, i0)
    rows = np.exp(np.outer(tg_fine.nodes - tg_fine.start, lam))
    g1 = np.real(rows @ (ext.coeffs * w0))
    g2 = np.real(rows @ (ext.coeffs * _first_derivative_mult(ext.grid) * w0))
    taper = _taper_weights(tg_fine, tgrid.nodes[-1])
    BoundaryData = _boundary_data(None)
    h = BoundaryData(tg_fine, g1 * taper, g2 * taper)
    if h.pair_max() > TRACE_FLOOR * field_scale:
        out = out - boundary_op.correction_series(h, half, tgrid.nodes)
    return FieldSeries(half, tgrid, out)


def _first_derivative_mult(grid):
    mult = 1j * grid.wavenumbers
    mult = mult.copy()
    mult[grid.nyquist_index] = 0.0
    return mult


def propagate_half_line(phi, t, params, boundary_op, rule="blend4", steps=64):
    """Single-time version of the homogeneous-boundary half-line flow."""
    tgrid = TimeGrid(t, steps)
    series = propagate_half_line_series(phi, tgrid, params, boundary_op, rule=rule)
    return series.field(tgrid.steps)


def duhamel_half_line(source, params, boundary_op, half_grid=None, rule="zero"):
    """Forced half-line flow with zero data: int_0^t W(t-tau) f(tau) dtau.

    `source` may live on the half grid (it is then extended by `rule`
    row by row) or directly on the doubled grid of `half_grid`.  The
    whole-line Duhamel integral is corrected by the boundary kernel
    driven by its own traces, which restores homogeneous boundary
    values on the half line.
    """
    if half_grid is None:
        half_grid = source.grid
        ext_rows = np.zeros((source.tgrid.steps + 1, 2 * half_grid.n), dtype=complex)
        for j in range(source.tgrid.steps + 1):
            ext_rows[j] = extend_to_line(source.field(j), rule=rule, s=params.s).values
        line_grid = half_grid.doubled()
        src = FieldSeries(line_grid, source.tgrid, ext_rows)
    else:
        src = source
        line_grid = source.grid
        if line_grid.n != 2 * half_grid.n:
            raise ConfigurationError("doubled-grid source does not match the half grid")
    tgrid = src.tgrid
    tg_ext = extended_time_grid(tgrid)
    pad = tg_ext.steps - tgrid.steps
    taper_src = smooth_taper(np.arange(1, pad + 1) / pad)
    ext_vals = np.concatenate(
        [src.values, src.values[-1][None, :] * taper_src[:, None]], axis=0
    )
    line = duhamel_whole_line(FieldSeries(line_grid, tg_ext, ext_vals), params)
    i0 = half_grid.n
    g1 = np.real(line.values[:, i0])
    dvals = _values_rows(
        line_grid, _coeff_rows(line_grid, line.values) * _first_derivative_mult(line_grid)[None, :]
    )
    g2 = np.real(dvals[:, i0])
    taper = _taper_weights(tg_ext, tgrid.nodes[-1])
    BoundaryData = _boundary_data(None)
    h = BoundaryData(tg_ext, g1 * taper, g2 * taper)
    out = np.real(line.values[: tgrid.steps + 1, i0:])
    if h.pair_max() > TRACE_FLOOR * float(np.abs(out).max(initial=0.0)):
        out = out - boundary_op.correction_series(h, half_grid, tgrid.nodes)
    return FieldSeries(half_grid, tgrid, out)
