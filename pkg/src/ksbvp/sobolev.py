"""Discrete Sobolev norms: line, half-line, time-interval, and composites.

Fractional norms are computed through DFT weights (1+freq^2)^s.  On the
half line the norm is an extension surrogate: the minimum line norm over
the implemented reflection-blend family (plus zero-extension), which
over-estimates the continuum infimum but is reproducible and cheap.
Time-interval norms zero-pad the samples to a dyadic length at least
four times the interval before the DFT, so compactly supported traces
see almost no periodization.  None of this reproduces the continuum
spaces exactly; estimate checks therefore record ratios, never absolute
constants.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, IncompleteRecordError
from .grids import FieldSeries, extend_rows, extend_to_line

__all__ = [
    "SobolevIndex",
    "NormReport",
    "EXTENSION_FAMILY",
    "hs_norm_line",
    "hs_norm_halfline",
    "hr_norm_time",
    "trace_stations",
    "x_norm",
    "x_norm_parts",
    "x_eps_norm",
    "x_eps_norm_parts",
    "data_norm",
    "pair_norm_time",
    "embedding_report",
]

EXTENSION_FAMILY = ("blend1", "blend2", "blend3", "blend4", "zero")

# trace exponents: value traces live in H^{s/4 + 3/8}(0,T), derivative
# traces in H^{s/4 + 1/8}(0,T)
TRACE_EXPONENT_VALUE = 3.0 / 8.0
TRACE_EXPONENT_DERIV = 1.0 / 8.0


@dataclass(frozen=True)
class SobolevIndex:
    """Regularity index with the branch tag used by the solver."""

    s: float

    def __post_init__(self):
        if self.s < -2.0:
            raise ConfigurationError(f"regularity index below supported range: s={self.s}")

    @property
    def branch(self):
        return "nonneg" if self.s >= 0 else "weighted-negative"


@dataclass(frozen=True)
class NormReport:
    """One measured inequality: lhs <= C * rhs with C unknown, ratio recorded."""

    estimate: str
    lhs: float
    rhs: float
    data: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.lhs < 0 or self.rhs <= 0:
            raise ConfigurationError("norm report needs lhs >= 0 and rhs > 0")

    @property
    def ratio(self):
        return self.lhs / self.rhs

    def as_dict(self):
        return {
            "estimate": self.estimate,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "ratio": self.ratio,
            "data": self.data,
        }

    def to_json(self):
        return json.dumps(self.as_dict(), sort_keys=True)


def hs_norm_line(f, s):
    """(sum (1+xi^2)^s |f_hat|^2 dxi/2pi)^(1/2) on the field's own grid."""
    grid = f.grid
    xi2 = grid.wavenumbers**2
    dxi = 2.0 * np.pi / grid.length
    return float(np.sqrt(np.sum((1.0 + xi2) ** s * np.abs(f.coeffs) ** 2) * dxi / (2.0 * np.pi)))


def _hs_norms_rows(grid, rows, s):
    """Line norms of many fields at once; rows hold values on `grid`."""
    coeffs = np.fft.fft(rows, axis=-1) * grid.dx
    # the origin phase factor has unit modulus and drops out of the norm
    xi2 = grid.wavenumbers**2
    w = (1.0 + xi2) ** s
    return np.sqrt(np.abs(coeffs) ** 2 @ w / grid.length)


def _min_rule_norms(grid, rows, exponents, rules):
    """For each exponent, per-row minimum over extension rules of the line norm."""
    ext_grid = grid.doubled()
    best = {s: None for s in exponents}
    for rule in rules:
        ext = extend_rows(grid, rows, rule)
        for s in exponents:
            norms = _hs_norms_rows(ext_grid, ext, s)
            best[s] = norms if best[s] is None else np.minimum(best[s], norms)
    return best


def hs_norm_halfline(f, s, rule=None):
    """Extension-surrogate H^s norm of a half-line field.

    With rule=None: for s > 0, minimum over the blend family and zero
    extension; for s < 0, the zero extension (blends are undefined
    there).  A specific rule evaluates just that extension.

    s = 0 bypasses the extension machinery and returns the trapezoid
    L^2(0, L) norm.  The half-weight at the boundary node makes the
    quadrature second order there, where the zero extension's node sum
    is only first order; any extension rule restricts back to the same
    values, so the result is rule-independent.
    """
    if s < -2.0:
        raise ConfigurationError("half-line norms support s >= -2")
    if s == 0.0:
        v = np.abs(np.asarray(f.values)) ** 2
        return float(np.sqrt(np.trapezoid(v, dx=f.grid.dx)))
    if rule is not None:
        return hs_norm_line(extend_to_line(f, rule=rule, s=s), s)
    if s < 0:
        return hs_norm_line(extend_to_line(f, rule="zero", s=s), s)
    return min(hs_norm_line(extend_to_line(f, rule=r, s=s), s) for r in EXTENSION_FAMILY)


def _padded_length(m):
    n = 1
    while n < 4 * m:
        n *= 2
    return n


def hr_norm_time(samples, dt, r):
    """H^r norm of a time trace on (0, T), via zero-padded DFT.

    Vectorized over leading axes (samples may be (..., m)).
    """
    if not -1.0 <= r <= 2.0:
        raise ConfigurationError("time-trace exponent outside the supported range [-1, 2]")
    arr = np.asarray(samples, dtype=float)
    m = arr.shape[-1]
    if m < 4:
        raise IncompleteRecordError("time norms need at least 4 samples")
    n = _padded_length(m)
    buf = np.zeros(arr.shape[:-1] + (n,))
    buf[..., :m] = arr
    hat = np.fft.fft(buf, axis=-1) * dt
    mu2 = (2.0 * np.pi * np.fft.fftfreq(n, d=dt)) ** 2
    total = np.abs(hat) ** 2 @ (1.0 + mu2) ** r / (n * dt)
    return np.sqrt(total)


def trace_stations(grid, count=16):
    """Geometrically spaced station nodes including x = 0, snapped to the grid."""
    if count < 2:
        raise ConfigurationError("need at least two trace stations")
    frac = grid.length * 0.5 ** np.arange(count - 1, 0, -1)
    idx = np.unique(np.clip(np.round(frac / grid.dx).astype(int), 0, grid.n - 1))
    idx = np.unique(np.concatenate([[0], idx]))
    return idx


def _series_checks(u):
    if not isinstance(u, FieldSeries):
        raise ConfigurationError("composite norms expect a FieldSeries")
    if u.tgrid.steps + 1 < 4:
        raise IncompleteRecordError("composite norms need at least 4 time samples")


def x_norm_parts(u, s, stations=None):
    """The four constituents of the solution-space norm, as a dict.

    sup-in-t H^s, L^2-in-t H^{s+2}, and the two sup-over-station
    fractional time-trace norms (value and x-derivative).
    """
    _series_checks(u)
    grid, tgrid = u.grid, u.tgrid
    if stations is None:
        stations = trace_stations(grid)
    rules = EXTENSION_FAMILY if s >= 0 else ("zero",)
    rows = np.real(u.values)
    best = _min_rule_norms(grid, rows, (s, s + 2.0), rules)
    norms_s, norms_s2 = best[s], best[s + 2.0]
    sup_t = float(norms_s.max())
    l2_t = float(np.sqrt(np.trapezoid(norms_s2**2, dx=tgrid.dt)))
    traces = u.values[:, stations].T  # (stations, times)
    dtraces = u.x_derivative_values()[:, stations].T
    r1 = s / 4.0 + TRACE_EXPONENT_VALUE
    r2 = s / 4.0 + TRACE_EXPONENT_DERIV
    trace_val = float(hr_norm_time(traces, tgrid.dt, r1).max())
    trace_der = float(hr_norm_time(dtraces, tgrid.dt, r2).max())
    return {
        "sup_t_hs": sup_t,
        "l2_t_hs2": l2_t,
        "trace_value": trace_val,
        "trace_deriv": trace_der,
    }


def x_norm(u, s, stations=None):
    return float(sum(x_norm_parts(u, s, stations=stations).values()))


def x_eps_norm_parts(u, s, eps, stations=None):
    """Constituents of the weighted norm for the -2 < s < 0 branch.

    The temporal weight t^(|s|/4 + eps) multiplies the solution; base
    regularity moves to L^2 / H^2 and the trace exponents to 3/8, 1/8.
    """
    if not (-2.0 < s < 0.0) or eps <= 0:
        raise ConfigurationError("weighted norm needs -2 < s < 0 and eps > 0")
    _series_checks(u)
    grid, tgrid = u.grid, u.tgrid
    if stations is None:
        stations = trace_stations(grid)
    rel = tgrid.nodes - tgrid.start
    weight = rel ** (abs(s) / 4.0 + eps)
    wvals = np.real(u.values) * weight[:, None]
    best = _min_rule_norms(grid, wvals, (0.0, 2.0), EXTENSION_FAMILY)
    norms_0, norms_2 = best[0.0], best[2.0]
    traces = wvals[:, stations].T
    dtraces = FieldSeries(grid, tgrid, wvals).x_derivative_values()[:, stations].T
    return {
        "sup_t_weighted_l2": float(norms_0.max()),
        "l2_t_weighted_h2": float(np.sqrt(np.trapezoid(norms_2**2, dx=tgrid.dt))),
        "trace_value": float(hr_norm_time(traces, tgrid.dt, TRACE_EXPONENT_VALUE).max()),
        "trace_deriv": float(hr_norm_time(dtraces, tgrid.dt, TRACE_EXPONENT_DERIV).max()),
    }


def x_eps_norm(u, s, eps, stations=None):
    return float(sum(x_eps_norm_parts(u, s, eps, stations=stations).values()))


def pair_norm_time(h, s):
    """Boundary-pair norm: h1 in H^{s/4+3/8}, h2 in H^{s/4+1/8} on (0, T)."""
    dt = h.tgrid.dt
    n1 = float(hr_norm_time(h.h1, dt, s / 4.0 + TRACE_EXPONENT_VALUE))
    n2 = float(hr_norm_time(h.h2, dt, s / 4.0 + TRACE_EXPONENT_DERIV))
    return n1 + n2


def data_norm(phi, h, s):
    """Size of the data pair (phi, h): half-line H^s plus the boundary pair norm."""
    return hs_norm_halfline(phi, s) + pair_norm_time(h, s)


def embedding_report(f, s):
    """Ratio record for the L^p control of rough-data products, p = 2/(2|s|-1).

    Defined for -1 <= s < -1/2 where p lands in [2, infinity).  lhs is
    the trapezoid L^p norm on the half line, rhs the surrogate H^(s+1)
    norm; only the ratio is meaningful, the constant is not claimed.
    """
    if not (-1.0 <= s < -0.5):
        raise ConfigurationError("embedding ratio defined for -1 <= s < -1/2")
    p = 2.0 / (2.0 * abs(s) - 1.0)
    vals = np.abs(np.asarray(f.values, dtype=complex))
    lhs = float(np.trapezoid(vals**p, dx=f.grid.dx) ** (1.0 / p))
    rhs = hs_norm_halfline(f, s + 1.0)
    return NormReport("lp-product-control", lhs, rhs, {"s": s, "p": p})
