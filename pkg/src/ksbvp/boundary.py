"""Boundary kernel: the half-line solution driven by boundary data alone.

The solution with zero initial data and boundary values (h1, h2) has the
contour representation

    v(x,t) = 2 Re v+(x,t),
    v+(x,t) = (16/pi) int_0^inf e^{i 8 rho^4 t}
              [c1(rho) e^{lam1 x} + c2(rho) e^{lam2 x}] rho^3 drho,

where lam1, lam2 are the stable characteristic roots at tau = i 8 rho^4
and c1, c2 solve c1 + c2 = H1, c1 lam1 + c2 lam2 = H2 with Hj the
Laplace transform of hj on the contour.  x-derivatives insert powers of
lam under the integral.

Laplace transforms of sampled data are computed Filon-style: the data is
replaced by its cubic spline and the spline is integrated against
e^{-i mu t} exactly, so the result is uniformly accurate in mu (and
exact for cubic data).

The contour integral is split at a phase budget.  The low-frequency head
uses Gauss-Legendre panels in rho, graded near rho = 0 (where the roots
have a branch point) and sized so the phase advance 8 rho^4 t per panel
stays bounded.  The high-frequency tail switches to the variable
mu = 8 rho^4, where the oscillation e^{i mu t} is linear in mu and is
integrated exactly against a per-panel polynomial fit of the remaining
slowly-varying factor; tail panel widths grow geometrically, capped by
the phase drift of e^{lam x} over the panel.  The contour is truncated
where the data envelope |H1| + |H2|/|lam| (times rho^3) falls below a
relative tolerance, or at the sampling resolution of the data, whichever
comes first; a truncated tail above a reporting threshold raises an
AccuracyWarning with a tail estimate.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import AccuracyWarning, ConfigurationError
from .grids import SpectralField, TimeGrid
from .roots import root_curve

__all__ = [
    "BoundaryData",
    "LaplaceSamples",
    "QuadratureConfig",
    "laplace_on_contour",
    "pad_boundary_data",
    "BoundaryPropagator",
    "wbdr_eval",
    "wbdr_field",
]


@dataclass(frozen=True)
class BoundaryData:
    """Sampled boundary values h1 = u(0,t), h2 = u_x(0,t) on a uniform time grid."""

    tgrid: TimeGrid
    h1: np.ndarray
    h2: np.ndarray

    def __post_init__(self):
        for name in ("h1", "h2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            object.__setattr__(self, name, arr)
            if arr.shape != (self.tgrid.steps + 1,):
                raise ConfigurationError(f"{name} must have one sample per time node")

    @classmethod
    def zero(cls, tgrid):
        z = np.zeros(tgrid.steps + 1)
        return cls(tgrid, z, z.copy())

    @classmethod
    def from_callables(cls, tgrid, f1, f2=None):
        t = tgrid.nodes - tgrid.start
        h1 = np.asarray(f1(t), dtype=float) + np.zeros_like(t)
        h2 = np.zeros_like(t) if f2 is None else np.asarray(f2(t), dtype=float) + np.zeros_like(t)
        return cls(tgrid, h1, h2)

    @property
    def scale(self):
        return float(max(np.abs(self.h1).max(), np.abs(self.h2).max()))

    def pair_max(self):
        return float(max(np.abs(self.h1).max(initial=0.0), np.abs(self.h2).max(initial=0.0)))


@dataclass(frozen=True)
class LaplaceSamples:
    """Laplace transforms evaluated on the imaginary axis at the given mu nodes."""

    mu: np.ndarray
    h1_hat: np.ndarray
    h2_hat: np.ndarray


def pad_boundary_data(h, margin=0.25):
    """Continue the data past its horizon with a C^1 rolloff to zero.

    The transform treats data as zero beyond the grid, so values that are
    still live at the horizon produce a jump whose ringing pollutes the
    reconstruction near the end.  Padding is safe for evaluation at times
    within the original horizon: by causality those values only depend on
    earlier data.  The rolloff is the cubic Hermite interpolant matching
    the end value and slope (taken from the sample spline) and reaching
    zero with zero slope.
    """
    tg = h.tgrid
    extra = max(2, math.ceil(tg.steps * margin))
    tg_pad = TimeGrid((tg.steps + extra) * tg.dt, tg.steps + extra, start=tg.start)
    t = tg.nodes - tg.start
    width = extra * tg.dt
    u = np.arange(1, extra + 1) / extra
    blend_v = 1.0 - 3.0 * u**2 + 2.0 * u**3
    blend_s = width * (u - 2.0 * u**2 + u**3)
    out = []
    for samples in (h.h1, h.h2):
        spline = CubicSpline(t, samples)
        tail = samples[-1] * blend_v + float(spline.derivative()(t[-1])) * blend_s
        out.append(np.concatenate([samples, tail]))
    return BoundaryData(tg_pad, out[0], out[1])


def _oscillatory_moments(rate, w, order=3):
    """m_p = int_0^w sigma^p e^{-rate sigma} d sigma for p = 0..order.

    rate may be complex (pure-imaginary rates give Fourier moments).
    Closed forms via the integration-by-parts recurrence, switching to
    the Taylor series where the subtraction cancels.
    """
    rate = np.asarray(rate, dtype=complex)
    z = rate * w  # dimensionless
    out = np.empty((order + 1, z.shape[0]), dtype=complex)
    small = np.abs(z) < 4.0  # recurrence cancels below this; series converges fast
    rs = np.where(small, 1.0, rate)
    ez = np.exp(-z)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[0] = (1.0 - ez) / rs
        for p in range(1, order + 1):
            out[p] = (p * out[p - 1] - w**p * ez) / rs
    if np.any(small):
        zc = z[small]
        for p in range(order + 1):
            acc = np.zeros_like(zc)
            term = np.ones_like(zc)
            for k in range(34):
                acc = acc + term / (math.factorial(k) * (p + k + 1))
                term = term * (-zc)
            out[p][small] = acc * w ** (p + 1)
    return out


def _filon_transform(tgrid, samples, mu, chunk=8192):
    """int_0^T e^{-i mu t} f(t) dt with f the cubic spline of the samples."""
    t = tgrid.nodes - tgrid.start
    if len(t) < 4:
        raise ConfigurationError("Filon transform needs at least 4 samples")
    spline = CubicSpline(t, samples)
    c = spline.c  # (4, m): poly coeffs, highest power first, per interval
    mom_order = c[::-1]  # row p multiplies sigma^p
    mu = np.asarray(mu, dtype=float)
    out = np.empty(mu.shape[0], dtype=complex)
    for lo in range(0, mu.shape[0], chunk):
        m = mu[lo : lo + chunk]
        moments = _oscillatory_moments(1j * m, tgrid.dt)  # (4, nmu)
        E = np.exp(-1j * np.outer(m, t[:-1]))  # (nmu, intervals)
        acc = np.zeros(m.shape[0], dtype=complex)
        for p in range(4):
            acc += moments[p] * (E @ mom_order[p])
        out[lo : lo + chunk] = acc
    return out


def laplace_on_contour(h, mu):
    """Laplace transforms of (h1, h2) at s = i*mu, treating h as zero beyond its grid."""
    mu = np.asarray(mu, dtype=float)
    return LaplaceSamples(mu, _filon_transform(h.tgrid, h.h1, mu), _filon_transform(h.tgrid, h.h2, mu))


@dataclass(frozen=True)
class QuadratureConfig:
    """Contour quadrature controls.

    panels: hard cap on the total panel count (head plus tail).
    rho_max: fixed truncation point, or None to pick it from integrand decay.
    tol: relative decay threshold for the automatic truncation.
    head_phase: total phase 8 rho^4 t admitted to the Gauss-Legendre head;
        beyond it the quadrature switches to Filon panels in mu = 8 rho^4.
    min_trace_samples: trace sampling target used by the half-line
        propagators when they synthesize boundary data for the correction.
    """

    panels: int = 4000
    rho_max: float | None = None
    tol: float = 1e-12
    gl_order: int = 8
    grading_ratio: float = 1.35
    phase_base: float = np.pi / 2.0
    rho_cap: float = 40.0
    # contour frequencies above resolution_factor * pi / dt carry no sampled
    # information; the contour is truncated there regardless of decay
    resolution_factor: float = 16.0
    head_phase: float = 256.0
    tail_ratio: float = 1.06
    tail_allowance: float = np.pi / 2.0
    tail_order: int = 5
    min_trace_samples: int = 1024
    warn_tail_rel: float = 1e-8

    def __post_init__(self):
        if self.panels < 4 or self.gl_order < 2:
            raise ConfigurationError("quadrature needs panels >= 4 and gl_order >= 2")
        if self.tol <= 0 or self.grading_ratio <= 1.0 or self.tail_ratio <= 1.0:
            raise ConfigurationError("tol must be positive and grading ratios > 1")
        if not 1 <= self.tail_order <= 8:
            raise ConfigurationError("tail_order must be between 1 and 8")


# delta = 0 root asymptotics: lam/rho has real parts -sqrt(sqrt2+1), -sqrt(sqrt2-1)
_SLOW_DECAY = math.sqrt(math.sqrt(2.0) - 1.0)
_FAST_PHASE = math.sqrt(math.sqrt(2.0) + 1.0)


@dataclass
class _ContourMesh:
    # Gauss-Legendre head, parametrized by rho
    nodes: np.ndarray
    weights: np.ndarray
    lam1: np.ndarray
    lam2: np.ndarray
    head_edges: np.ndarray
    # Filon tail, parametrized by mu = 8 rho^4: panel p covers
    # [tail_edges[p], tail_edges[p+1]] with fit nodes tail_mu[p]
    tail_edges: np.ndarray
    tail_mu: np.ndarray
    tail_lam1: np.ndarray
    tail_lam2: np.ndarray
    rho_star: float


def _integrand_weight(samples, rho):
    """Envelope |H1| rho^3 + |H2| rho^3 / |lam| used for truncation decisions."""
    lam_scale = np.maximum(2.0 ** 1.25 * rho, 1e-12)
    return (np.abs(samples.h1_hat) + np.abs(samples.h2_hat) / lam_scale) * rho**3


def _phase_allowance(rel, base):
    # loosen the per-panel phase budget as the integrand decays underneath tol
    with np.errstate(divide="ignore"):
        level = np.floor(-np.log10(np.maximum(rel, 1e-300)) / 3.0)
    return base * np.clip(2.0**level, 1.0, 16.0)


def _fit_nodes(order):
    """Chebyshev abscissae on [0, 1] and the inverse monomial Vandermonde."""
    m = order + 1
    u = 0.5 * (1.0 - np.cos(np.pi * (2.0 * np.arange(m) + 1.0) / (2.0 * m)))
    vand = u[:, None] ** np.arange(m)[None, :]
    return u, np.linalg.inv(vand)


_FIT_CACHE: dict = {}


def _fit_basis(order):
    if order not in _FIT_CACHE:
        _FIT_CACHE[order] = _fit_nodes(order)
    return _FIT_CACHE[order]


def _build_mesh(h, params, t_span, x_max, quad):
    mu_res = quad.resolution_factor * np.pi / h.tgrid.dt
    rho_res = min((mu_res / 8.0) ** 0.25, quad.rho_cap)
    probe_rho = np.geomspace(1e-3, rho_res, 320)
    probe = laplace_on_contour(h, 8.0 * probe_rho**4)
    wenv = _integrand_weight(probe, probe_rho)
    env = np.maximum.accumulate(wenv[::-1])[::-1]  # running max from the right
    peak = float(env.max())
    if peak == 0.0:
        raise ConfigurationError("boundary data is identically zero; no mesh needed")
    if quad.rho_max is not None:
        rho_star = float(quad.rho_max)
    else:
        ipeak = int(np.argmax(env < peak))  # first index where env drops below peak
        below = env < quad.tol * peak
        below[:ipeak] = False
        if np.any(below):
            rho_star = float(probe_rho[int(np.argmax(below))])
        else:
            rho_star = float(rho_res)
            tail_rel = 16.0 / np.pi * float(env[-1]) * rho_res * 0.5 / peak
            if tail_rel > quad.warn_tail_rel:
                warnings.warn(
                    f"contour integrand has not decayed below tol={quad.tol:.1e} within "
                    f"the sampled resolution (rho={rho_res:.3g}); truncating there, "
                    f"relative tail estimate {tail_rel:.2e}",
                    AccuracyWarning,
                    stacklevel=4,
                )

    def rel_at(r):
        return float(np.interp(r, probe_rho, env, left=env[0], right=env[-1]) / peak)

    # head: Gauss-Legendre panels in rho up to the phase budget
    rho_head = min(rho_star, (quad.head_phase / (8.0 * max(t_span, 1e-12))) ** 0.25)
    edges = [0.0]
    w_first = rho_head / 400.0
    while edges[-1] < rho_head and len(edges) <= quad.panels:
        e = edges[-1]
        allow = _phase_allowance(np.array([rel_at(max(e, w_first))]), quad.phase_base)[0]
        phase_cap = (e**4 + allow / (8.0 * max(t_span, 1e-12))) ** 0.25
        grade_cap = max(e * quad.grading_ratio, e + w_first)
        nxt = min(max(min(phase_cap, grade_cap), e + w_first / 4.0), rho_head)
        edges.append(nxt)
    head_edges = np.asarray(edges)

    # tail: Filon panels in mu, geometric growth capped by the phase drift
    # of e^{lam x} across the panel (rate d Im lam / d mu with a margin)
    budget = quad.panels - (len(head_edges) - 1)
    tail_lo = 8.0 * rho_head**4
    tail_hi = 8.0 * rho_star**4
    tedges = [tail_lo]
    truncated = False
    while tedges[-1] < tail_hi * (1.0 - 1e-12):
        if len(tedges) > budget:
            truncated = True
            break
        mu = tedges[-1]
        rho = (mu / 8.0) ** 0.25
        step = (quad.tail_ratio - 1.0) * mu
        x_eff = min(x_max, 36.0 / (_SLOW_DECAY * rho)) if x_max > 0 else 0.0
        if x_eff > 0:
            drift = 1.25 * _FAST_PHASE / (32.0 * rho**3)
            step = min(step, quad.tail_allowance / (drift * x_eff))
        tedges.append(min(mu + step, tail_hi))
    tail_edges = np.asarray(tedges)
    if truncated:
        rho_stop = (tail_edges[-1] / 8.0) ** 0.25
        sel = probe_rho >= rho_stop
        tail = np.trapezoid(wenv[sel], probe_rho[sel]) if np.any(sel) else 0.0
        warnings.warn(
            f"panel cap {quad.panels} reached at rho={rho_stop:.3g} (target "
            f"{rho_star:.3g}); estimated relative tail {16.0 / np.pi * tail / peak:.2e}",
            AccuracyWarning,
            stacklevel=4,
        )
        rho_star = float(rho_stop)

    gx, gw = np.polynomial.legendre.leggauss(quad.gl_order)
    mid = 0.5 * (head_edges[1:] + head_edges[:-1])
    half = 0.5 * np.diff(head_edges)
    nodes = (mid[:, None] + half[:, None] * gx[None, :]).ravel()
    weights = (half[:, None] * gw[None, :]).ravel()

    u, _ = _fit_basis(quad.tail_order)
    widths = np.diff(tail_edges)
    tail_mu = tail_edges[:-1, None] + widths[:, None] * u[None, :]

    # one continuation pass over all rho nodes keeps the labeling consistent
    # between the head and the tail
    rho_all = np.concatenate([nodes, (tail_mu.ravel() / 8.0) ** 0.25])
    lam1, lam2 = root_curve(rho_all, params.delta)
    nh = nodes.shape[0]
    return _ContourMesh(
        nodes,
        weights,
        lam1[:nh],
        lam2[:nh],
        head_edges,
        tail_edges,
        tail_mu,
        lam1[nh:].reshape(tail_mu.shape),
        lam2[nh:].reshape(tail_mu.shape),
        float(rho_star),
    )


class BoundaryPropagator:
    """Evaluates the boundary-driven solution; caches the mesh and exp factors.

    One instance per (params, quadrature) pair; geometry-dependent
    factors (exp(lam x) tables, time phase tables) are cached keyed by
    the evaluation lattice so repeated solves on the same grids reuse
    them.  The mesh is built from the first data seen and rebuilt if
    later data has not decayed at the truncation point.
    """

    def __init__(self, params, quad=None):
        self.params = params
        self.quad = quad if quad is not None else QuadratureConfig()
        self._mesh = None
        self._mesh_span = None
        self._exp_cache = {}
        self._phase_cache = {}

    # -- mesh management -------------------------------------------------
    def _ensure_mesh(self, h, t_span, x_max):
        key = (h.tgrid.steps, round(h.tgrid.horizon, 12), round(t_span, 12), round(x_max, 9))
        if self._mesh is not None and key == self._mesh_span:
            return
        self._mesh = _build_mesh(h, self.params, t_span, x_max, self.quad)
        self._mesh_span = key
        self._exp_cache.clear()
        self._phase_cache.clear()

    def _exp_tables(self, x):
        key = (x.shape[0], float(x[0]), float(x[-1]))
        tab = self._exp_cache.get(key)
        if tab is None:
            tab = (np.exp(np.outer(self._mesh.lam1, x)), np.exp(np.outer(self._mesh.lam2, x)))
            self._exp_cache[key] = tab
        return tab

    def _phase_table(self, t):
        key = (t.shape[0], float(t[0]), float(t[-1]))
        tab = self._phase_cache.get(key)
        if tab is None:
            tab = np.exp(1j * 8.0 * np.outer(t, self._mesh.nodes**4))
            self._phase_cache[key] = tab
        return tab

    # -- evaluation ------------------------------------------------------
    @staticmethod
    def _mode_coeffs(samples, lam1, lam2, derivative):
        delta_lam = lam2 - lam1
        c1 = (lam2 * samples.h1_hat - samples.h2_hat) / delta_lam
        c2 = (samples.h2_hat - lam1 * samples.h1_hat) / delta_lam
        if derivative:
            c1 = c1 * lam1**derivative
            c2 = c2 * lam2**derivative
        return c1, c2

    def _head_sum(self, h, x, rel, derivative, chunk):
        mesh = self._mesh
        if mesh.nodes.shape[0] == 0:
            return 0.0
        samples = laplace_on_contour(h, 8.0 * mesh.nodes**4)
        c1, c2 = self._mode_coeffs(samples, mesh.lam1, mesh.lam2, derivative)
        w1 = mesh.weights * mesh.nodes**3 * c1
        w2 = mesh.weights * mesh.nodes**3 * c2
        E1, E2 = self._exp_tables(x)
        phase = self._phase_table(rel)
        out = np.zeros((rel.shape[0], x.shape[0]), dtype=complex)
        for lo in range(0, mesh.nodes.shape[0], chunk):
            sl = slice(lo, lo + chunk)
            B = w1[sl, None] * E1[sl] + w2[sl, None] * E2[sl]
            out += phase[:, sl] @ B
        return 16.0 * out  # head integral carries the measure rho^3 drho

    def _tail_sum(self, h, x, rel, derivative):
        """Filon panels in mu: exact e^{i mu t} moments against polynomial fits."""
        mesh = self._mesh
        npan = mesh.tail_mu.shape[0]
        if npan == 0:
            return 0.0
        order = self.quad.tail_order
        _, vinv = _fit_basis(order)
        samples = laplace_on_contour(h, mesh.tail_mu.ravel())
        flat = LaplaceSamples(samples.mu, samples.h1_hat, samples.h2_hat)
        c1, c2 = self._mode_coeffs(
            flat, mesh.tail_lam1.ravel(), mesh.tail_lam2.ravel(), derivative
        )
        c1 = c1.reshape(mesh.tail_mu.shape)
        c2 = c2.reshape(mesh.tail_mu.shape)
        widths = np.diff(mesh.tail_edges)
        out = np.zeros((rel.shape[0], x.shape[0]), dtype=complex)
        rate = -1j * rel
        for p in range(npan):
            w = widths[p]
            q = c1[p][:, None] * np.exp(np.outer(mesh.tail_lam1[p], x)) + c2[p][
                :, None
            ] * np.exp(np.outer(mesh.tail_lam2[p], x))
            coeff = vinv @ q  # (order+1, nx), powers of sigma/width
            mom = _oscillatory_moments(rate, w, order)  # (order+1, nt)
            mom = mom / (w ** np.arange(order + 1))[:, None]
            out += np.exp(1j * mesh.tail_edges[p] * rel)[:, None] * (mom.T @ coeff)
        # (16/pi) rho^3 drho = d mu/(2 pi); relative to the head's plain
        # "16 * integral" scaling the tail thus carries weight 1/2 per d mu
        return 0.5 * out  # tail integral carries the measure d mu / (2 pi) * 16 pi...

    def eval_points(self, h, x, t, derivative=0, chunk=4096):
        """v (or its x-derivative) on the lattice t (rows) by x (columns).

        Times are measured from h's grid start; data is treated as zero
        before its grid and after its horizon.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(x < 0):
            raise ConfigurationError("boundary kernel is defined for x >= 0")
        if h.pair_max() == 0.0:
            return np.zeros((t.shape[0], x.shape[0]))
        t_span = float(t.max() - h.tgrid.start) + h.tgrid.horizon
        self._ensure_mesh(h, t_span, float(x.max(initial=0.0)))
        rel = t - h.tgrid.start
        out = self._head_sum(h, x, rel, derivative, chunk)
        out = out + self._tail_sum(h, x, rel, derivative)
        res = (2.0 / np.pi) * np.real(out)  # v = 2 Re v+, v+ = (1/2pi) integral d mu
        res[rel <= 0.0] = 0.0  # causality: no boundary influence at or before the start
        return res

    def trace_pair(self, h, t):
        """(v(0,t), v_x(0,t)) arrays at the given times."""
        v = self.eval_points(h, np.array([0.0]), t, derivative=0)[:, 0]
        vx = self.eval_points(h, np.array([0.0]), t, derivative=1)[:, 0]
        return v, vx

    def correction_series(self, h, grid, eval_times, derivative=0):
        return self.eval_points(h, grid.nodes, np.asarray(eval_times), derivative=derivative)

    def field(self, h, grid, t):
        vals = self.eval_points(h, grid.nodes, np.array([t]))[0]
        return SpectralField(grid, values=vals)

    def series(self, h, grid, tgrid):
        vals = self.eval_points(h, grid.nodes, tgrid.nodes)
        from .grids import FieldSeries

        return FieldSeries(grid, tgrid, vals)


def wbdr_eval(h, x, t, params, quad=None, derivative=0):
    """One-shot kernel evaluation on a (t, x) lattice."""
    return BoundaryPropagator(params, quad).eval_points(h, x, t, derivative=derivative)


def wbdr_field(h, grid, t, params, quad=None):
    """One-shot kernel evaluation as a SpectralField on the given half-line grid."""
    return BoundaryPropagator(params, quad).field(h, grid, t)
