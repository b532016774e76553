"""Independent finite-difference reference solver on a truncated interval.

Method of lines with second-order central stencils: the stiff linear
part (fourth, third, optionally second derivative) is advanced by
Crank-Nicolson through a pentadiagonal solve, the advective
nonlinearity u u_x = (u^2/2)_x explicitly by two-step Adams-Bashforth
in conservative form.  The left boundary carries u(0) = h1 as a
Dirichlet row and u_x(0) = h2 through a second-order ghost node folded
into the first interior row; the far end imposes u = u_x = 0 and is
only valid while the solution support stays away from it, which a mass
monitor checks.  Everything here is deliberately independent of the
spectral machinery so the two solvers can arbitrate each other.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import AccuracyWarning, ConfigurationError
from .grids import TimeGrid
from .sobolev import NormReport

__all__ = ["FDConfig", "FDSolution", "fd_solve", "fd_compare"]


@dataclass(frozen=True)
class FDConfig:
    L: float = 30.0
    nx: int = 600
    dt: float = 1e-3
    include_uxx: bool = True
    include_nonlinear: bool = True
    scheme: str = "cn-ab2"
    far_tol: float = 1e-6
    save_every: int = 0  # 0 = choose automatically, about 512 stored frames

    def __post_init__(self):
        if self.nx < 64:
            raise ConfigurationError("oracle grid needs nx >= 64")
        if self.L <= 0 or self.dt <= 0:
            raise ConfigurationError("oracle needs positive L and dt")
        if self.scheme != "cn-ab2":
            raise ConfigurationError(f"unknown scheme {self.scheme!r}")

    @property
    def dx(self):
        return self.L / self.nx


class FDSolution:
    """Saved frames of an oracle run: values[j] is the profile at tgrid.nodes[j]."""

    def __init__(self, x, tgrid, values):
        self.x = x
        self.tgrid = tgrid
        self.values = values

    def trace(self, xv):
        j = int(round(xv / (self.x[1] - self.x[0])))
        if not 0 <= j < len(self.x) or abs(self.x[j] - xv) > 1e-9:
            raise ConfigurationError(f"x = {xv} is not an oracle grid node")
        return self.values[:, j]


def _assemble(cfg, delta):
    """Folded linear operator and the ghost-load coefficient for row 1."""
    dx = cfg.dx
    n = cfg.nx + 1
    c4 = 1.0 / dx**4
    c3 = delta / (2.0 * dx**3)
    c2 = 1.0 / dx**2 if cfg.include_uxx else 0.0
    o = {
        -2: c4 - c3,
        -1: -4.0 * c4 + 2.0 * c3 + c2,
        0: 6.0 * c4 - 2.0 * c2,
        1: -4.0 * c4 - 2.0 * c3 + c2,
        2: c4 + c3,
    }
    A = sparse.lil_matrix((n, n))
    for i in range(2, n - 2):
        for k, v in o.items():
            A[i, i + k] = v
    # row 1: ghost u_{-1} = u_1 - 2 dx h2 folds offset -2 onto the diagonal
    A[1, 0] = o[-1]
    A[1, 1] = o[0] + o[-2]
    A[1, 2] = o[1]
    A[1, 3] = o[2]
    # row nx-1: reflective ghost u_{nx+1} = u_{nx-1} from u_x(L) = 0
    A[n - 2, n - 4] = o[-2]
    A[n - 2, n - 3] = o[-1]
    A[n - 2, n - 2] = o[0] + o[2]
    A[n - 2, n - 1] = o[1]
    ghost_coeff = o[-2] * (-2.0 * dx)
    return A.tocsr(), ghost_coeff


def _to_banded(M, n):
    ab = np.zeros((5, n))
    for k in range(-2, 3):
        d = M.diagonal(k)
        if k >= 0:
            ab[2 - k, k:] = d
        else:
            ab[2 - k, : n + k] = d
    return ab


def _initial_profile(phi, x):
    if callable(phi):
        return np.asarray(phi(x), dtype=float)
    arr = np.asarray(getattr(phi, "values", phi))
    if arr.shape == x.shape:
        return np.real(arr).astype(float)
    nodes = phi.grid.nodes  # SpectralField on its own grid
    return np.interp(x, nodes, np.real(arr), right=0.0)


def fd_solve(phi, h, params, cfg, horizon=None):
    """March the truncated-interval problem and return saved frames.

    phi may be a callable, a plain array on the oracle nodes, or a
    half-line SpectralField (linearly interpolated).  Boundary samples
    are cubic-spline interpolated to the oracle's finer time step.
    """
    T = h.tgrid.horizon if horizon is None else horizon
    if T > h.tgrid.horizon + 1e-12:
        raise ConfigurationError("oracle horizon exceeds the boundary data record")
    steps0 = max(1, int(round(T / cfg.dt)))
    save = cfg.save_every if cfg.save_every > 0 else max(1, -(-steps0 // 512))
    steps = -(-steps0 // save) * save
    dt = T / steps
    n = cfg.nx + 1
    x = cfg.dx * np.arange(n)

    rel = h.tgrid.nodes - h.tgrid.start
    h1 = CubicSpline(rel, h.h1)
    h2 = CubicSpline(rel, h.h2)

    A, ghost_coeff = _assemble(cfg, params.delta)
    eye = sparse.identity(n, format="csr")
    lhs = (eye + (dt / 2.0) * A).tolil()
    lhs[0, :] = 0.0
    lhs[0, 0] = 1.0
    lhs[-1, :] = 0.0
    lhs[-1, -1] = 1.0
    ab = _to_banded(lhs.tocsr(), n)
    rhs_mat = (eye - (dt / 2.0) * A).tocsr()

    u = _initial_profile(phi, x)
    if abs(u[0] - h1(0.0)) > 1e-6 * (1.0 + abs(u[0])):
        warnings.warn(
            "initial profile and h1(0) disagree at the corner; expect a boundary layer",
            AccuracyWarning,
            stacklevel=2,
        )
    u[0] = h1(0.0)
    u[-1] = 0.0

    def nonlin(v):
        out = np.zeros_like(v)
        if cfg.include_nonlinear:
            out[1:-1] = (v[2:] ** 2 - v[:-2] ** 2) / (4.0 * cfg.dx)
        return out

    frames = np.empty((steps // save + 1, n))
    frames[0] = u
    n_prev = nonlin(u)
    tail = max(1, n // 10)
    far_warned = False
    for j in range(steps):
        t_new = (j + 1) * dt
        n_now = nonlin(u)
        nhat = n_now if j == 0 else 1.5 * n_now - 0.5 * n_prev
        g_avg = 0.5 * ghost_coeff * (h2(j * dt) + h2(t_new))
        b = rhs_mat @ u - dt * nhat
        b[1] -= dt * g_avg
        b[0] = h1(t_new)
        b[-1] = 0.0
        u = solve_banded((2, 2), ab, b)
        n_prev = n_now
        amax = np.max(np.abs(u))
        if not np.isfinite(amax) or dt * amax / cfg.dx > 1.0:
            raise ConfigurationError(
                f"explicit advection unstable at t={t_new:.4g}: "
                f"dt*|u|/dx = {dt * amax / cfg.dx:.3g}"
            )
        if not far_warned and np.max(np.abs(u[-tail:])) > cfg.far_tol * max(1.0, amax):
            warnings.warn(
                f"solution support reached the far boundary by t={t_new:.4g}; "
                "enlarge L",
                AccuracyWarning,
                stacklevel=2,
            )
            far_warned = True
        if (j + 1) % save == 0:
            frames[(j + 1) // save] = u
    return FDSolution(x, TimeGrid(T, steps // save), frames)


def _lattice_of(sol):
    x = sol.x if hasattr(sol, "x") else sol.grid.nodes
    return np.asarray(x, dtype=float), sol.tgrid, np.real(np.asarray(sol.values))


def fd_compare(candidate, reference, label="oracle-crosscheck"):
    """Space-time L^2 comparison on the coarser common lattice.

    Interpolates both runs (linear) onto the coarser space and time
    node sets restricted to the overlapping region, then reports the
    difference norm against the reference norm.
    """
    xa, ta, va = _lattice_of(candidate)
    xb, tb, vb = _lattice_of(reference)
    if abs(ta.horizon - tb.horizon) > 1e-9:
        raise ConfigurationError("runs cover different horizons")
    if abs(ta.start - tb.start) > 1e-9:
        raise ConfigurationError("runs start at different times")
    T = ta.horizon
    x_hi = min(xa[-1], xb[-1])
    xs = (xa if len(xa) <= len(xb) else xb)
    xs = xs[xs <= x_hi + 1e-12]
    ts = np.linspace(0.0, T, min(ta.steps, tb.steps) + 1)
    def resample(x, v):
        rows = np.array([np.interp(xs, x, row) for row in v])
        src = np.linspace(0.0, T, len(v))
        vi = np.empty((len(ts), len(xs)))
        for j in range(len(xs)):
            vi[:, j] = np.interp(ts, src, rows[:, j])
        return vi
    ca = resample(xa, va)
    cb = resample(xb, vb)
    dxs = xs[1] - xs[0] if len(xs) > 1 else 1.0
    dts = ts[1] - ts[0] if len(ts) > 1 else 1.0
    lhs = float(np.sqrt(np.sum((ca - cb) ** 2) * dxs * dts))
    rhs = float(np.sqrt(np.sum(cb**2) * dxs * dts))
    sup = float(np.max(np.abs(ca - cb)))
    return NormReport(label, lhs, max(rhs, 1e-300), {"sup": sup})
