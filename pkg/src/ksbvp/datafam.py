"""Reusable initial/boundary data presets and seeded random ensembles.

Initial profiles decay fast enough for the far-field truncation; most
boundary presets vanish at t = 0 (so zero initial data stays corner
compatible) and roll off smoothly before the horizon (so transforms do
not see an end jump).
"""

from __future__ import annotations

import numpy as np

from .boundary import BoundaryData
from .errors import ConfigurationError
from .grids import SpectralField

__all__ = [
    "gaussian",
    "exp_decay",
    "smooth_bump",
    "raised_cosine",
    "poly_ramp",
    "random_profile",
    "random_boundary",
    "PROFILES",
    "BOUNDARY_PRESETS",
    "make_profile",
    "make_boundary",
]


def gaussian(grid, amp=1.0, center=None, width=1.0):
    c = 0.35 * grid.length if center is None else center
    vals = amp * np.exp(-(((grid.nodes - c) / width) ** 2))
    return SpectralField(grid, values=vals)


def exp_decay(grid, amp=1.0, rate=1.0):
    return SpectralField(grid, values=amp * np.exp(-rate * grid.nodes))


def smooth_bump(grid, amp=1.0, center=None, width=2.0):
    """Compactly supported C-infinity bump."""
    c = 0.35 * grid.length if center is None else center
    u = (grid.nodes - c) / width
    vals = np.zeros(grid.n)
    inside = np.abs(u) < 1.0
    vals[inside] = amp * np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return SpectralField(grid, values=vals)


def raised_cosine(tgrid, amp=1.0, t_on=None, t_off=None):
    """Boundary value ramping 0 -> amp -> 0 over [t_on, t_off], zero outside."""
    T = tgrid.horizon
    a = 0.1 * T if t_on is None else t_on
    b = 0.9 * T if t_off is None else t_off
    if not 0.0 <= a < b <= T:
        raise ConfigurationError("raised cosine window must sit inside [0, T]")
    rel = tgrid.nodes - tgrid.start
    h1 = np.zeros(tgrid.steps + 1)
    inside = (rel >= a) & (rel <= b)
    h1[inside] = amp * 0.5 * (1.0 - np.cos(2.0 * np.pi * (rel[inside] - a) / (b - a)))
    return BoundaryData(tgrid, h1, np.zeros_like(h1))


def poly_ramp(tgrid, amp=1.0, power=3):
    """h1 = amp * (t/T)^power * (1-t/T)^power, h2 = 0; vanishes at both ends."""
    if power < 1:
        raise ConfigurationError("ramp power must be at least 1")
    u = (tgrid.nodes - tgrid.start) / tgrid.horizon
    h1 = amp * u**power * (1.0 - u) ** power * 4.0**power
    return BoundaryData(tgrid, h1, np.zeros_like(h1))


def random_profile(grid, rng, amp=1.0, kind="gaussian"):
    """One random smooth decaying profile; amplitude scaled by `amp`."""
    a = amp * rng.uniform(0.5, 1.0) * rng.choice([-1.0, 1.0])
    c = rng.uniform(0.25, 0.55) * grid.length
    w = rng.uniform(0.8, 2.5)
    if kind == "gaussian":
        return gaussian(grid, a, c, w)
    if kind == "bump":
        return smooth_bump(grid, a, c, max(w, 1.5))
    raise ConfigurationError(f"unknown profile kind {kind!r}")


def random_boundary(tgrid, rng, amp=1.0, with_h2=False, modulate=True):
    """Random smooth boundary pair vanishing at t = 0 and near the horizon.

    `modulate` multiplies h1 by a random sub-cycle cosine; switching it
    off keeps the plain raised-cosine window family (narrower frequency
    content, useful when sampling an estimate constant).
    """
    T = tgrid.horizon
    a = rng.uniform(0.05, 0.2) * T
    b = rng.uniform(0.6, 0.9) * T
    h = raised_cosine(tgrid, amp * rng.uniform(0.5, 1.0), a, b)
    h1 = h.h1
    if modulate:
        h1 = h1 * np.cos(rng.uniform(0.0, 2.0) * np.pi * (tgrid.nodes - tgrid.start) / T)
    h2 = np.zeros_like(h1)
    if with_h2:
        g = raised_cosine(tgrid, amp * rng.uniform(0.2, 0.5), a, b)
        h2 = g.h1
    return BoundaryData(tgrid, h1, h2)


PROFILES = {"gaussian": gaussian, "exp_decay": exp_decay, "smooth_bump": smooth_bump}
BOUNDARY_PRESETS = {"raised_cosine": raised_cosine, "poly_ramp": poly_ramp, "zero": BoundaryData.zero}


def make_profile(grid, name, **kwargs):
    if name not in PROFILES:
        raise ConfigurationError(f"unknown profile preset {name!r}; have {sorted(PROFILES)}")
    return PROFILES[name](grid, **kwargs)


def make_boundary(tgrid, name, **kwargs):
    if name not in BOUNDARY_PRESETS:
        raise ConfigurationError(
            f"unknown boundary preset {name!r}; have {sorted(BOUNDARY_PRESETS)}"
        )
    return BOUNDARY_PRESETS[name](tgrid, **kwargs)
