"""Stable roots of the characteristic quartic lam^4 + delta*lam^3 + tau = 0.

For boundary-kernel work tau runs along the contour i*8*rho^4 and
exactly two roots have negative real part; they are the spatial decay
rates of the kernel.  Roots come from the eigenvalues of the companion
matrix, polished by two Newton steps.  Labeling is by continuation from
the delta = 0 closed form (lam^4 = -tau picked on the two stable
branches), not by sorting, so the pair stays continuous along a contour.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, RefinementNeededError, RootSelectionError

__all__ = ["RootPair", "reference_pair", "char_roots", "root_curve", "stable_pairs"]


@dataclass(frozen=True)
class RootPair:
    tau: complex
    delta: float
    lam1: complex
    lam2: complex
    residual1: float
    residual2: float

    @property
    def lams(self):
        return np.array([self.lam1, self.lam2])


def reference_pair(tau):
    """Stable pair for delta = 0: the two Re < 0 fourth roots of -tau.

    lam1 is the branch with positive imaginary part; on the contour
    tau = i*8*rho^4 it equals rho*(-sqrt(sqrt(2)+1) + i*sqrt(sqrt(2)-1)).
    """
    tau = np.asarray(tau, dtype=complex)
    ang = np.angle(-tau)
    ang = np.where(ang < 0, ang + 2.0 * np.pi, ang)  # keep arg(-tau) in [pi/2, 3pi/2]
    r = np.abs(tau) ** 0.25
    lam1 = r * np.exp(1j * (ang / 4.0 + np.pi / 2.0))
    lam2 = r * np.exp(1j * (ang / 4.0 + np.pi))
    return lam1, lam2


def _quartic_roots_batch(taus, delta):
    taus = np.asarray(taus, dtype=complex)
    n = taus.shape[0]
    comp = np.zeros((n, 4, 4), dtype=complex)
    comp[:, 0, 0] = -delta
    comp[:, 0, 3] = -taus
    comp[:, 1, 0] = 1.0
    comp[:, 2, 1] = 1.0
    comp[:, 3, 2] = 1.0
    lam = np.linalg.eigvals(comp)
    for _ in range(2):  # Newton polish
        p = lam**4 + delta * lam**3 + taus[:, None]
        dp = 4.0 * lam**3 + 3.0 * delta * lam**2
        safe = np.abs(dp) > 1e-30
        lam = np.where(safe, lam - p / np.where(safe, dp, 1.0), lam)
    return lam


def _residuals(lam, tau, delta):
    return np.abs(lam**4 + delta * lam**3 + tau) / (1.0 + np.abs(tau))


def stable_pairs(taus, delta):
    """All stable pairs for an array of tau values, unlabeled (shape (n, 2))."""
    taus = np.asarray(taus, dtype=complex)
    if np.any(taus == 0):
        raise ConfigurationError("tau = 0 is degenerate (triple root at the origin)")
    if np.any(np.real(taus) < -1e-12):
        raise ConfigurationError("tau must have nonnegative real part")
    lam = _quartic_roots_batch(taus, delta)
    neg = np.real(lam) < 0
    counts = neg.sum(axis=1)
    if np.any(counts != 2):
        bad = int(np.argmax(counts != 2))
        raise RootSelectionError(
            f"expected exactly 2 stable roots, found {counts[bad]} at tau={taus[bad]}",
            roots=lam[bad],
        )
    order = np.argsort(~neg, axis=1, kind="stable")  # stable roots first
    pairs = np.take_along_axis(lam, order[:, :2], axis=1)
    return pairs


def _label_against(pairs, ref1, ref2):
    """Choose per-row orientation of (a,b) minimizing distance to (ref1, ref2)."""
    a, b = pairs[:, 0], pairs[:, 1]
    keep = np.abs(a - ref1) + np.abs(b - ref2)
    swap = np.abs(b - ref1) + np.abs(a - ref2)
    do_swap = swap < keep
    lam1 = np.where(do_swap, b, a)
    lam2 = np.where(do_swap, a, b)
    return lam1, lam2


def char_roots(tau, delta):
    """Stable labeled pair at a single tau (Re tau >= 0, tau != 0)."""
    pairs = stable_pairs(np.array([tau]), delta)
    r1, r2 = reference_pair(np.array([tau]))
    lam1, lam2 = _label_against(pairs, r1, r2)
    res = _residuals(np.array([lam1[0], lam2[0]]), tau, delta)
    return RootPair(complex(tau), float(delta), complex(lam1[0]), complex(lam2[0]),
                    float(res[0]), float(res[1]))


def root_curve(rho_nodes, delta, check_jumps=True):
    """Labeled stable pairs along tau = i*8*rho^4 for increasing rho nodes.

    Returns (lam1, lam2) arrays.  The first node is labeled against the
    delta = 0 closed form and labels then continue by nearest-neighbor
    matching; a jump larger than the local pair spacing raises
    RefinementNeededError.
    """
    rho = np.asarray(rho_nodes, dtype=float)
    if np.any(rho <= 0):
        raise ConfigurationError("rho nodes must be positive")
    taus = 1j * 8.0 * rho**4
    pairs = stable_pairs(taus, delta)
    r1, r2 = reference_pair(taus)
    lam1 = np.empty(rho.shape[0], dtype=complex)
    lam2 = np.empty(rho.shape[0], dtype=complex)
    a, b = _label_against(pairs[:1], r1[:1], r2[:1])
    lam1[0], lam2[0] = a[0], b[0]
    for k in range(1, rho.shape[0]):
        a, b = _label_against(pairs[k : k + 1], lam1[k - 1 : k], lam2[k - 1 : k])
        lam1[k], lam2[k] = a[0], b[0]
    if check_jumps and rho.shape[0] > 1:
        jump = np.maximum(np.abs(np.diff(lam1)), np.abs(np.diff(lam2)))
        gap = np.abs(lam1 - lam2)
        spacing = np.maximum(gap[:-1], gap[1:])  # pair spacing at either end of the hop
        bad = jump > np.maximum(spacing, 1e-8)
        if np.any(bad):
            k = int(np.argmax(bad))
            raise RefinementNeededError(
                f"root curve jumped by {jump[k]:.3e} (> spacing {spacing[k]:.3e}) "
                f"between rho={rho[k]:.6g} and rho={rho[k + 1]:.6g}; refine the rho mesh"
            )
    return lam1, lam2
