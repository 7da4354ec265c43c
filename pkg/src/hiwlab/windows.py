"""Smooth compactly supported weight functions and their transforms.

The reference window is w0(t) = exp(1 - 1/(4t(1-t))) on (0,1): smooth,
[0,1]-valued, equal to 1 only at t = 1/2, flat-zero outside the open unit
interval.  All acceptance runs use w0; scaled copies supported in
(a, b) c (0, 1) are available for contrast experiments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Window",
    "adaptive_simpson",
    "gauss_legendre_reference",
    "l2_norm_sq",
    "mellin",
    "power_sum",
    "scaled_bump",
    "standard_bump",
]


def _bump(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t, dtype=np.float64)
    m = (t > 0.0) & (t < 1.0)
    tm = t[m]
    out[m] = np.exp(1.0 - 1.0 / (4.0 * tm * (1.0 - tm)))
    return out


@dataclass
class Window:
    """Weight function w with support (a, b) inside (0, 1), values in [0, 1]."""

    kind: str
    a: float
    b: float
    _l2sq: float | None = field(default=None, repr=False)

    def __post_init__(self):
        if not (0.0 <= self.a < self.b <= 1.0):
            raise ValueError(f"support ({self.a}, {self.b}) must sit inside (0, 1)")

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        scalar = t.ndim == 0
        t = np.atleast_1d(t)
        u = (t - self.a) / (self.b - self.a)
        out = _bump(u)
        return float(out[0]) if scalar else out

    @property
    def l2sq(self) -> float:
        if self._l2sq is None:
            self._l2sq = l2_norm_sq(self)
        return self._l2sq

    def log_values(self, t: np.ndarray) -> np.ndarray:
        """log w(t) where w > 0, -inf elsewhere (overflow-safe path)."""
        u = (np.asarray(t, dtype=np.float64) - self.a) / (self.b - self.a)
        out = np.full_like(u, -np.inf)
        m = (u > 0.0) & (u < 1.0)
        um = u[m]
        out[m] = 1.0 - 1.0 / (4.0 * um * (1.0 - um))
        return out


def standard_bump() -> Window:
    return Window("standard_bump", 0.0, 1.0)


def scaled_bump(a: float, b: float) -> Window:
    return Window(f"scaled_bump({a},{b})", a, b)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 48):
    """Adaptive Simpson quadrature with absolute tolerance.

    Works for complex-valued integrands; the recursion splits on the
    standard |S2 - S1| / 15 error estimate.
    """
    fa, fm, fb = f(a), f((a + b) / 2), f(b)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth):
    m = (a + b) / 2
    lm, rm = (a + m) / 2, (m + b) / 2
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if depth <= 0:
        raise ArithmeticError("adaptive Simpson failed to converge")
    if abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    return (_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2, depth - 1)
            + _simpson_rec(f, m, b, fm, frm, fb, right, tol / 2, depth - 1))


def l2_norm_sq(w: Window, tol: float = 1e-10) -> float:
    """integral of w(t)^2 over the support, pre-split at the endpoints."""
    return float(adaptive_simpson(lambda t: float(w(t)) ** 2, w.a, w.b, tol).real)


def gauss_legendre_reference(f, a: float, b: float, panels: int = 64, order: int = 12):
    """Composite Gauss-Legendre quadrature; the independent cross-check rule."""
    x, wt = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, hw = 0.5 * (lo + hi), 0.5 * (hi - lo)
        total += hw * sum(wi * f(mid + hw * xi) for xi, wi in zip(x, wt))
    return total


def mellin(w: Window, s: complex, tol: float = 1e-10) -> complex:
    """Mellin transform integral of w(t) t^(s-1) over the support.

    Entire in s for these windows; decays rapidly as |Im s| grows, which
    the contour integrations upstream rely on.
    """
    s = complex(s)

    def integrand(t):
        wt = float(w(t))
        if wt == 0.0 or t <= 0.0:
            return 0.0 + 0.0j
        return wt * complex(t) ** (s - 1)

    return adaptive_simpson(integrand, max(w.a, 1e-12), w.b, tol)


def power_sum(alpha: float, x: float, p: int, a: int, w: Window):
    """sum over n = a (mod p) of n^(-alpha) w(n/x), with its p-scaled ratio.

    Returns (value, ratio) where ratio = value / (x^(1-alpha)/p), the
    natural comparison scale for this lattice sum.
    """
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    if not 0 <= a < p:
        raise ValueError("class must satisfy 0 <= a < p")
    start = a if a >= 1 else p
    ns = np.arange(start, int(math.ceil(x)) + 1, p, dtype=np.float64)
    if len(ns) == 0:
        return 0.0, 0.0
    vals = ns ** (-alpha) * w(ns / x)
    value = float(math.fsum(vals.tolist()))
    scale = x ** (1.0 - alpha) / p
    return value, value / scale
