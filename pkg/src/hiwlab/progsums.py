"""Smoothed coefficient sums over residue classes and their moments.

The central statistic is E(x, p, a) = (x/p)^(-1/2) sum_{n = a (p)} a(n) w(n/x),
computed in one O(x) bucketing pass.  Second and fourth moments over
invertible classes, the residue/non-residue split of the fourth moment, and
the Rankin-Selberg-style normalization constant estimate live here.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .modarith import is_prime, legendre
from .qseries import QSeries
from .windows import Window

__all__ = [
    "CfEstimate",
    "ProgressionReport",
    "class_sum_residual",
    "estimate_cf",
    "holder_abs_first_moment",
    "moment_verdict",
    "progression_e",
    "smallest_nonresidue",
    "total_sum_decay",
]

_CHUNK = 1 << 18


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("HIW_THREADS", "1")))
    except ValueError:
        return 1


def bucket_by_class(values: np.ndarray, p: int) -> np.ndarray:
    """Per-residue-class sums of values[n] over n = 0..len-1, deterministic.

    The array is cut into fixed-size chunks regardless of worker count;
    chunk results are merged in index order with Kahan compensation, so
    the output is bit-identical for any HIW_THREADS setting.
    """
    n_total = len(values)
    chunks = [(lo, min(lo + _CHUNK, n_total)) for lo in range(0, n_total, _CHUNK)]

    def one(chunk):
        lo, hi = chunk
        idx = np.arange(lo, hi, dtype=np.int64) % p
        return np.bincount(idx, weights=values[lo:hi], minlength=p)

    workers = _thread_count()
    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, chunks))
    else:
        parts = [one(c) for c in chunks]

    total = np.zeros(p)
    comp = np.zeros(p)
    for part in parts:  # fixed order: compensated merge is reproducible
        y = part - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


@dataclass
class ProgressionReport:
    """E-values over all classes mod p plus derived moments."""

    x: float
    p: int
    e_values: np.ndarray
    m2: float
    m4_plus: float
    m4_minus: float
    abs_m1: float
    total_sum: float
    class0_sum: float
    mu_plus: int = 1
    mu_minus: int = 0

    @property
    def m4(self) -> float:
        """(1/p) sum over invertible classes of E^4."""
        return 0.5 * (self.m4_plus + self.m4_minus)

    def to_dict(self) -> dict:
        return {
            "x": self.x, "p": self.p, "m2": self.m2,
            "m4_plus": self.m4_plus, "m4_minus": self.m4_minus,
            "abs_m1": self.abs_m1, "total_sum": self.total_sum,
            "class0_sum": self.class0_sum,
            "mu_plus": self.mu_plus, "mu_minus": self.mu_minus,
            "e_values": [float(v) for v in self.e_values],
        }


def smallest_nonresidue(p: int) -> int:
    n = 2
    while legendre(n, p) != -1:
        n += 1
    return n


def progression_e(f: QSeries, w: Window, x: float, p: int,
                  mu_plus: int | None = None, mu_minus: int | None = None) -> ProgressionReport:
    """Bucket a(n) w(n/x) by n mod p and assemble the moment report.

    The fourth moment is split into M4+/M4- over the classes N mu+- a with
    a running through quadratic residues; mu+ defaults to 1 and mu- to the
    smallest positive non-residue.
    """
    if f.truncation < x - 1:
        raise ValueError(f"truncation {f.truncation} too small for x = {x}")
    if p % 2 == 0 or not is_prime(p):
        raise ValueError(f"p = {p} must be an odd prime")
    if f.level % p == 0:
        raise ValueError(f"p = {p} divides the level {f.level}")

    n_max = min(f.truncation, int(math.ceil(x)))
    coeffs = f.float_coeffs[: n_max + 1]
    ns = np.arange(n_max + 1, dtype=np.float64)
    values = coeffs * w(ns / x)
    values[0] = 0.0

    buckets = bucket_by_class(values, p)
    scale = math.sqrt(x / p)
    e_values = buckets / scale

    inv = e_values[1:]
    m2 = float(np.dot(inv, inv)) / p
    abs_m1 = float(np.sum(np.abs(inv))) / p

    if mu_plus is None:
        mu_plus = 1
    if mu_minus is None:
        mu_minus = smallest_nonresidue(p)
    if legendre(mu_plus, p) != 1 or legendre(mu_minus, p) != -1:
        raise ValueError("mu_plus must be a residue and mu_minus a non-residue mod p")

    n_level = f.level // 4 if f.level % 4 == 0 else f.level
    residues = np.array([a for a in range(1, p) if legendre(a, p) == 1], dtype=np.int64)
    idx_plus = (n_level * mu_plus * residues) % p
    idx_minus = (n_level * mu_minus * residues) % p
    m4_plus = float(np.sum(e_values[idx_plus] ** 4)) * 2.0 / p
    m4_minus = float(np.sum(e_values[idx_minus] ** 4)) * 2.0 / p

    total = float(math.fsum(values.tolist()))
    return ProgressionReport(x=float(x), p=p, e_values=e_values, m2=m2,
                             m4_plus=m4_plus, m4_minus=m4_minus, abs_m1=abs_m1,
                             total_sum=total, class0_sum=float(buckets[0]),
                             mu_plus=mu_plus, mu_minus=mu_minus)


@dataclass
class CfEstimate:
    """Ratios sum a(n)^2 w(n/x)^2 / (||w||^2 x) along a ladder of x values."""

    xs: list[float]
    estimates: list[float]
    extrapolated: float
    converged: bool

    def to_dict(self) -> dict:
        return {"xs": self.xs, "estimates": self.estimates,
                "extrapolated": self.extrapolated, "converged": self.converged}


def estimate_cf(f: QSeries, w: Window, xs) -> CfEstimate:
    """Estimate the normalization constant from the smoothed square sum.

    The ratio tends to a positive constant for cusp forms in the
    experiment's range; a ratio still growing by more than 20 percent
    between consecutive sample sizes is reported as non-convergence.
    """
    xs = sorted(float(x) for x in xs)
    if f.truncation < xs[-1] - 1:
        raise ValueError("truncation too small for the largest sample size")
    l2 = w.l2sq
    estimates = []
    for x in xs:
        n_max = min(f.truncation, int(math.ceil(x)))
        coeffs = f.float_coeffs[: n_max + 1]
        ns = np.arange(n_max + 1, dtype=np.float64)
        vals = (coeffs * w(ns / x)) ** 2
        estimates.append(float(np.sum(vals)) / (l2 * x))
    converged = True
    for prev, cur in zip(estimates[:-1], estimates[1:]):
        if cur > 1.2 * prev:
            converged = False
    if len(xs) >= 2:
        u1, u2 = 1.0 / math.log(xs[-2]), 1.0 / math.log(xs[-1])
        e1, e2 = estimates[-2], estimates[-1]
        extrapolated = e2 - u2 * (e1 - e2) / (u1 - u2)
    else:
        extrapolated = estimates[-1]
    return CfEstimate(xs=xs, estimates=estimates, extrapolated=extrapolated,
                      converged=converged)


def total_sum_decay(f: QSeries, w: Window, xs, dps: int = 40):
    """|sum_n a(n) w(n/x)| along xs, in extended precision, plus log-log slope.

    Smooth sums of cuspidal coefficients decay faster than any power of x;
    at these magnitudes float64 product noise would dominate, so the sum
    is taken with mpmath at `dps` digits.
    """
    import mpmath as mp

    xs = sorted(float(x) for x in xs)
    if f.truncation < xs[-1] - 1:
        raise ValueError("truncation too small")
    out = []
    with mp.workdps(dps):
        kappa = mp.mpf(f.weight_two - 2) / 4
        for x in xs:
            xm = mp.mpf(x)
            n_max = min(f.truncation, int(math.ceil(x)))
            acc = mp.mpf(0)
            for n in range(1, n_max + 1):
                cn = f.coeffs[n]
                if not cn:
                    continue
                t = n / xm
                if t <= w.a or t >= w.b:
                    continue
                u = (t - w.a) / (w.b - w.a)
                wt = mp.e ** (1 - 1 / (4 * u * (1 - u)))
                acc += cn * wt / mp.mpf(n) ** kappa
            out.append((x, float(abs(acc))))
    logs = [(math.log(x), math.log(max(v, 1e-300))) for x, v in out]
    n = len(logs)
    mx = sum(l[0] for l in logs) / n
    my = sum(l[1] for l in logs) / n
    denom = sum((l[0] - mx) ** 2 for l in logs)
    slope = sum((l[0] - mx) * (l[1] - my) for l in logs) / denom if denom else 0.0
    return out, slope


def class_sum_residual(f: QSeries, w: Window, x: float, p: int, a: int):
    """Raw class sum sqrt(x/p) E(x,p,a) and its ratio against p."""
    if not 0 <= a < p:
        raise ValueError("class out of range")
    start = a if a >= 1 else p
    n_max = min(f.truncation, int(math.ceil(x)))
    ns = np.arange(start, n_max + 1, p, dtype=np.int64)
    if len(ns) == 0:
        return 0.0, 0.0
    vals = f.float_coeffs[ns] * w(ns.astype(np.float64) / x)
    value = float(math.fsum(vals.tolist()))
    return value, abs(value) / p


@dataclass
class MomentVerdict:
    m2_ratio: float
    m4_plus_ratio: float
    m4_minus_ratio: float
    m2_pass: bool
    m4_pass: bool
    in_range: bool
    window: tuple[float, float]

    def to_dict(self) -> dict:
        return {"m2_ratio": self.m2_ratio, "m4_plus_ratio": self.m4_plus_ratio,
                "m4_minus_ratio": self.m4_minus_ratio, "m2_pass": self.m2_pass,
                "m4_pass": self.m4_pass, "in_range": self.in_range,
                "window": list(self.window)}


def moment_verdict(report: ProgressionReport, cf: float, w: Window,
                   m2_tol: float = 0.4, m4_slack: float = 0.3) -> MomentVerdict:
    """Compare measured moments against cf ||w||^2 and 12 (cf ||w||^2)^2.

    The admissible prime window sqrt(x) << p << x^(4/7) is checked and
    reported; out-of-range runs still carry their ratios.
    """
    if cf <= 0:
        raise ValueError("cf must be positive")
    base = cf * w.l2sq
    m2_ratio = report.m2 / base
    m4p = report.m4_plus / (12.0 * base * base)
    m4m = report.m4_minus / (12.0 * base * base)
    lo, hi = report.x ** 0.5, report.x ** (4.0 / 7.0)
    in_range = lo <= report.p <= hi
    return MomentVerdict(
        m2_ratio=m2_ratio, m4_plus_ratio=m4p, m4_minus_ratio=m4m,
        m2_pass=in_range and abs(m2_ratio - 1.0) <= m2_tol,
        m4_pass=in_range and max(m4p, m4m) <= 1.0 + m4_slack,
        in_range=in_range, window=(lo, hi))


def holder_abs_first_moment(report: ProgressionReport):
    """(1/p) sum |E| with its unconditional Holder floor m2^(3/2) m4^(-1/2)."""
    m4 = report.m4
    if m4 <= 0:
        raise ArithmeticError("fourth moment vanishes; Holder bound undefined")
    lower = report.m2 ** 1.5 / math.sqrt(m4)
    if report.abs_m1 < lower - 1e-12 * max(1.0, lower):
        raise ArithmeticError(
            f"Holder inequality violated: {report.abs_m1} < {lower}")
    return report.abs_m1, lower
