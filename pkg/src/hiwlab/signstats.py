"""Sign-count statistics over residue classes and the counting diagnostics.

T+ counts indices with a(n) above the slowly-shrinking threshold n^(-alpha)
(T- symmetrically below -n^(-alpha)), per residue class, optionally
restricted to a smooth window's support.  The survey operations classify
classes by their smoothed first/second/fourth moment sums and check the
elementary counting bounds on real data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .modarith import is_prime, nearest_prime
from .progsums import bucket_by_class, estimate_cf, smallest_nonresidue
from .qseries import QSeries
from .windows import Window

__all__ = [
    "SignCountReport",
    "SurveyVerdict",
    "class_counts",
    "class_survey",
    "corollary_count",
    "count_t",
    "eigen_survey",
    "elmt2_bound",
    "markov_class_count",
    "sign_balance",
]


def _threshold_mask(f: QSeries, x: float, alpha: float, sign: int,
                    w: Window | None) -> np.ndarray:
    """Boolean mask over n = 0..ceil(x) of indices passing the sign test."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n_hi = min(f.truncation, int(math.ceil(x)))
    ns = np.arange(n_hi + 1, dtype=np.float64)
    ns[0] = 1.0
    thr = ns ** (-alpha)
    coeffs = f.float_coeffs[: n_hi + 1]
    if sign > 0:
        mask = coeffs > thr
    else:
        mask = coeffs < -thr
    mask[0] = False
    if w is not None:
        mask &= w(np.arange(n_hi + 1, dtype=np.float64) / x) > 0.0
    else:
        mask &= np.arange(n_hi + 1) <= int(x)
    return mask


def count_t(f: QSeries, x: float, alpha: float, a: int, q: int, sign: int = 1,
            w: Window | None = None) -> int:
    """|{n : n = a (q), a(n) > n^-alpha}| (or < -n^-alpha for sign < 0).

    With a window, the count runs over the support of w(n/x); without one,
    over 1 <= n <= x.
    """
    if f.truncation < x - 1:
        raise ValueError("truncation below x")
    mask = _threshold_mask(f, x, alpha, sign, w)
    if q == 1:
        return int(np.count_nonzero(mask))
    idx = np.flatnonzero(mask)
    return int(np.count_nonzero(idx % q == a % q))


def class_counts(f: QSeries, x: float, alpha: float, q: int, sign: int = 1,
                 w: Window | None = None) -> np.ndarray:
    """All per-class counts at once (array of length q)."""
    mask = _threshold_mask(f, x, alpha, sign, w)
    idx = np.flatnonzero(mask)
    return np.bincount(idx % q, minlength=q)


@dataclass
class SignCountReport:
    x: float
    q: int
    alpha: float
    per_class_plus: np.ndarray
    per_class_minus: np.ndarray
    smooth: bool

    def to_dict(self) -> dict:
        return {"x": self.x, "q": self.q, "alpha": self.alpha,
                "per_class_plus": [int(v) for v in self.per_class_plus],
                "per_class_minus": [int(v) for v in self.per_class_minus],
                "smooth": self.smooth}


def sign_count_report(f: QSeries, x: float, alpha: float, q: int,
                      w: Window | None = None) -> SignCountReport:
    return SignCountReport(
        x=float(x), q=q, alpha=alpha,
        per_class_plus=class_counts(f, x, alpha, q, +1, w),
        per_class_minus=class_counts(f, x, alpha, q, -1, w),
        smooth=w is not None)


def sign_balance(b) -> tuple[float, float, float, float]:
    """(sum of positives, -sum of negatives, sum |b|, sum b), all compensated.

    The identities plus+minus = total_abs and plus-minus = total hold to
    correct rounding because each piece is an fsum.
    """
    b = np.asarray(b, dtype=np.float64)
    pos = b[b > 0]
    neg = b[b < 0]
    s_plus = math.fsum(pos.tolist())
    s_minus = -math.fsum(neg.tolist())
    total_abs = math.fsum(np.abs(b).tolist())
    total = math.fsum(b.tolist())
    return s_plus, s_minus, total_abs, total


def elmt2_bound(big_m: float, big_v: float, c_sum: float) -> float:
    """(M - sum c)^2 / V, the Cauchy-Schwarz count floor.

    Requires sum c <= M and V > 0, mirroring the hypotheses under which the
    bound applies.
    """
    if big_v <= 0:
        raise ValueError("V must be positive")
    if c_sum > big_m:
        raise ValueError("bound inapplicable: sum of thresholds exceeds M")
    return (big_m - c_sum) ** 2 / big_v


@dataclass
class SurveyVerdict:
    fraction_classes_hit: float
    threshold_r: float
    alpha: float
    p_exponent_window: tuple[float, float]
    passes: bool
    in_range: bool
    classes_hit: int
    classes_meeting_proof_conditions: int
    p: int
    x: float

    def to_dict(self) -> dict:
        return {"fraction_classes_hit": self.fraction_classes_hit,
                "threshold_r": self.threshold_r, "alpha": self.alpha,
                "p_exponent_window": list(self.p_exponent_window),
                "pass": self.passes, "in_range": self.in_range,
                "classes_hit": self.classes_hit,
                "classes_meeting_proof_conditions": self.classes_meeting_proof_conditions,
                "p": self.p, "x": self.x}


def _class_moment_sums(f: QSeries, w: Window, x: float, p: int):
    """Per-class sums of a w, a^2 w^2, |a| w, a^4 w^4 in one pass family."""
    n_hi = min(f.truncation, int(math.ceil(x)))
    ns = np.arange(n_hi + 1, dtype=np.float64)
    wv = w(ns / x)
    aw = f.float_coeffs[: n_hi + 1] * wv
    aw[0] = 0.0
    s1 = bucket_by_class(aw, p)
    s2 = bucket_by_class(aw * aw, p)
    s1abs = bucket_by_class(np.abs(aw), p)
    s4 = bucket_by_class(aw ** 4, p)
    return s1, s2, s1abs, s4


def class_survey(f: QSeries, w: Window, x: float, p: int, alpha: float,
                 m1: float | None = None, m2: float | None = None,
                 r: float = 0.01, cf_hint: float | None = None) -> SurveyVerdict:
    """Count classes with at least one above-threshold coefficient.

    Also counts classes meeting the two smoothed-sum conditions
    (first moment >= m1 sqrt(x/p) and second moment <= m2 x/p) that drive
    the positive-proportion argument; the verdict passes when the hit
    fraction reaches the configured r < 1/48 inside the admissible window
    x^(1-2 alpha) << p << x^(4/7).
    """
    if not (3.0 / 14.0 < alpha <= 0.25):
        raise ValueError(f"alpha = {alpha} outside the admissible interval (3/14, 1/4]")
    if r >= 1.0 / 48.0:
        raise ValueError("r must stay below 1/48")
    if not is_prime(p):
        raise ValueError("p must be prime")
    if m1 is None or m2 is None:
        cf = cf_hint if cf_hint is not None else estimate_cf(f, w, [x]).estimates[-1]
        base = cf * w.l2sq
        if m1 is None:
            m1 = 0.02 * math.sqrt(base)
        if m2 is None:
            m2 = 120.0 * base
    s1, s2, _, _ = _class_moment_sums(f, w, x, p)
    counts = class_counts(f, x, alpha, p, +1, w)
    hit = int(np.count_nonzero(counts[1:] >= 1))
    cond = int(np.count_nonzero(
        (s1[1:] >= m1 * math.sqrt(x / p)) & (s2[1:] <= m2 * x / p)))
    lo_exp = 1.0 - 2.0 * alpha
    hi_exp = 4.0 / 7.0
    in_range = x ** lo_exp <= p <= x ** hi_exp
    fraction = hit / p
    return SurveyVerdict(fraction_classes_hit=fraction, threshold_r=r, alpha=alpha,
                         p_exponent_window=(lo_exp, hi_exp),
                         passes=bool(in_range and fraction >= r), in_range=in_range,
                         classes_hit=hit, classes_meeting_proof_conditions=cond,
                         p=p, x=float(x))


@dataclass
class EigenSurveyReport:
    p: int
    x: float
    alpha: float
    delta: float
    m: float
    in_a: np.ndarray
    in_b: np.ndarray
    t_plus: np.ndarray
    t_minus: np.ndarray
    min_t_target: float
    holder_floor: float
    holder_violations: int
    in_range: bool

    @property
    def a_minus_b(self) -> np.ndarray:
        return self.in_a & ~self.in_b

    def to_dict(self) -> dict:
        return {"p": self.p, "x": self.x, "alpha": self.alpha, "delta": self.delta,
                "m": self.m, "count_A": int(np.count_nonzero(self.in_a)),
                "count_B": int(np.count_nonzero(self.in_b)),
                "count_A_minus_B": int(np.count_nonzero(self.a_minus_b)),
                "min_t_target": self.min_t_target,
                "holder_floor": self.holder_floor,
                "holder_violations": self.holder_violations,
                "in_range": self.in_range}


def eigen_survey(f: QSeries, w: Window, x: float, p: int, alpha: float,
                 m: float, delta: float) -> EigenSurveyReport:
    """Classify classes by the smoothed moment conditions and count signs.

    A-classes have second moment above m x/p and fourth moment at most
    x^(1+delta)/sqrt(p); B-classes have oversized first or second moments.
    On A \\ B both sign counts are compared against x^(1-2 delta)/p^(7/4),
    and the first-moment floor m^(3/2) x^(1-delta/2)/p^(5/4) is checked on
    every A-class (it follows from membership alone).
    """
    if not (0.125 < alpha <= 1.0 / 7.0):
        raise ValueError(f"alpha = {alpha} outside (1/8, 1/7]")
    if delta <= 0 or m <= 0:
        raise ValueError("m and delta must be positive")
    s1, s2, s1abs, s4 = _class_moment_sums(f, w, x, p)
    in_a = (s2 > m * x / p) & (s4 <= x ** (1 + delta) / math.sqrt(p))
    in_b = (np.abs(s1) > x ** (1 - delta) / p ** 1.25) | (s2 > x ** (1 + delta) / p ** 0.75)
    in_a[0] = False
    t_plus = class_counts(f, x, alpha, p, +1, w)
    t_minus = class_counts(f, x, alpha, p, -1, w)
    floor = m ** 1.5 * x ** (1 - delta / 2) / p ** 1.25
    violations = int(np.count_nonzero(in_a & (s1abs < floor * (1 - 1e-12))))
    in_range = x ** 0.5 <= p <= x ** (4 * alpha)
    return EigenSurveyReport(p=p, x=float(x), alpha=alpha, delta=delta, m=m,
                             in_a=in_a, in_b=in_b, t_plus=t_plus, t_minus=t_minus,
                             min_t_target=x ** (1 - 2 * delta) / p ** 1.75,
                             holder_floor=floor, holder_violations=violations,
                             in_range=in_range)


def markov_class_count(f: QSeries, w: Window, x: float, p: int, m: float,
                       cf_hint: float | None = None):
    """|{a : sum_{n=a(p)} a(n)^2 w^2 > m x / p}| with its bound ratio.

    The companion bound is (cf ||w||^2 / m) p; the ratio observed/bound is
    reported (Markov's inequality makes it at most ~1 up to the o(1))."""
    if m <= 0:
        raise ValueError("m must be positive")
    _, s2, _, _ = _class_moment_sums(f, w, x, p)
    count = int(np.count_nonzero(s2 > m * x / p))
    cf = cf_hint if cf_hint is not None else estimate_cf(f, w, [x]).estimates[-1]
    bound = cf * w.l2sq / m * p
    return count, count / bound if bound > 0 else float("inf")


def corollary_count(f: QSeries, x: float, epsilon: float, r: float = 0.01,
                    w: Window | None = None, cf_hint: float | None = None):
    """Aggregate count of a(n) > n^-(3/14 + eps) versus r x^(4/7 - 2 eps).

    A prime is chosen inside [x^(4/7-2eps), x^(4/7-eps)] (nearest to the
    geometric midpoint), the class survey runs at alpha = 3/14 + eps, and
    the unrestricted count is returned with its target.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    lo = x ** (4.0 / 7.0 - 2 * epsilon)
    hi = x ** (4.0 / 7.0 - epsilon)
    p = nearest_prime(math.sqrt(lo * hi))
    if not lo <= p <= hi:
        raise ArithmeticError(f"no prime found near the interval [{lo:.1f}, {hi:.1f}]")
    alpha = 3.0 / 14.0 + epsilon
    win = w if w is not None else None
    survey = class_survey(f, win if win is not None else _default_window(), x, p,
                          alpha, r=r, cf_hint=cf_hint)
    count = count_t(f, x, alpha, 0, 1, +1, w=None)
    target = r * lo
    return {"count": count, "target": target, "p": p, "alpha": alpha,
            "survey": survey.to_dict(), "meets_target": count >= target}


def _default_window() -> Window:
    from .windows import standard_bump

    return standard_bump()
