"""Hecke action at square levels, eigenvalue extraction, and the lift relation.

All identity checks in this module run on the exact integer backend: the
square-index Hecke action, the eigenvalue ratios, and the coefficient
relation c(t n^2) = c(t) * sum_{d|n} mu(d) psi(d) chi(d) d^(ell-1) lambda(n/d)
are verified with no floating point involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .modarith import is_prime, legendre
from .qseries import QSeries

__all__ = [
    "HeckeResult",
    "ShimuraCoeffs",
    "UnsupportedPrimeError",
    "apply_tp2",
    "coeff_bound_report",
    "deligne_ratio_report",
    "extended_symbol",
    "extract_eigenvalue",
    "fourth_moment_exponent",
    "kronecker",
    "shimura_lambda_n",
    "shimura_relation_check",
    "squarefree_kernel",
    "u_action",
]


class UnsupportedPrimeError(ValueError):
    """Hecke action requested at a prime dividing the level."""


def squarefree_kernel(n: int) -> tuple[int, int]:
    """n = t * m^2 with t squarefree; returns (t, m).  n must be positive."""
    if n < 1:
        raise ValueError("positive integers only")
    t, m = 1, 1
    d = 2
    while d * d <= n:
        if n % d == 0:
            e = 0
            while n % d == 0:
                n //= d
                e += 1
            if e % 2:
                t *= d
            m *= d ** (e // 2)
        d += 1 if d == 2 else 2
    return t * n, m


def kronecker(d: int, n: int) -> int:
    """Kronecker symbol (d/n) for n >= 0."""
    if n == 0:
        return 1 if d in (1, -1) else 0
    if n < 0:
        raise ValueError("lower argument must be non-negative here")
    result = 1
    if n % 2 == 0:
        if d % 2 == 0:
            return 0
        two = 1 if d % 8 in (1, 7) else -1
        while n % 2 == 0:
            n //= 2
            result *= two
    # now n odd: Jacobi symbol (d/n)
    d %= n
    while d:
        while d % 2 == 0:
            d //= 2
            if n % 8 in (3, 5):
                result = -result
        d, n = n, d
        if d % 4 == 3 and n % 4 == 3:
            result = -result
        d %= n
    return result if n == 1 else 0


def extended_symbol(n_signed: int, d: int) -> int:
    """The quadratic character (n/.) at d, for n = 0, 1, 2, 3 mod 4 alike.

    n is written as D m^2 (or 4n = D m^2 when n = 2, 3 mod 4) with D a
    fundamental discriminant; the value is the induced character mod |n|
    (resp. 4|n|): the Kronecker symbol (D/d) when gcd(d, modulus) = 1 and
    0 otherwise.  By convention (0/1) = 1.
    """
    if d < 1:
        raise ValueError("evaluate at positive integers")
    if n_signed == 0:
        return 1 if d == 1 else 0
    n = n_signed
    if n % 4 in (0, 1):
        modulus = abs(n)
        work = n
    else:
        modulus = 4 * abs(n)
        work = 4 * n
    if math.gcd(d, modulus) != 1:
        return 0
    s, _ = squarefree_kernel(abs(work))
    s *= 1 if work > 0 else -1
    disc = s if s % 4 == 1 else 4 * s
    return kronecker(disc, d)


def _chi_value(f: QSeries, n: int) -> int:
    """The form's character at n: trivial tag means principal mod level."""
    if f.character_tag == "trivial":
        return 0 if math.gcd(n, f.level) != 1 else 1
    if f.character_tag == "four_n_symbol":
        return extended_symbol(f.level, n)
    raise ValueError("user-character forms must supply chi explicitly")


def apply_tp2(f: QSeries, p: int) -> QSeries:
    """Square-index Hecke action: output coefficient at n is

        c(p^2 n) + chi(p) ((-1)^ell n / p) p^(ell-1) c(n)
                 + chi(p^2) p^(2 ell - 1) c(n / p^2),

    exact integers, truncation floor(X / p^2).  Primes dividing the level
    are out of the supported convention and rejected.
    """
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if f.level % p == 0:
        raise UnsupportedPrimeError(
            f"p = {p} divides the level {f.level}; only good primes are supported")
    ell = f.ell
    out_trunc = f.truncation // (p * p)
    if out_trunc < 1:
        raise ValueError(f"truncation {f.truncation} too small for p^2 = {p * p}")
    chi_p = _chi_value(f, p)
    chi_p2 = _chi_value(f, p * p)
    sign = -1 if ell % 2 else 1
    coeffs = [0] * (out_trunc + 1)
    for n in range(1, out_trunc + 1):
        val = f.coeffs[p * p * n]
        if chi_p:
            sym = 0 if n % p == 0 else legendre(sign * n, p)
            if sym:
                val += chi_p * sym * p ** (ell - 1) * f.coeffs[n]
        if chi_p2 and n % (p * p) == 0:
            val += chi_p2 * p ** (2 * ell - 1) * f.coeffs[n // (p * p)]
        coeffs[n] = val
    return QSeries(coeffs, f.weight_two, f.level, f.character_tag, out_trunc)


def u_action(f: QSeries, m: int) -> QSeries:
    """Index dilation operator: coefficient at n becomes c(m n)."""
    if m < 1:
        raise ValueError("m must be positive")
    out_trunc = f.truncation // m
    coeffs = [f.coeffs[m * n] for n in range(out_trunc + 1)]
    return QSeries(coeffs, f.weight_two, f.level, f.character_tag, out_trunc)


@dataclass
class HeckeResult:
    p: int
    lam: Fraction | None
    residual: float
    is_eigen: bool
    probes: int

    def to_dict(self) -> dict:
        return {"p": self.p, "lambda": None if self.lam is None else str(self.lam),
                "residual": self.residual, "is_eigen": self.is_eigen,
                "probes": self.probes}


def extract_eigenvalue(f: QSeries, p: int, n_probe: int = 60) -> HeckeResult:
    """Ratio c'(n)/c(n) over probe indices, exact; eigen iff all ratios agree.

    At least three probe indices with nonzero c(n) are required before a
    form is declared an eigenform, to rule out sparse-series accidents.
    """
    g = apply_tp2(f, p)
    n_probe = min(n_probe, g.truncation)
    ratios = []
    for n in range(1, n_probe + 1):
        if f.coeffs[n]:
            ratios.append(Fraction(g.coeffs[n], f.coeffs[n]))
    if not ratios:
        raise ValueError("all probed coefficients vanish; no ratio to extract")
    lam = ratios[0]
    residual = max((abs(float(r - lam)) for r in ratios), default=0.0)
    is_eigen = len(ratios) >= 3 and all(r == lam for r in ratios)
    return HeckeResult(p=p, lam=lam, residual=residual, is_eigen=is_eigen,
                       probes=len(ratios))


@dataclass
class ShimuraCoeffs:
    lambdas: dict[int, int]
    lambda_n: list
    ell: int

    def to_dict(self) -> dict:
        return {"lambdas": {str(k): str(v) for k, v in self.lambdas.items()},
                "lambda_n": [str(v) for v in self.lambda_n], "ell": self.ell}


def shimura_lambda_n(lambdas: dict, n_max: int, ell: int, chi_sq=None) -> ShimuraCoeffs:
    """lambda(n) from the prime eigenvalues by the Euler-factor recurrence

        lambda(p^(k+1)) = lambda(p) lambda(p^k) - chi^2(p) p^(2 ell - 1) lambda(p^(k-1))

    and multiplicativity across coprime factors.  chi_sq(p) defaults to 1.
    """
    if chi_sq is None:
        chi_sq = lambda p: 1
    lam = [None] * (n_max + 1)
    lam[1] = Fraction(1)
    primes = [p for p in range(2, n_max + 1) if is_prime(p)]
    for p in primes:
        if p not in lambdas:
            raise ValueError(f"missing eigenvalue for prime {p} <= {n_max}")
    for n in range(2, n_max + 1):
        p = next(q for q in primes if n % q == 0)
        k = 0
        m = n
        while m % p == 0:
            m //= p
            k += 1
        if m > 1:
            lam[n] = lam[m] * lam[p ** k]
            continue
        # n = p^k: recurrence in k
        if k == 1:
            lam[n] = Fraction(lambdas[p])
        else:
            lam[n] = (Fraction(lambdas[p]) * lam[p ** (k - 1)]
                      - chi_sq(p) * Fraction(p) ** (2 * ell - 1) * lam[p ** (k - 2)])
    return ShimuraCoeffs(lambdas=dict(lambdas), lambda_n=lam, ell=ell)


def shimura_relation_check(f: QSeries, lambdas: dict, t: int, n_max: int,
                           chi_sq=None) -> Fraction:
    """Exact residual of the coefficient relation at squarefree t, n <= n_max.

    Verifies c(t n^2) = c(t) sum_{d|n} mu(d) ((-1)^ell t / d) chi(d)
    d^(ell-1) lambda(n/d) for every n; returns the largest |difference|
    (expected 0 on eigenforms).
    """
    tk, tm = squarefree_kernel(t)
    if tm != 1:
        raise ValueError(f"t = {t} is not squarefree")
    if f.truncation < t * n_max * n_max:
        raise ValueError("truncation below t * n_max^2")
    ell = f.ell
    sign = -1 if ell % 2 else 1
    sh = shimura_lambda_n(lambdas, n_max, ell, chi_sq=chi_sq)
    worst = Fraction(0)
    for n in range(1, n_max + 1):
        rhs = Fraction(0)
        for d in range(1, n + 1):
            if n % d:
                continue
            mu = _mobius(d)
            if mu == 0:
                continue
            sym = extended_symbol(sign * t, d)
            if sym == 0:
                continue
            chi_d = _chi_value(f, d)
            if chi_d == 0:
                continue
            rhs += mu * sym * chi_d * Fraction(d) ** (ell - 1) * sh.lambda_n[n // d]
        rhs *= f.coeffs[t]
        diff = abs(Fraction(f.coeffs[t * n * n]) - rhs)
        worst = max(worst, diff)
    return worst


def _mobius(n: int) -> int:
    if n == 1:
        return 1
    t, m = squarefree_kernel(n)
    if m != 1:
        return 0
    count = 0
    d = 2
    while d * d <= n:
        if n % d == 0:
            count += 1
            while n % d == 0:
                n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        count += 1
    return -1 if count % 2 else 1


def deligne_ratio_report(f: QSeries, lambdas: dict | None, t: int, n_max: int):
    """Measured ratios |a(t n^2)| / |a(t)| with a fitted growth exponent.

    Rows are (n, measured ratio); a(t) = 0 degenerates the relation and is
    flagged instead of divided by.  The exponent is the least-squares slope
    in log-log coordinates, or -inf when every ratio above n = 1 vanishes.
    """
    if f.coeffs[t] == 0:
        return {"flag": "a(t)=0", "rows": [], "exponent": None}
    rows = []
    at = abs(float(f.coeffs[t])) / t ** f.norm_exponent
    for n in range(1, n_max + 1):
        idx = t * n * n
        if idx > f.truncation:
            break
        ratio = (abs(float(f.coeffs[idx])) / idx ** f.norm_exponent) / at
        rows.append((n, ratio))
    pos = [(n, r) for n, r in rows if n > 1 and r > 0]
    if not pos:
        exponent = float("-inf")
    else:
        lx = np.log([n for n, _ in pos])
        ly = np.log([r for _, r in pos])
        exponent = float(np.polyfit(lx, ly, 1)[0]) if len(pos) > 1 else 0.0
    return {"flag": None, "rows": rows, "exponent": exponent}


def fourth_moment_exponent(f: QSeries, xs) -> float:
    """Least-squares slope of log sum_{n<=x} |a(n)|^4 against log x."""
    xs = sorted(float(x) for x in xs)
    if f.truncation < xs[-1] - 1:
        raise ValueError("truncation too small")
    quarts = np.abs(f.float_coeffs) ** 4
    cums = np.cumsum(quarts)
    pts = [(math.log(x), math.log(float(cums[min(int(x), f.truncation)]))) for x in xs]
    lx = np.array([p[0] for p in pts])
    ly = np.array([p[1] for p in pts])
    return float(np.polyfit(lx, ly, 1)[0])


def coeff_bound_report(f: QSeries, xs):
    """Running max of |a(n)| / n^(3/14) over n = t m^2, t squarefree, m | level.

    No assertion is attached (the implied constant is unknown); the table
    is monotone by construction and reported per sample size.
    """
    xs = sorted(float(x) for x in xs)
    n_hi = min(f.truncation, int(xs[-1]))
    sqfree = _squarefree_sieve(n_hi)
    admissible = np.zeros(n_hi + 1, dtype=bool)
    for m in range(1, int(math.isqrt(f.level)) + 1):
        if f.level % m == 0:
            idx = np.arange(1, n_hi // (m * m) + 1)
            keep = idx[sqfree[idx]]
            admissible[keep * m * m] = True
    # divisors of the level above sqrt(level)
    for m in range(int(math.isqrt(f.level)) + 1, f.level + 1):
        if f.level % m == 0 and m * m <= n_hi:
            idx = np.arange(1, n_hi // (m * m) + 1)
            keep = idx[sqfree[idx]]
            admissible[keep * m * m] = True
    ns = np.arange(n_hi + 1, dtype=np.float64)
    ns[0] = 1.0
    vals = np.where(admissible, np.abs(f.float_coeffs[: n_hi + 1]) / ns ** (3.0 / 14.0), 0.0)
    running = np.maximum.accumulate(vals)
    return [(x, float(running[min(int(x), n_hi)])) for x in xs]


def _squarefree_sieve(n: int) -> np.ndarray:
    out = np.ones(n + 1, dtype=bool)
    out[0] = False
    d = 2
    while d * d <= n:
        out[d * d :: d * d] = False
        d += 1
    return out
