"""Modular arithmetic and the exponential/character sums over prime moduli.

Everything here is exact integer arithmetic except the complex exponentials.
Square roots mod p are canonicalized into [1, (p-1)/2]; every consumer of
roots in this package relies on that branch.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NonResidueError",
    "PrimeCtx",
    "ZeroResidueError",
    "delta_p",
    "ep",
    "eps",
    "is_prime",
    "legendre",
    "next_prime_below",
    "nearest_prime",
    "quadruple_delta_count",
    "sa",
    "salie_closed",
    "salie_closed_table",
    "salie_direct",
    "salie_direct_table",
    "sqrt_mod",
]

TWO_PI = 2.0 * math.pi

# Deterministic Miller-Rabin witnesses, sufficient for all n < 2^64.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


class NonResidueError(ValueError):
    """Raised when a square root is requested for a quadratic non-residue."""


class ZeroResidueError(ValueError):
    """Raised when a square root is requested for x = 0 (mod p)."""


def is_prime(n: int) -> bool:
    """Deterministic Miller-Rabin test, valid for all n < 2^64."""
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    if n >= 1 << 64:
        raise ValueError("primality test is deterministic only below 2^64")
    d = n - 1
    s = 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def next_prime_below(n: int) -> int:
    """Largest prime <= n (n >= 2)."""
    if n < 2:
        raise ValueError("no prime below 2")
    k = n
    while not is_prime(k):
        k -= 1
    return k


def nearest_prime(x: float) -> int:
    """Prime nearest to x; ties broken downward."""
    lo = math.floor(x)
    hi = lo + 1
    while lo >= 2 and not is_prime(lo):
        lo -= 1
    while not is_prime(hi):
        hi += 1
    if lo < 2:
        return hi
    return lo if (x - lo) <= (hi - x) else hi


@dataclass
class PrimeCtx:
    """An odd prime with lazily built residue tables.

    Tables (quadratic residues, canonical roots, modular inverses) are
    built on first use and reused; the context itself never mutates them
    afterwards, so instances are safe to share across threads once warm.
    """

    p: int
    _sqrt_table: dict[int, int] | None = field(default=None, repr=False)
    _inv_table: np.ndarray | None = field(default=None, repr=False)
    _chi_table: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.p == 2 or not is_prime(self.p):
            raise ValueError(f"{self.p} is not an odd prime")

    @property
    def sqrt_table(self) -> dict[int, int]:
        """Map r -> y with y^2 = r (mod p) and 1 <= y <= (p-1)/2."""
        if self._sqrt_table is None:
            tab = {}
            for y in range(1, (self.p - 1) // 2 + 1):
                tab[y * y % self.p] = y
            self._sqrt_table = tab
        return self._sqrt_table

    @property
    def inv_table(self) -> np.ndarray:
        if self._inv_table is None:
            p = self.p
            inv = np.zeros(p, dtype=np.int64)
            inv[1] = 1
            for i in range(2, p):
                inv[i] = (p - (p // i) * inv[p % i]) % p
            self._inv_table = inv
        return self._inv_table

    @property
    def chi_table(self) -> np.ndarray:
        """Legendre symbol (b/p) for b = 0..p-1 as an int8 array."""
        if self._chi_table is None:
            p = self.p
            chi = -np.ones(p, dtype=np.int8)
            chi[0] = 0
            sq = (np.arange(1, (p - 1) // 2 + 1, dtype=np.int64) ** 2) % p
            chi[sq] = 1
            self._chi_table = chi
        return self._chi_table

    def residues(self) -> list[int]:
        """The (p-1)/2 quadratic residues in [1, p-1]."""
        return sorted(self.sqrt_table.keys())


def _as_p(p) -> int:
    return p.p if isinstance(p, PrimeCtx) else int(p)


def legendre(a: int, p) -> int:
    """Legendre symbol (a/p) by Euler's criterion, values in {-1, 0, 1}."""
    q = _as_p(p)
    a %= q
    if a == 0:
        return 0
    r = pow(a, (q - 1) // 2, q)
    return -1 if r == q - 1 else 1


def eps(d: int) -> complex:
    """Normalized Gauss-sum unit: 1 for d = 1 (4), i for d = 3 (4).

    Only positive odd d are accepted; callers pass reduced residues.
    """
    if d <= 0 or d % 2 == 0:
        raise ValueError(f"eps is defined for positive odd integers, got {d}")
    return 1.0 + 0.0j if d % 4 == 1 else 1.0j


def ep(a: int, p) -> complex:
    """exp(2 pi i a / p), with a reduced mod p before evaluation."""
    q = _as_p(p)
    return cmath.exp(2j * math.pi * (a % q) / q)


def sqrt_mod(x: int, p) -> int:
    """Square root of x mod p, canonicalized into [1, (p-1)/2].

    Tonelli-Shanks; raises ZeroResidueError for x = 0 (mod p) and
    NonResidueError when (x/p) = -1.
    """
    q = _as_p(p)
    x %= q
    if x == 0:
        raise ZeroResidueError(f"0 has no canonical root mod {q}")
    if legendre(x, q) != 1:
        raise NonResidueError(f"{x} is not a quadratic residue mod {q}")
    if q % 4 == 3:
        y = pow(x, (q + 1) // 4, q)
    else:
        # Tonelli-Shanks: q - 1 = d * 2^s with d odd
        d, s = q - 1, 0
        while d % 2 == 0:
            d //= 2
            s += 1
        z = 2
        while legendre(z, q) != -1:
            z += 1
        c = pow(z, d, q)
        y = pow(x, (d + 1) // 2, q)
        t = pow(x, d, q)
        m = s
        while t != 1:
            i, t2 = 0, t
            while t2 != 1:
                t2 = t2 * t2 % q
                i += 1
            b = pow(c, 1 << (m - i - 1), q)
            y = y * b % q
            t = t * b * b % q
            c = b * b % q
            m = i
    if y > (q - 1) // 2:
        y = q - y
    return y


def delta_p(x: int, p) -> int:
    """Indicator of x = 0 (mod p)."""
    return 1 if x % _as_p(p) == 0 else 0


def salie_direct(u: int, v: int, p) -> complex:
    """Normalized Salie sum (1/sqrt p) sum_b (b/p) e_p(u b + v b^-1).

    Full O(p) sum over invertible b; works for any u, v.
    """
    ctx = p if isinstance(p, PrimeCtx) else PrimeCtx(int(p))
    q = ctx.p
    b = np.arange(1, q, dtype=np.int64)
    args = (u % q) * b + (v % q) * ctx.inv_table[1:]
    phases = np.exp(2j * math.pi * (args % q) / q)
    return complex(np.sum(ctx.chi_table[1:] * phases)) / math.sqrt(q)


def salie_closed(u: int, v: int, p) -> complex:
    """Two-term closed form (v/p) eps_p sum_{y^2 = uv} e_p(2y).

    Valid only for p not dividing u*v; callers with degenerate arguments
    must use salie_direct.
    """
    ctx = p if isinstance(p, PrimeCtx) else PrimeCtx(int(p))
    q = ctx.p
    if (u * v) % q == 0:
        raise ValueError("closed form requires p coprime to u*v; use salie_direct")
    uv = (u * v) % q
    if legendre(uv, q) != 1:
        return 0.0 + 0.0j
    y0 = ctx.sqrt_table[uv]
    return legendre(v, q) * eps(q) * (ep(2 * y0, q) + ep(-2 * y0, q))


def salie_direct_table(ctx: PrimeCtx) -> np.ndarray:
    """All Sal_p(u, v) for u, v in [0, p-1] at once, via length-p DFTs.

    For fixed v, Sal_p(., v) is the discrete Fourier transform of
    b -> (b/p) e_p(v b^-1); one FFT per v gives the full p x p table.
    This is an independent evaluation route from salie_direct.
    """
    p = ctx.p
    inv = ctx.inv_table
    chi = ctx.chi_table.astype(np.float64)
    roots = np.exp(2j * math.pi * np.arange(p) / p)
    table = np.empty((p, p), dtype=np.complex128)
    for v in range(p):
        g = chi * roots[(v * inv) % p]
        g[0] = 0.0
        # DFT with e(+ub/p) convention: conj of numpy's forward transform
        table[:, v] = np.conj(np.fft.fft(np.conj(g)))
    return table / math.sqrt(p)


def salie_closed_table(ctx: PrimeCtx) -> np.ndarray:
    """All closed-form Salie values for u, v in [1, p-1], vectorized.

    Entry [u, v] is (v/p) eps_p (e_p(2y) + e_p(-2y)) summed over roots of
    y^2 = uv, which is 0 when uv is a non-residue.
    """
    p = ctx.p
    roots2 = np.zeros(p, dtype=np.complex128)
    for r, y in ctx.sqrt_table.items():
        roots2[r] = ep(2 * y, p) + ep(-2 * y, p)
    u = np.arange(p, dtype=np.int64)
    uv = np.outer(u, u) % p
    chi_v = ctx.chi_table.astype(np.complex128)
    return eps(p) * roots2[uv] * chi_v[np.newaxis, :]


def sa(y: int, p) -> complex:
    """Two-exponential reduction e_p(r) + e_p(-r) with r^2 = y (mod p).

    Zero when (y/p) = -1; the y = 0 (mod p) case is outside the defining
    case split and returns 0 as well (callers that care flag it).
    """
    ctx = p if isinstance(p, PrimeCtx) else PrimeCtx(int(p))
    q = ctx.p
    y %= q
    if y == 0 or legendre(y, q) != 1:
        return 0.0 + 0.0j
    y0 = ctx.sqrt_table[y]
    return ep(y0, q) + ep(-y0, q)


def quadruple_delta_count(m, mu: int, p) -> int:
    """Count sign vectors e in {+-1}^4 with sum e_i sqrt(mu m_i) = 0 (mod p).

    Brute force over the 16 vectors; each mu*m_i must be a residue.
    """
    ctx = p if isinstance(p, PrimeCtx) else PrimeCtx(int(p))
    q = ctx.p
    if len(m) != 4:
        raise ValueError("exactly four values required")
    roots = []
    for mi in m:
        r = (mu * mi) % q
        if r == 0 or legendre(r, q) != 1:
            raise NonResidueError(f"mu*m = {mu}*{mi} is not a residue mod {q}")
        roots.append(ctx.sqrt_table[r])
    count = 0
    for mask in range(16):
        tot = 0
        for i in range(4):
            tot += roots[i] if (mask >> i) & 1 else -roots[i]
        if tot % q == 0:
            count += 1
    return count
