"""Exact big-integer series convolution via residues modulo word-size primes.

Series multiplication here is always a sparse-times-dense pass (the eta and
theta factors have O(sqrt X) support), carried out in int64 numpy arrays
modulo several 25-bit primes and recombined by Garner's algorithm.  The
reconstruction is exact as long as the combined modulus exceeds twice the
largest output coefficient, which callers guarantee through a bit bound.
"""

from __future__ import annotations

import math

import numpy as np

_PRIME_BITS = 25
_PRIME_CAP = 1 << _PRIME_BITS
# int64 accumulation headroom: products are < 2^50, so this many terms
# can be accumulated between reductions.
_PASS_CHUNK = 1 << 12


def _is_small_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


def engine_primes(count: int) -> list[int]:
    """The `count` largest primes below 2^25."""
    out = []
    n = _PRIME_CAP - 1
    while len(out) < count:
        if _is_small_prime(n):
            out.append(n)
        n -= 2
    return out


def primes_for_bits(bits: int) -> list[int]:
    """Enough engine primes for a combined modulus of > 2^bits."""
    count = bits // (_PRIME_BITS - 1) + 1
    return engine_primes(count)


def sparse_dense_pass_mod(dense: np.ndarray, support, coeffs_mod, p: int, trunc: int) -> np.ndarray:
    """One exact pass (dense * sparse) mod p, truncated at index `trunc`.

    dense values and coeffs_mod must already be reduced into [0, p); the
    support is processed in chunks small enough that int64 accumulation
    cannot overflow.
    """
    out = np.zeros(trunc + 1, dtype=np.int64)
    n = len(dense) - 1
    done = 0
    for off, c in zip(support, coeffs_mod):
        if off > trunc or c == 0:
            continue
        hi = min(n, trunc - off)
        out[off : off + hi + 1] += c * dense[: hi + 1]
        done += 1
        if done % _PASS_CHUNK == 0:
            out %= p
    out %= p
    return out


def garner_combine(residues: list[np.ndarray], primes: list[int]) -> list[int]:
    """Exact signed coefficients from per-prime residues (balanced lift)."""
    k = len(primes)
    digits = [residues[0].astype(np.int64) % primes[0]]
    for i in range(1, k):
        pi = primes[i]
        t = residues[i].astype(np.int64) % pi
        for j in range(i):
            inv = pow(primes[j], -1, pi)
            t = ((t - digits[j]) % pi) * inv % pi
        digits.append(t)
    modulus = math.prod(primes)
    half = modulus // 2
    cols = [d.tolist() for d in digits]
    out = []
    for idx in range(len(cols[0])):
        acc = cols[k - 1][idx]
        for i in range(k - 2, -1, -1):
            acc = acc * primes[i] + cols[i][idx]
        out.append(acc - modulus if acc > half else acc)
    return out


def _nnz(xs) -> int:
    return sum(1 for x in xs if x)


def convolve_exact(a: list[int], b: list[int], trunc: int, bit_bound: int | None = None) -> list[int]:
    """Exact convolution sum_{i+j=n} a_i b_j for n <= trunc.

    The sparser factor drives the pass.  `bit_bound`, when given, must bound
    bits(max |output coefficient|); otherwise it is derived from the inputs.
    """
    if bit_bound is None:
        ma = max((abs(x) for x in a), default=0)
        mb = max((abs(x) for x in b), default=0)
        if ma == 0 or mb == 0:
            return [0] * (trunc + 1)
        overlap = min(len(a), len(b), trunc + 1)
        bit_bound = ma.bit_length() + mb.bit_length() + overlap.bit_length() + 1
    primes = primes_for_bits(bit_bound)
    sparse, dense = (a, b) if _nnz(a) <= _nnz(b) else (b, a)
    support = [i for i, c in enumerate(sparse) if c and i <= trunc]
    residues = []
    for p in primes:
        dmod = np.array([c % p for c in dense], dtype=np.int64)
        cmod = [sparse[i] % p for i in support]
        residues.append(sparse_dense_pass_mod(dmod, support, cmod, p, trunc))
    return garner_combine(residues, primes)


def power_sparse_exact(support, coeffs, exponent: int, trunc: int, bit_bound: int,
                       tail_factors: list[tuple[list[int], list[int]]] | None = None) -> list[int]:
    """(sparse series)^exponent, optionally times extra sparse factors, exactly.

    All passes run in the residue domain; one Garner recombination at the
    end.  `tail_factors` is a list of (support, coeffs) applied after the
    power.
    """
    primes = primes_for_bits(bit_bound)
    support = [int(i) for i in support]
    residues = []
    for p in primes:
        cmod = [c % p for c in coeffs]
        dense = np.zeros(trunc + 1, dtype=np.int64)
        for off, c in zip(support, cmod):
            if off <= trunc:
                dense[off] = c
        for _ in range(exponent - 1):
            dense = sparse_dense_pass_mod(dense, support, cmod, p, trunc)
        for fsup, fcoef in tail_factors or []:
            fmod = [c % p for c in fcoef]
            dense = sparse_dense_pass_mod(dense, fsup, fmod, p, trunc)
        residues.append(dense)
    return garner_combine(residues, primes)
