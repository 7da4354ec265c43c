"""Truncated q-expansions with an exact integer backend.

A QSeries keeps raw coefficients c(n) as arbitrary-precision integers for
identity checks (Hecke action, Shimura relation, convolution oracles) and
derives the normalized double-precision coefficients
a(n) = c(n) / n^((ell - 1/2)/2) lazily for the statistical scans, where
tau(n)-sized integers no longer fit machine words but a(n) is O(1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _multimod

__all__ = [
    "EtaQuotientSpec",
    "HalfWeight",
    "QSeries",
    "builtin_form",
    "delta_expansion",
    "dilate",
    "eta_expansion",
    "eta_quotient",
    "eta_cubed_support",
    "multiply",
    "normalized_coeff",
    "pentagonal_support",
    "read_qexp",
    "theta_expansion",
    "write_qexp",
]

BUILTIN_NAMES = ("theta_delta", "eta8_cubed", "theta_delta_fricke")

CHARACTER_TAGS = ("trivial", "four_n_symbol", "user")


@dataclass(frozen=True)
class HalfWeight:
    """Weight (2l+1)/2 written by its odd numerator two_k = 2l + 1."""

    two_k: int

    def __post_init__(self):
        if self.two_k % 2 == 0 or self.two_k < 3:
            raise ValueError(f"half-integral weight needs odd two_k >= 3, got {self.two_k}")

    @property
    def ell(self) -> int:
        return (self.two_k - 1) // 2


class QSeries:
    """Truncated q-expansion sum_{0 <= n <= X} c(n) q^n with metadata.

    Immutable by convention: no method mutates coefficients after
    construction, so instances can be shared freely across threads.
    """

    __slots__ = ("weight_two", "level", "character_tag", "truncation", "coeffs",
                 "_float_coeffs", "read_warnings")

    def __init__(self, coeffs, weight_two: int, level: int, character_tag: str = "trivial",
                 truncation: int | None = None):
        if character_tag not in CHARACTER_TAGS:
            raise ValueError(f"unknown character tag {character_tag!r}")
        if level < 1:
            raise ValueError("level must be positive")
        coeffs = list(coeffs)
        if truncation is None:
            truncation = len(coeffs) - 1
        if truncation < 0:
            raise ValueError("truncation must be >= 0")
        if len(coeffs) < truncation + 1:
            coeffs.extend([0] * (truncation + 1 - len(coeffs)))
        self.coeffs = coeffs[: truncation + 1]
        self.weight_two = int(weight_two)
        self.level = int(level)
        self.character_tag = character_tag
        self.truncation = truncation
        self._float_coeffs = None
        self.read_warnings = 0

    # -- weight bookkeeping -------------------------------------------------

    @property
    def is_half_integral(self) -> bool:
        return self.weight_two % 2 == 1

    @property
    def half_weight(self) -> HalfWeight:
        return HalfWeight(self.weight_two)

    @property
    def ell(self) -> int:
        if not self.is_half_integral:
            raise ValueError("integer-weight series has no ell")
        return (self.weight_two - 1) // 2

    @property
    def norm_exponent(self) -> float:
        """(ell - 1/2)/2 = (two_k - 2)/4, the normalization power."""
        if not self.is_half_integral:
            raise ValueError("normalization defined for half-integral weight only")
        return (self.weight_two - 2) / 4.0

    # -- coefficient access -------------------------------------------------

    def c(self, n: int) -> int:
        """Raw integer coefficient, 0 <= n <= truncation."""
        if not 0 <= n <= self.truncation:
            raise IndexError(f"n={n} outside [0, {self.truncation}]")
        return self.coeffs[n]

    @property
    def float_coeffs(self) -> np.ndarray:
        """Normalized a(n) as float64; index 0 is fixed to 0."""
        if self._float_coeffs is None:
            n = np.arange(self.truncation + 1, dtype=np.float64)
            n[0] = 1.0
            raw = np.array([float(cn) for cn in self.coeffs], dtype=np.float64)
            arr = raw / n ** self.norm_exponent
            arr[0] = 0.0
            arr.setflags(write=False)
            self._float_coeffs = arr
        return self._float_coeffs

    def support(self) -> list[int]:
        return [n for n, cn in enumerate(self.coeffs) if cn]

    def scale(self, k: int) -> "QSeries":
        return QSeries([k * cn for cn in self.coeffs], self.weight_two, self.level,
                       self.character_tag, self.truncation)

    def __eq__(self, other) -> bool:
        return (isinstance(other, QSeries)
                and self.weight_two == other.weight_two
                and self.level == other.level
                and self.character_tag == other.character_tag
                and self.truncation == other.truncation
                and self.coeffs == other.coeffs)

    def __repr__(self):
        head = {n: c for n, c in enumerate(self.coeffs[:12]) if c}
        return (f"QSeries(weight={self.weight_two}/2, level={self.level}, "
                f"trunc={self.truncation}, head={head})")


# -- constructors -----------------------------------------------------------


def pentagonal_support(truncation: int) -> list[tuple[int, int]]:
    """(exponent, sign) pairs of the Euler product prod (1 - q^n)."""
    out = [(0, 1)]
    k = 1
    while True:
        g1 = k * (3 * k - 1) // 2
        g2 = k * (3 * k + 1) // 2
        if g1 > truncation and g2 > truncation:
            break
        s = 1 if k % 2 == 0 else -1
        if g1 <= truncation:
            out.append((g1, s))
        if g2 <= truncation:
            out.append((g2, s))
        k += 1
    return sorted(out)


def eta_cubed_support(truncation: int) -> list[tuple[int, int]]:
    """(exponent, value) pairs of prod (1 - q^n)^3 = sum (-1)^k (2k+1) q^(k(k+1)/2)."""
    out = []
    k = 0
    while k * (k + 1) // 2 <= truncation:
        out.append((k * (k + 1) // 2, (-1) ** k * (2 * k + 1)))
        k += 1
    return out


def eta_expansion(truncation: int) -> QSeries:
    """prod_{n>=1} (1 - q^n) truncated at q^truncation (no q^{1/24} prefactor)."""
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    coeffs = [0] * (truncation + 1)
    for g, s in pentagonal_support(truncation):
        coeffs[g] = s
    return QSeries(coeffs, weight_two=1, level=1)


def theta_expansion(truncation: int) -> QSeries:
    """theta(z) = 1 + 2 sum q^(m^2), weight 1/2, level 4."""
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    coeffs = [0] * (truncation + 1)
    coeffs[0] = 1
    m = 1
    while m * m <= truncation:
        coeffs[m * m] = 2
        m += 1
    return QSeries(coeffs, weight_two=1, level=4)


def dilate(s: QSeries, d: int) -> QSeries:
    """z -> dz on the expansion: coefficient at d*n is c(n); truncation kept."""
    if d < 1:
        raise ValueError("dilation factor must be >= 1")
    if d == 1:
        return s
    coeffs = [0] * (s.truncation + 1)
    for n, cn in enumerate(s.coeffs):
        if cn and d * n <= s.truncation:
            coeffs[d * n] = cn
    return QSeries(coeffs, s.weight_two, s.level * d * d, s.character_tag, s.truncation)


def multiply(a: QSeries, b: QSeries, truncation: int | None = None,
             level: int | None = None, character_tag: str | None = None) -> QSeries:
    """Exact convolution c(n) = sum_{i+j=n} a(i) b(j); weights add.

    The level defaults to lcm(a.level, b.level); callers owning sharper
    metadata pass it explicitly.
    """
    if truncation is None:
        truncation = min(a.truncation, b.truncation)
    if truncation > min(a.truncation, b.truncation):
        raise ValueError("requested truncation exceeds the factors' truncations")
    coeffs = _multimod.convolve_exact(a.coeffs, b.coeffs, truncation)
    return QSeries(coeffs, a.weight_two + b.weight_two,
                   level if level is not None else math.lcm(a.level, b.level),
                   character_tag or a.character_tag, truncation)


def delta_expansion(truncation: int) -> QSeries:
    """Delta(z) = q prod (1 - q^n)^24, weight 12, level 1, exact."""
    if truncation < 1:
        raise ValueError("truncation must be >= 1")
    tri = eta_cubed_support(truncation - 1)
    sup = [g for g, _ in tri]
    coef = [c for _, c in tri]
    bits = _tau_bit_bound(truncation)
    eta24 = _multimod.power_sparse_exact(sup, coef, 8, truncation - 1, bits)
    return QSeries([0] + eta24, weight_two=24, level=1)


def _tau_bit_bound(x: int) -> int:
    # |tau(n)| <= d(n) n^{11/2} <= 2 n^6 (Deligne); generous headroom
    return max(16, math.ceil(6.0 * math.log2(max(2, x))) + 8)


def _theta_delta_dilated(truncation: int, d: int) -> QSeries:
    """theta(z) * Delta(d z) exactly, in a single residue-domain pipeline."""
    shift = d  # Delta(dz) = q^d * prod(1 - q^{dn})^24
    inner = truncation - shift
    if inner < 0:
        raise ValueError("truncation too small for the Delta factor")
    tri = [(d * g, c) for g, c in eta_cubed_support(inner // max(d, 1)) if d * g <= inner]
    theta_sup, theta_coef = [], []
    m = 0
    while m * m <= inner:
        theta_sup.append(m * m)
        theta_coef.append(1 if m == 0 else 2)
        m += 1
    bits = _tau_bit_bound(truncation) + math.ceil(math.log2(max(2, 2 * math.isqrt(truncation) + 1))) + 2
    conv = _multimod.power_sparse_exact([g for g, _ in tri], [c for _, c in tri], 8,
                                        inner, bits, tail_factors=[(theta_sup, theta_coef)])
    return QSeries([0] * shift + conv, weight_two=25, level=4 * d * d if d > 1 else 4)


@dataclass(frozen=True)
class EtaQuotientSpec:
    """Formal eta quotient prod eta(d z)^r given as (dilation, exponent) factors.

    The implied prefactor q^(sum d r / 24) must be a non-negative integer,
    otherwise the quotient has fractional exponents and is rejected.
    """

    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        total = sum(d * r for d, r in self.factors)
        if total % 24 != 0 or total < 0:
            raise ValueError(f"sum d*r = {total} is not a non-negative multiple of 24")
        for d, _ in self.factors:
            if d < 1:
                raise ValueError("dilations must be positive")

    @property
    def prefactor(self) -> int:
        return sum(d * r for d, r in self.factors) // 24


def eta_quotient(spec: EtaQuotientSpec | list, truncation: int,
                 weight_two: int | None = None, level: int | None = None,
                 character_tag: str = "trivial") -> QSeries:
    """Expand prod eta(d z)^r as an exact power series.

    Positive exponents go through the sparse multiplication engine;
    negative ones use exact division by the sparse pentagonal factor.
    """
    if not isinstance(spec, EtaQuotientSpec):
        spec = EtaQuotientSpec(tuple(tuple(f) for f in spec))
    shift = spec.prefactor
    inner = truncation - shift
    if inner < 0:
        raise ValueError("truncation smaller than the q-prefactor")
    cur = [1] + [0] * inner
    for d, r in spec.factors:
        pent = [(d * g, s) for g, s in pentagonal_support(inner // d) if d * g <= inner]
        sup = [g for g, _ in pent]
        coef = [s for _, s in pent]
        for _ in range(abs(r)):
            if r > 0:
                cur = _multimod.convolve_exact(cur, _sparse_to_dense(sup, coef, inner), inner)
            else:
                cur = _divide_by_sparse(cur, pent, inner)
    if weight_two is None:
        weight_two = sum(r for _, r in spec.factors)
    if level is None:
        level = max((d for d, _ in spec.factors), default=1)
        level = math.lcm(4, level * level) if weight_two % 2 else level
    return QSeries([0] * shift + cur, weight_two, level, character_tag, truncation)


def _sparse_to_dense(sup, coef, trunc):
    out = [0] * (trunc + 1)
    for g, c in zip(sup, coef):
        if g <= trunc:
            out[g] = c
    return out


def _divide_by_sparse(num: list[int], pent: list[tuple[int, int]], trunc: int) -> list[int]:
    # pent[0] is (0, 1): leading unit, so the division is exact term by term
    out = [0] * (trunc + 1)
    for n in range(trunc + 1):
        acc = num[n]
        for g, s in pent:
            if g == 0:
                continue
            if g > n:
                break
            acc -= s * out[n - g]
        out[n] = acc
    return out


def builtin_form(name: str, truncation: int = 1000) -> QSeries:
    """The laboratory's reference forms.

    theta_delta        theta(z) Delta(z) in S_{25/2}(4); satisfies every
                       hypothesis of the progression/moment experiments.
    eta8_cubed         eta(8z)^3, weight 3/2, level 64; the unary-theta
                       negative control excluded by the ell = 1 hypothesis.
    theta_delta_fricke kappa * theta(z) Delta(4z), the Fricke image of
                       theta_delta; kappa is confirmed numerically by
                       voronoi.fricke_scalar before being used exactly.
    """
    if name == "theta_delta":
        return _theta_delta_dilated(truncation, 1)
    if name == "eta8_cubed":
        qs = eta_quotient(EtaQuotientSpec(((8, 3),)), truncation,
                          weight_two=3, level=64)
        return qs
    if name == "theta_delta_fricke":
        from . import voronoi  # deferred: voronoi depends on qseries

        kappa = voronoi.fricke_scalar_cached()
        k_int = round(kappa.real)
        if abs(kappa - k_int) > 1e-6 * abs(kappa):
            raise ArithmeticError(f"Fricke scalar {kappa} is not close to an integer")
        base = _theta_delta_dilated(truncation, 4)
        out = base.scale(k_int)
        return QSeries(out.coeffs, 25, 4, "four_n_symbol", truncation)
    raise ValueError(f"unknown builtin form {name!r}; choose from {BUILTIN_NAMES}")


def normalized_coeff(s: QSeries, n: int) -> float:
    """a(n) = c(n) / n^((ell-1/2)/2) as a double."""
    if not 1 <= n <= s.truncation:
        raise IndexError(f"n={n} outside [1, {s.truncation}]")
    return float(s.coeffs[n]) / n ** s.norm_exponent


# -- text format ------------------------------------------------------------


class QExpFormatError(ValueError):
    """Malformed q-expansion file."""


def write_qexp(s: QSeries, path) -> None:
    """Write the documented text format; zero coefficients are omitted."""
    if s.weight_two % 2 == 0:
        raise QExpFormatError("only half-integral weight series round-trip through files")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("QEXP v1\n")
        fh.write(f"weight {s.weight_two}/2 level {s.level} char {s.character_tag} "
                 f"trunc {s.truncation}\n")
        for n, cn in enumerate(s.coeffs):
            if cn:
                fh.write(f"{n} {cn}\n")


def read_qexp(path) -> QSeries:
    """Read the text format; missing indices are zero (counted as warnings)."""
    with open(path, "r", encoding="ascii") as fh:
        magic = fh.readline().strip()
        if magic != "QEXP v1":
            raise QExpFormatError(f"bad magic line {magic!r}")
        header = fh.readline().split()
        try:
            if header[0] != "weight" or header[2] != "level" or header[4] != "char" \
                    or header[6] != "trunc":
                raise QExpFormatError(f"bad header {' '.join(header)!r}")
            num, den = header[1].split("/")
            two_k = int(num)
            if int(den) != 2:
                raise QExpFormatError("weight must be written as <two_k>/2")
            level = int(header[3])
            tag = header[5]
            trunc = int(header[7])
        except (IndexError, ValueError) as exc:
            raise QExpFormatError(f"malformed header: {exc}") from exc
        if two_k % 2 == 0:
            raise QExpFormatError(f"even weight numerator {two_k} violates parity")
        if tag not in CHARACTER_TAGS:
            raise QExpFormatError(f"unknown character tag {tag!r}")
        coeffs = [0] * (trunc + 1)
        seen = 0
        last = -1
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise QExpFormatError(f"bad coefficient line {line!r}")
            try:
                n, cn = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise QExpFormatError(f"non-integer coefficient line {line!r}") from exc
            if n <= last:
                raise QExpFormatError(f"indices must be strictly increasing at n={n}")
            if n > trunc:
                raise QExpFormatError(f"index {n} beyond truncation {trunc}")
            coeffs[n] = cn
            seen += 1
            last = n
    out = QSeries(coeffs, two_k, level, tag, trunc)
    out.read_warnings = (trunc + 1) - seen  # implicit zeros
    return out
