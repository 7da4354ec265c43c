"""Twisted functional equation, dual summation identity, and the Salié-side
rearrangement of the progression sums.

The dual-sum kernel B is reconstructed by Mellin inversion of the twisted
functional equation: substituting the completed-L reflection into
(1/2pi i) int L(s, f, u/q) what(s) x^s ds and collecting constants gives

    B(y) = (1/(2 pi y)) (1/2 pi i) int_(sigma)
           what(s) (4 pi^2 y)^s Gamma(k+1-s)/Gamma(k+s) ds,
    k = (2 ell - 1)/4,

a vertical-line integral that is abscissa-independent on sigma < k + 1.
The derivation is written out in docs/kernel_derivation.md; the identity
check voronoi_check validates every constant end to end.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import loggamma

from .modarith import PrimeCtx, ep, eps, is_prime, legendre
from .qseries import QSeries, builtin_form
from .windows import Window, standard_bump

__all__ = [
    "BKernel",
    "FrickePair",
    "InsufficientTruncationError",
    "TwistedLValue",
    "VoronoiReport",
    "b_kernel",
    "eval_series",
    "fricke_scalar",
    "fricke_scalar_cached",
    "make_fricke_pair",
    "omega",
    "rearranged_e_check",
    "salie_side_sum",
    "twisted_l",
    "voronoi_check",
]

_FRICKE_SAMPLE_POINTS = (0.5j, (1 + 2j) / 4, (-1 + 2j) / 4)


class InsufficientTruncationError(ValueError):
    """A dual sum needs more coefficients than the series carries."""


def eval_series(s: QSeries, z: complex) -> complex:
    """sum c(n) e(nz) at a point of the upper half-plane."""
    if z.imag <= 0:
        raise ValueError("evaluation point must have positive imaginary part")
    q = cmath.exp(2j * math.pi * z)
    total = 0.0 + 0.0j
    qn = 1.0 + 0.0j
    for n, cn in enumerate(s.coeffs):
        if n:
            qn *= q
        if cn:
            total += cn * qn
    return total


def fricke_scalar(f: QSeries | None = None, truncation: int = 400) -> complex:
    """The constant kappa with f|W_4 = kappa * theta(z) Delta(4z) for theta*Delta.

    Determined numerically: phi(z)^(-25) f(-1/(4z)) over theta(z) Delta(4z)
    must give the same ratio at independent sample points; non-constancy
    means the ansatz is wrong and is an error.
    """
    if f is None:
        f = builtin_form("theta_delta", truncation)
    if f.weight_two != 25 or f.level != 4:
        raise ValueError("the Fricke ansatz is calibrated for the theta*Delta builtin")
    target = _theta_delta4_raw(truncation)
    ratios = []
    for z in _FRICKE_SAMPLE_POINTS:
        zz = complex(z)
        w1 = -1.0 / (4.0 * zz)
        phi = 4 ** 0.25 * cmath.sqrt(-1j * zz)
        lhs = phi ** (-25) * eval_series(f, w1)
        rhs = eval_series(target, zz)
        ratios.append(lhs / rhs)
    spread = max(abs(r - ratios[0]) for r in ratios)
    if spread > 1e-8 * abs(ratios[0]):
        raise ArithmeticError(f"Fricke ratio not constant across sample points: {ratios}")
    return ratios[0]


def _theta_delta4_raw(truncation: int) -> QSeries:
    from .qseries import _theta_delta_dilated

    return _theta_delta_dilated(truncation, 4)


_FRICKE_CACHE: dict[str, complex] = {}


def fricke_scalar_cached() -> complex:
    if "theta_delta" not in _FRICKE_CACHE:
        _FRICKE_CACHE["theta_delta"] = fricke_scalar()
    return _FRICKE_CACHE["theta_delta"]


def omega(u: int, q: int, ell: int) -> complex:
    """The reflection root of unity eps_q^-(2 ell + 1) (-u^-1 / q)."""
    if q % 2 == 0 or q < 1:
        raise ValueError("q must be odd and positive")
    if math.gcd(u, q) != 1:
        raise ValueError("u must be invertible mod q")
    ubar = pow(u, -1, q)
    return eps(q) ** (-(2 * ell + 1)) * legendre(-ubar, q)


@dataclass
class TwistedLValue:
    value: complex
    tail_bound: float
    n_terms: int


def twisted_l(f: QSeries, u: int, q: int, s: complex, n_max: int | None = None) -> TwistedLValue:
    """Truncated additive twist sum a(n) e_q(u n) n^(-s), Re s >= 3/2.

    The attached tail bound uses the largest observed |a(n)| with a
    coefficient-growth allowance of n^(1/4).
    """
    s = complex(s)
    if s.real < 1.5:
        raise ValueError("require Re s >= 3/2 for a convergence margin")
    if math.gcd(u, q) != 1:
        raise ValueError("u must be invertible mod q")
    if n_max is None:
        n_max = f.truncation
    n_max = min(n_max, f.truncation)
    ns = np.arange(1, n_max + 1, dtype=np.float64)
    phases = np.exp(2j * math.pi * ((u * np.arange(1, n_max + 1, dtype=np.int64)) % q) / q)
    terms = f.float_coeffs[1 : n_max + 1] * phases * ns ** (-s)
    value = complex(np.sum(terms))
    amax = float(np.max(np.abs(f.float_coeffs[1 : n_max + 1])))
    beta = 0.25
    tail = amax * n_max ** (1 + beta - s.real) / (s.real - 1 - beta)
    return TwistedLValue(value=value, tail_bound=tail, n_terms=n_max)


# -- the Mellin-Barnes kernel -------------------------------------------------


class BKernel:
    """Vertical-line quadrature of the Gamma-ratio kernel.

    The t-grid is composite Gauss-Legendre on |Im s| <= t_max, extended
    until panel contributions fall below the target tolerance; the window
    transform what(sigma + it) is evaluated on a graded node set that
    resolves the t log(tau) oscillation where the window is non-negligible.
    """

    PANEL = 0.5
    GL_ORDER = 16
    DEFAULT_T_MAX = 800.0
    GRADE_RATIO = 1.06  # tau-panel growth; resolves t log(tau) up to t_max

    def __init__(self, ell: int, window: Window, sigma: float = 2.0,
                 t_max: float | None = None, tol: float = 1e-10):
        self.ell = ell
        self.kappa = (2 * ell - 1) / 4.0
        if sigma >= self.kappa + 1.0:
            raise ValueError(f"abscissa {sigma} crosses the pole line at {self.kappa + 1}")
        self.window = window
        self.sigma = sigma
        self.tol = tol
        self.cache: dict[float, float] = {}
        self.max_imag_residual = 0.0
        self._xg, self._wg = np.polynomial.legendre.leggauss(self.GL_ORDER)
        goal = t_max if t_max is not None else self.DEFAULT_T_MAX
        self._tau, self._tauw = self._window_nodes(window, goal)
        self._logtau = np.log(self._tau)
        self._logw = window.log_values(self._tau)
        self.t_max = 0.0
        self.nodes = np.empty(0)
        self._tw = np.empty(0)
        self._F = np.empty(0, dtype=np.complex128)
        self._F_neg = None
        self._extend(goal, adaptive=t_max is None)

    def _window_nodes(self, w: Window, t_goal: float):
        # panel growth matched to the t*log(tau) oscillation: a factor-r
        # panel sees phase (r - 1) * t, kept inside the GL-16 budget
        ratio = 1.0 + min(0.1, 18.0 / max(t_goal, 1.0))
        span = w.b - w.a
        edges = [1e-3]
        while edges[-1] < 0.5:
            edges.append(min(0.5, edges[-1] * ratio))
        taus, wts = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            mid, hw = 0.5 * (lo + hi), 0.5 * (hi - lo)
            taus.append(mid + hw * self._xg)
            wts.append(hw * self._wg)
        u = np.concatenate(taus)
        uw = np.concatenate(wts)
        u = np.concatenate([u, 1.0 - u])
        uw = np.concatenate([uw, uw])
        return w.a + span * u, span * uw

    def _mellin_rows(self, ts: np.ndarray) -> np.ndarray:
        """what(sigma + i t) for an array of t, overflow-safe."""
        base = np.exp(self._logw + (self.sigma - 1.0) * self._logtau) * self._tauw
        out = np.empty(len(ts), dtype=np.complex128)
        for i0 in range(0, len(ts), 1024):
            chunk = ts[i0 : i0 + 1024]
            out[i0 : i0 + 1024] = np.exp(1j * np.outer(chunk, self._logtau)) @ base
        return out

    def _extend(self, new_t_max: float, adaptive: bool):
        """Grow the t-grid to new_t_max (or until panels are negligible)."""
        t0 = self.t_max
        blocks_t, blocks_w = [], []
        lo = t0
        while lo < new_t_max - 1e-12:
            hi = min(lo + self.PANEL, new_t_max)
            mid, hw = 0.5 * (lo + hi), 0.5 * (hi - lo)
            blocks_t.append(mid + hw * self._xg)
            blocks_w.append(hw * self._wg)
            lo = hi
        if not blocks_t:
            return
        ts = np.concatenate(blocks_t)
        tw = np.concatenate(blocks_w)
        ss = self.sigma + 1j * ts
        F = self._mellin_rows(ts) * np.exp(loggamma(self.kappa + 1 - ss) - loggamma(self.kappa + ss))
        if adaptive:
            # drop trailing panels once their mass can no longer matter,
            # even through the (4 pi^2 y)^(sigma-1) amplification
            mass = np.abs(F) * tw
            per_panel = mass.reshape(-1, self.GL_ORDER).sum(axis=1)
            scale = float(np.sum(np.abs(self._F) * self._tw)) if len(self._F) else 0.0
            total = scale + float(np.sum(mass))
            keep = len(per_panel)
            quiet = 0
            for i, pm in enumerate(per_panel):
                if pm < 1e-19 * max(total, 1e-30):
                    quiet += 1
                    if quiet >= 3:
                        keep = i + 1
                        break
                else:
                    quiet = 0
            ts, tw, F = ts[: keep * self.GL_ORDER], tw[: keep * self.GL_ORDER], F[: keep * self.GL_ORDER]
        self.nodes = np.concatenate([self.nodes, ts])
        self._tw = np.concatenate([self._tw, tw])
        self._F = np.concatenate([self._F, F])
        self.t_max = float(self.nodes[-1] + self.PANEL / 2)

    def _l1(self) -> float:
        return float(np.sum(np.abs(self._F) * self._tw))

    def noise_floor(self, y: float) -> float:
        """Roundoff-floor estimate for the returned value at this argument."""
        pref = (4 * math.pi ** 2 * y) ** (self.sigma - 1.0) / (2 * math.pi)
        return 8.0 * np.finfo(float).eps * self._l1() * pref

    def values(self, ys) -> np.ndarray:
        """Kernel values for an array of positive arguments."""
        ys = np.asarray(ys, dtype=np.float64)
        if np.any(ys <= 0):
            raise ValueError("kernel arguments must be positive")
        out = np.empty(len(ys))
        FW = self._F * self._tw
        for i0 in range(0, len(ys), 256):
            chunk = ys[i0 : i0 + 256]
            lr = np.log(4 * math.pi ** 2 * chunk)
            osc = np.exp(1j * np.outer(lr, self.nodes))
            half = osc @ FW
            integral = 2.0 * half.real * np.exp(self.sigma * lr)
            out[i0 : i0 + 256] = integral / (2 * math.pi) / (2 * math.pi * chunk)
        return out

    def value(self, y: float) -> float:
        y = float(y)
        hit = self.cache.get(y)
        if hit is None:
            hit = float(self.values(np.array([y]))[0])
            self.cache[y] = hit
        return hit

    def value_with_imag(self, y: float) -> complex:
        """Full symmetric-contour evaluation; the imaginary part is a noise probe.

        The negative-t half runs on a half-panel-shifted node set, so the
        two halves are numerically independent and the imaginary part
        genuinely measures quadrature noise instead of vanishing by the
        structural conjugation symmetry.
        """
        if self._F_neg is None:
            blocks_t, blocks_w = [], []
            lo = self.PANEL / 2
            while lo < self.t_max:
                hi = min(lo + self.PANEL, self.t_max)
                mid, hw = 0.5 * (lo + hi), 0.5 * (hi - lo)
                blocks_t.append(mid + hw * self._xg)
                blocks_w.append(hw * self._wg)
                lo = hi
            # the stub panel [0, PANEL/2] on the negative side
            blocks_t.insert(0, self.PANEL / 4 + self.PANEL / 4 * self._xg)
            blocks_w.insert(0, self.PANEL / 4 * self._wg)
            tneg = np.concatenate(blocks_t)
            wneg = np.concatenate(blocks_w)
            ss = self.sigma - 1j * tneg
            rows = self._mellin_rows(-tneg)
            self._F_neg = (tneg, wneg,
                           rows * np.exp(loggamma(self.kappa + 1 - ss) - loggamma(self.kappa + ss)))
        tneg, wneg, Fneg = self._F_neg
        lr = math.log(4 * math.pi ** 2 * y)
        pos = np.exp((self.sigma + 1j * self.nodes) * lr)
        neg = np.exp((self.sigma - 1j * tneg) * lr)
        total = np.sum(self._F * self._tw * pos) + np.sum(Fneg * wneg * neg)
        val = complex(total) / (2 * math.pi) / (2 * math.pi * y)
        self.max_imag_residual = max(self.max_imag_residual, abs(val.imag))
        return val


@dataclass
class FrickePair:
    """A form together with its reflected partner and metadata."""

    f: QSeries
    f0: QSeries
    level_n: int
    ell: int
    scalar: complex
    _kernels: dict = field(default_factory=dict, repr=False)

    def kernel(self, w: Window, sigma: float = 2.0, t_max: float | None = None) -> BKernel:
        key = (id(w), sigma, t_max)
        if key not in self._kernels:
            self._kernels[key] = BKernel(self.ell, w, sigma=sigma, t_max=t_max)
        return self._kernels[key]

    def kernel_values(self, w: Window, ys: np.ndarray) -> np.ndarray:
        """Kernel over an array of arguments (default abscissa grid)."""
        return self.kernel(w).values(np.asarray(ys, dtype=np.float64))


def make_fricke_pair(truncation_f: int, truncation_f0: int | None = None) -> FrickePair:
    """The reference pair: theta*Delta and kappa * theta(z) Delta(4z)."""
    if truncation_f0 is None:
        truncation_f0 = max(2000, truncation_f)
    f = builtin_form("theta_delta", truncation_f)
    f0 = builtin_form("theta_delta_fricke", truncation_f0)
    return FrickePair(f=f, f0=f0, level_n=1, ell=12, scalar=fricke_scalar_cached())


def b_kernel(ctx: FrickePair, w: Window, y: float, sigma: float = 2.0,
             t_max: float | None = None) -> float:
    """Kernel value at y > 0 for the pair's weight, cached per (window, abscissa)."""
    return ctx.kernel(w, sigma=sigma, t_max=t_max).value(y)


@dataclass
class VoronoiReport:
    lhs: complex
    rhs: complex
    abs_residual: float
    rel_residual: float
    q: int
    u: int
    x: float
    m_used: int
    y_cut: float
    t_max: float
    converged: bool

    def to_dict(self) -> dict:
        return {"lhs": [self.lhs.real, self.lhs.imag],
                "rhs": [self.rhs.real, self.rhs.imag],
                "abs_residual": self.abs_residual, "rel_residual": self.rel_residual,
                "q": self.q, "u": self.u, "x": self.x, "m_used": self.m_used,
                "y_cut": self.y_cut, "t_max": self.t_max, "converged": self.converged}


def voronoi_check(ctx: FrickePair, w: Window, u: int, q: int, x: float,
                  m_max: int | None = None, t_max: float | None = None,
                  tol: float = 5e-8) -> VoronoiReport:
    """Both sides of the dual summation identity, computed independently.

    LHS: the finite twisted smooth sum over n.  RHS: the reflected sum over
    the partner's coefficients against the kernel.  When m_max is not
    forced, the dual sum extends in blocks until increments fall below the
    absolute tolerance; running out of partner coefficients first raises
    InsufficientTruncationError rather than silently truncating.
    """
    n4 = 4 * ctx.level_n
    if q % 2 == 0 or q < 1:
        raise ValueError("q must be odd")
    if math.gcd(q, n4 * u) != 1:
        raise ValueError("require gcd(q, 4N u) = 1")
    f, f0 = ctx.f, ctx.f0
    if f.truncation < x - 1:
        raise InsufficientTruncationError("f truncation below x")

    n_hi = min(f.truncation, int(math.ceil(x)))
    ns = np.arange(1, n_hi + 1, dtype=np.int64)
    phase = np.exp(2j * math.pi * ((u * ns) % q) / q)
    lhs_terms = f.float_coeffs[1 : n_hi + 1] * phase * w(ns.astype(np.float64) / x)
    lhs = complex(np.sum(lhs_terms))

    if t_max is not None:
        ctx.kernel(w, t_max=t_max)  # pin the near-field grid resolution
    y0 = n4 * q * q / x
    inv4u = pow((n4 * u) % q, -1, q)
    pref = omega(u, q, ctx.ell) * x / (math.sqrt(n4) * q)

    support = np.array(f0.support(), dtype=np.int64)
    support = support[support >= 1]
    forced = m_max is not None
    if forced:
        support = support[support <= m_max]
    if len(support) == 0:
        raise InsufficientTruncationError("f0 carries no usable coefficients")
    a0 = f0.float_coeffs
    phases0 = np.exp(-2j * math.pi * ((inv4u * support) % q) / q)

    rhs_partial = 0.0 + 0.0j
    converged = forced
    block = 512.0
    block_edges = np.arange(0.0, support[-1] / y0 + block, block)
    used = 0
    quiet = 0
    last_y = 0.0
    for lo, hi in zip(block_edges[:-1], block_edges[1:]):
        sel = (support / y0 > lo) & (support / y0 <= hi)
        if not np.any(sel):
            if not forced and lo > 0:
                quiet += 1
                if quiet >= 2 and used:
                    converged = True
                    break
            continue
        ms = support[sel]
        inc = complex(np.sum(a0[ms] * phases0[sel] * ctx.kernel_values(w, ms / y0)))
        rhs_partial += inc
        used += len(ms)
        last_y = float(ms[-1] / y0)
        if not forced:
            scale = max(abs(lhs), abs(pref) * abs(rhs_partial))
            if abs(inc) * abs(pref) < tol * max(scale, 1e-12):
                quiet += 1
                if quiet >= 2:
                    converged = True
                    break
            else:
                quiet = 0
    if not forced and not converged:
        raise InsufficientTruncationError(
            f"dual sum not converged by m = {support[-1]} (need a longer f0 expansion)")
    rhs = pref * rhs_partial
    absres = abs(lhs - rhs)
    relres = absres / max(abs(lhs), abs(rhs), 1e-300)
    return VoronoiReport(lhs=lhs, rhs=rhs, abs_residual=absres, rel_residual=relres,
                         q=q, u=u, x=float(x), m_used=used, y_cut=last_y,
                         t_max=ctx.kernel(w).t_max, converged=converged)


def salie_side_sum(ctx: FrickePair, w: Window, x: float, p: int, a: int,
                   m_max: int, use_closed: bool = True) -> complex:
    """The reflected class sum eps_p^-(2l+1)/sqrt(Y) sum a0(m) Sal_p((4N)^-1 m, a) B(m/Y).

    Summed to m_max with the full Salie values (the two-term closed form
    where p does not divide m, the Gauss-sum value (a/p) eps_p where it
    does), so the truncation point is the only approximation.
    """
    ctxp = PrimeCtx(p)
    n4 = 4 * ctx.level_n
    if p % 2 == 0 or not is_prime(p) or n4 % p == 0:
        raise ValueError("p must be an odd prime not dividing 4N")
    if a % p == 0:
        raise ValueError("class a must be invertible mod p")
    if ctx.f0.truncation < m_max:
        raise InsufficientTruncationError("f0 truncation below m_max")
    y_big = n4 * p * p / x
    inv4n = pow(n4, -1, p)
    a0 = ctx.f0.float_coeffs
    ms = np.array([m for m in ctx.f0.support() if 1 <= m <= m_max], dtype=np.int64)
    kern = ctx.kernel(w)
    fresh = np.array([m for m in ms if float(m / y_big) not in kern.cache])
    if len(fresh):
        for m, v in zip(fresh, kern.values(fresh / y_big)):
            kern.cache[float(m / y_big)] = float(v)
    kvals = np.array([kern.cache[float(m / y_big)] for m in ms])
    total = 0.0 + 0.0j
    sal_cache: dict[int, complex] = {}
    for m, kv in zip(ms, kvals):
        r = int(inv4n * m) % p
        sal = sal_cache.get(r)
        if sal is None:
            if r == 0:
                sal = legendre(a, p) * eps(p)
            elif use_closed:
                uv = (r * a) % p
                if legendre(uv, p) == 1:
                    y0 = ctxp.sqrt_table[uv]
                    sal = legendre(a, p) * eps(p) * (ep(2 * y0, p) + ep(-2 * y0, p))
                else:
                    sal = 0.0 + 0.0j
            else:
                from .modarith import salie_direct

                sal = salie_direct(r, a, ctxp)
            sal_cache[r] = sal
        if sal:
            total += a0[m] * sal * kv
    return eps(p) ** (-(2 * ctx.ell + 1)) * total / math.sqrt(y_big)


@dataclass
class RearrangeReport:
    e_bucket: float
    e_salie: float
    residual: float
    y_big: float
    eta: float
    m_cut: int
    ratio_to_y3: float
    sa_zero_flags: int

    def to_dict(self) -> dict:
        return {"e_bucket": self.e_bucket, "e_salie": self.e_salie,
                "residual": self.residual, "Y": self.y_big, "eta": self.eta,
                "m_cut": self.m_cut, "ratio_to_y3": self.ratio_to_y3,
                "sa_zero_flags": self.sa_zero_flags}


def rearranged_e_check(ctx: FrickePair, w: Window, x: float, p: int, a: int,
                       eta: float = 0.1, e_value: float | None = None) -> RearrangeReport:
    """Compare the bucketed E(x, p, a) with its Salie-side rearrangement.

    The reflected sum runs over 1 <= m <= Y^(1+eta) with Y = 4N p^2/x, under
    the hard range condition Y^(1+eta) < p.  The report carries the
    residual and its ratio to Y^-3 (the desk-scale comparison for the
    formula's unquantified error term).
    """
    n4 = 4 * ctx.level_n
    y_big = n4 * p * p / x
    m_cut = int(y_big ** (1.0 + eta))
    if eta <= 0:
        raise ValueError("eta must be positive")
    if m_cut >= p:
        raise ValueError(f"range condition violated: Y^(1+eta) = {m_cut} >= p = {p}")
    if a % p == 0 or (n4 * a) % p == 0:
        raise ValueError("need p coprime to 4 N a")
    if is_prime(p) is False or p % 2 == 0:
        raise ValueError("p must be an odd prime")
    if ctx.f0.truncation < m_cut:
        raise InsufficientTruncationError("f0 truncation below Y^(1+eta)")

    if e_value is None:
        from .progsums import class_sum_residual

        raw, _ = class_sum_residual(ctx.f, w, x, p, a)
        e_value = raw / math.sqrt(x / p)

    ctxp = PrimeCtx(p)
    kern = ctx.kernel(w)
    inv_n = pow(ctx.level_n, -1, p)
    a0 = ctx.f0.float_coeffs
    total = 0.0
    zero_flags = 0
    for m in ctx.f0.support():
        if m < 1 or m > m_cut:
            continue
        arg = (inv_n * m * a) % p
        if arg == 0:
            zero_flags += 1
            continue
        if legendre(arg, p) != 1:
            continue
        y0 = ctxp.sqrt_table[arg]
        total += a0[m] * 2.0 * math.cos(2 * math.pi * y0 / p) * kern.value(m / y_big)
    eps_fac = eps(p) ** (-2 * ctx.ell)
    e_salie = float((eps_fac * legendre(a, p) * total).real) / math.sqrt(y_big)
    residual = abs(e_value - e_salie)
    return RearrangeReport(e_bucket=e_value, e_salie=e_salie, residual=residual,
                           y_big=y_big, eta=eta, m_cut=m_cut,
                           ratio_to_y3=residual * y_big ** 3, sa_zero_flags=zero_flags)
