"""Three-body radial integrals over Hylleraas coordinates.

All integrals here are over the triangle domain ``|r1 - r2| <= r12 <= r1 + r2``
with measure ``dr1 dr2 dr12`` (no volume element):

    Gamma(l, m, n; alpha, beta, gamma)
        = int r1**l r2**m r12**n exp(-alpha r1 - beta r2 - gamma r12)

The generating integral (l = m = n = 0) is ``2 / (p q s)`` with the pairwise
sums ``p = beta + gamma``, ``q = alpha + gamma``, ``s = alpha + beta``.
Each ``-d/dalpha`` hits ``q`` and ``s``, ``-d/dbeta`` hits ``p`` and ``s``
and ``-d/dgamma`` hits ``p`` and ``q``; expanding the products gives a finite
sum of strictly positive terms ``c / (p**i q**j s**k)``.  The term tables are
built once per power triple and evaluated in any arithmetic that supports
``+`` and ``*`` (floats, mpmath, flint ``arb`` or :class:`~critq.ddfloat.DD`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy import special

from .errors import DomainError, NonConvergenceError, UnsupportedPowerError

MAX_POWER = 8
DEFAULT_PRECISION_BITS = 128


@dataclass(frozen=True)
class ExponentTriple:
    """Coefficients of r1, r2 and r12 in the exponent."""

    alpha: float
    beta: float
    gamma: float

    def validate(self) -> "ExponentTriple":
        a, b, g = self.alpha, self.beta, self.gamma
        if not (a + b > 0 and a + g > 0 and b + g > 0):
            raise DomainError(
                f"pairwise exponent sums must be positive, got {self!r}")
        return self

    def pairwise(self) -> tuple[float, float, float]:
        """Return ``(p, q, s) = (beta+gamma, alpha+gamma, alpha+beta)``."""
        return (self.beta + self.gamma, self.alpha + self.gamma, self.alpha + self.beta)


@dataclass(frozen=True)
class PowerTriple:
    l: int
    m: int
    n: int

    def validate(self) -> "PowerTriple":
        for v in (self.l, self.m, self.n):
            if int(v) != v or v < 0:
                raise DomainError(f"powers must be non-negative integers, got {self!r}")
            if v > MAX_POWER:
                raise UnsupportedPowerError(
                    f"power {v} exceeds the implemented maximum {MAX_POWER}")
        return self


def _as_exponents(e) -> ExponentTriple:
    return e if isinstance(e, ExponentTriple) else ExponentTriple(*e)


def _as_powers(p) -> PowerTriple:
    return p if isinstance(p, PowerTriple) else PowerTriple(*p)


@lru_cache(maxsize=None)
def gamma_terms(l: int, m: int, n: int) -> tuple[tuple[int, int, int, int], ...]:
    """Closed form of Gamma(l, m, n) as ``((c, i, j, k), ...)``.

    The integral equals ``sum(c / (p**i * q**j * s**k))``.  Coefficients are
    exact positive integers; i, j, k >= 1.
    """
    PowerTriple(l, m, n).validate()
    acc: dict[tuple[int, int, int], int] = {}
    for lq in range(l + 1):
        ls = l - lq
        for mp in range(m + 1):
            ms = m - mp
            for np_ in range(n + 1):
                nq = n - np_
                ip, iq, is_ = mp + np_, lq + nq, ls + ms
                c = (2 * math.comb(l, lq) * math.comb(m, mp) * math.comb(n, np_)
                     * math.factorial(ip) * math.factorial(iq) * math.factorial(is_))
                key = (ip + 1, iq + 1, is_ + 1)
                acc[key] = acc.get(key, 0) + c
    return tuple((c, i, j, k) for (i, j, k), c in sorted(acc.items()))


def max_reciprocal_power(powers: Sequence[tuple[int, int, int]]) -> int:
    return max(max(i, j, k) for p in powers for _, i, j, k in gamma_terms(*p))


class ReciprocalPowers:
    """Lazily cached ``x**-k`` for k >= 1, in whatever arithmetic ``x`` uses."""

    def __init__(self, x, reciprocal: Callable | None = None):
        first = reciprocal(x) if reciprocal is not None else 1 / x
        self._cache = [None, first]

    def __getitem__(self, k: int):
        while len(self._cache) <= k:
            self._cache.append(self._cache[-1] * self._cache[1])
        return self._cache[k]


def gamma_from_reciprocals(powers, inv_p: ReciprocalPowers, inv_q: ReciprocalPowers,
                           inv_s: ReciprocalPowers):
    """Evaluate Gamma(powers) given cached reciprocal powers of (p, q, s)."""
    total = None
    for c, i, j, k in gamma_terms(*powers):
        term = inv_p[i] * inv_q[j] * inv_s[k] * c
        total = term if total is None else total + term
    return total


def base_generating_integral(e, prec: int = DEFAULT_PRECISION_BITS) -> mpmath.mpf:
    """``2 / ((alpha+beta)(beta+gamma)(gamma+alpha))`` at ``prec`` bits."""
    e = _as_exponents(e).validate()
    with mpmath.workprec(prec):
        p, q, s = (mpmath.mpf(x) for x in e.pairwise())
        return +(2 / (p * q * s))


def gamma_integral(powers, e, prec: int = DEFAULT_PRECISION_BITS) -> mpmath.mpf:
    """Exact Gamma(l, m, n; alpha, beta, gamma) at ``prec`` bits."""
    p = _as_powers(powers).validate()
    e = _as_exponents(e).validate()
    with mpmath.workprec(prec + 10):
        pp, qq, ss = (mpmath.mpf(x) for x in e.pairwise())
        value = gamma_from_reciprocals(
            (p.l, p.m, p.n), ReciprocalPowers(pp), ReciprocalPowers(qq), ReciprocalPowers(ss))
    with mpmath.workprec(prec):
        return +value


# ---------------------------------------------------------------------------
# brute-force quadrature

def _graded_breaks(h0: float, length: float) -> np.ndarray:
    breaks = [0.0]
    h = h0
    while breaks[-1] + h < length:
        breaks.append(breaks[-1] + h)
        h *= 2.0
    breaks.append(length)
    return np.array(breaks)


def _composite_rule(breaks: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    return (a + half * (1 + x)).ravel(), (half * w).ravel()


def _tail_length(rate: float, degree: int, tol: float) -> float:
    # x**degree * exp(-rate x) tail mass below tol relative to the full mass
    return float(special.gammainccinv(degree + 1, tol)) / rate


def _region_integral(l, m, n, a, b, g, order, refine, tol):
    """One half of the triangle domain, r1 >= r2, in (r2, d = r1 - r2, t)."""
    rate_d = a + g
    rate_r = min(a + b, a + b + 2 * g)
    degree = l + m + n + 2
    len_d = _tail_length(rate_d, degree, tol)
    len_r = _tail_length(rate_r, degree, tol)
    scale = 0.5 / 2.0 ** refine / max(abs(a), abs(b), abs(g), rate_d, rate_r)
    rd, wd = _composite_rule(_graded_breaks(scale, len_d), order)
    rr, wr = _composite_rule(_graded_breaks(scale, len_r), order)
    # inner direction: exp(-2 g r2 t) is steep near one end of [0, 1]
    tb = 1.0 - _graded_breaks(2.0 ** -(14 + refine), 1.0)[::-1]
    tb = np.unique(np.concatenate([tb, _graded_breaks(2.0 ** -(14 + refine), 1.0)]))
    tt, wt = _composite_rule(tb, order)

    d = rd[:, None]
    t = tt[None, :]
    w_dt = wd[:, None] * wt[None, :]
    total = 0.0
    evaluations = 0
    for r2, w2 in zip(rr, wr):
        r1 = r2 + d
        r12 = d + 2.0 * r2 * t
        log_f = (-a * r1 - b * r2 - g * r12)
        f = np.exp(log_f) * (r1 ** l) * (r2 ** m) * (r12 ** n) * (2.0 * r2)
        total += w2 * float(np.sum(f * w_dt))
        evaluations += f.size
    return total, evaluations


def quadrature_oracle(powers, e, rel_tol: float = 1e-10,
                      max_evaluations: int = 200_000_000) -> float:
    """Brute-force numerical value of Gamma(powers; e) to relative ``rel_tol``.

    Independent of the closed form: nested composite Gauss-Legendre over the
    triangle domain split along r1 = r2, outer directions truncated where the
    exponential tail drops below ``rel_tol``.  Successive refinements are
    compared until they agree.
    """
    if not rel_tol >= 1e-12:
        raise DomainError(f"rel_tol must be >= 1e-12, got {rel_tol}")
    p = _as_powers(powers).validate()
    e = _as_exponents(e).validate()
    a, b, g = float(e.alpha), float(e.beta), float(e.gamma)
    tail_tol = rel_tol * 1e-3

    def evaluate(order, refine):
        ia, na = _region_integral(p.l, p.m, p.n, a, b, g, order, refine, tail_tol)
        ib, nb = _region_integral(p.m, p.l, p.n, b, a, g, order, refine, tail_tol)
        return ia + ib, na + nb

    used = 0
    previous, cost = evaluate(10, 0)
    used += cost
    for order, refine in ((14, 0), (14, 1), (20, 1), (20, 2), (28, 2)):
        current, cost = evaluate(order, refine)
        used += cost
        if abs(current - previous) <= rel_tol * abs(current):
            return current
        if used > max_evaluations:
            break
        previous = current
    raise NonConvergenceError(
        f"quadrature did not reach rel_tol={rel_tol} for {p}, {e} "
        f"within {max_evaluations} evaluations")
