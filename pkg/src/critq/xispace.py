"""Inverse-charge (xi = 1/Z) form of a threshold-locked Puiseux model.

With ``E~(xi) = xi**2 E(1/xi)`` and ``t = xi_cr - xi`` one has
``Z - z_cr = t / (xi_cr (xi_cr - t))``, so a term ``B (Z - z_cr)**a`` becomes

    B xi_cr**(2 - 2a) t**a (1 - t/xi_cr)**(2 - a)

Expanding the binomial and collecting powers of ``t`` gives the xi-space
coefficients.  All maps are rational in ``xi_cr`` and the B's, so exact
inputs (``Fraction``) give exact outputs and :func:`from_xi_space` inverts
:func:`to_xi_space` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import mpmath

from .errors import DomainError, ValidationError
from .puiseux import (STANDARD_EXPONENTS, THRESHOLD_LOCKED, PuiseuxModel, parse_exponents,
                      threshold_constant)

XI_POWERS = STANDARD_EXPONENTS


def _binom(r: Fraction, j: int) -> Fraction:
    out = Fraction(1)
    for i in range(j):
        out = out * (r - i) / (i + 1)
    return out


def _ipow(x, k: int):
    # integer power that stays exact for Fraction / mpf inputs
    return x ** k if k >= 0 else 1 / (x ** (-k))


def _scalar(c: Fraction, x):
    """Exact rational constant times x, in x's arithmetic."""
    if isinstance(x, (Fraction, int)):
        return c * x
    if isinstance(x, float):
        return float(c) * x
    return x * c.numerator / c.denominator


@dataclass(frozen=True)
class XiModel:
    """``E~(xi) = sum_p c_p (xi_cr - xi)**p`` over ``powers``."""

    xi_cr: object
    powers: tuple[Fraction, ...]
    coefficients: tuple
    threshold_locked: bool = True

    def coefficient(self, power) -> object:
        p = Fraction(power)
        return self.coefficients[self.powers.index(p)] if p in self.powers else 0


def _contribution(b, alpha: Fraction, power: Fraction, xi_cr):
    """Coefficient of t**power contributed by the term B (Z - z_cr)**alpha."""
    j = power - alpha
    if j < 0 or j.denominator != 1:
        return None
    j = int(j)
    base = _ipow(xi_cr, int(2 - 2 * alpha))
    term = _scalar(_binom(2 - alpha, j), base * _ipow(-xi_cr, -j) if j else base)
    return term * b


def _validate_exponents(exponents) -> None:
    for a in exponents:
        if (2 * a).denominator != 1:
            raise ValidationError(f"xi-space maps need integer or half-integer exponents, got {a}")
        if a not in XI_POWERS:
            raise ValidationError(f"exponent {a} is outside the supported set {XI_POWERS}")


def to_xi_space(model: PuiseuxModel, xi_cr=None) -> XiModel:
    """Map a threshold-locked model to its expansion about ``xi_cr = 1/z_cr``.

    The constant term is exactly ``-1/2``; the 3/2 coefficient is
    ``B_3/2 / xi_cr``.  Pass ``xi_cr`` explicitly to keep exact arithmetic.
    """
    if model.constraint_mode != THRESHOLD_LOCKED:
        raise ValidationError("xi-space transform needs a threshold-locked model")
    _validate_exponents(model.exponents)
    if xi_cr is None:
        z = model.z_cr
        xi_cr = Fraction(1) / z if isinstance(z, (Fraction, int)) else 1 / z
    coeffs = []
    for power in XI_POWERS:
        if power == 0:
            coeffs.append(Fraction(-1, 2) if isinstance(xi_cr, Fraction) else -0.5 * (xi_cr / xi_cr))
            continue
        total = 0
        for a, b in zip(model.exponents, model.coefficients):
            c = _contribution(b, a, power, xi_cr)
            if c is not None:
                total = total + c
        coeffs.append(total)
    return XiModel(xi_cr, XI_POWERS, tuple(coeffs), True)


def from_xi_space(xi: XiModel, exponents=STANDARD_EXPONENTS) -> PuiseuxModel:
    """Invert :func:`to_xi_space` (triangular in increasing powers)."""
    exponents = parse_exponents(exponents)
    _validate_exponents(exponents)
    x = xi.xi_cr
    z_cr = Fraction(1) / x if isinstance(x, Fraction) else 1 / x
    b = {Fraction(0): threshold_constant(z_cr)}
    for power in exponents[1:]:
        known = 0
        for a, val in b.items():
            c = _contribution(val, a, power, x)
            if c is not None:
                known = known + c
        own = _ipow(x, int(2 - 2 * power))
        b[power] = (xi.coefficient(power) - known) / own
    return PuiseuxModel(z_cr, exponents, tuple(b[a] for a in exponents), THRESHOLD_LOCKED)


def eval_xi(xi: XiModel, x, prec: int = 128) -> float:
    with mpmath.workprec(prec):
        t = mpmath.mpf(_f(xi.xi_cr)) - mpmath.mpf(x)
        if t < 0:
            raise DomainError(f"xi={x} exceeds xi_cr={xi.xi_cr}")
        total = mpmath.mpf(0)
        for p, c in zip(xi.powers, xi.coefficients):
            total += mpmath.mpf(_f(c)) * (t ** (mpmath.mpf(p.numerator) / p.denominator) if p else 1)
        return float(total)


def _f(x):
    return mpmath.mpf(x.numerator) / x.denominator if isinstance(x, Fraction) else mpmath.mpf(x)


def binomial_three_halves(n: int):
    """Coefficient of x**n in (1 - x)**(3/2), by the multiplicative recurrence."""
    c = mpmath.mpf(1)
    for k in range(n):
        c = c * (k - mpmath.mpf(3) / 2) / (k + 1)
    return c


def en_large_n(xi: XiModel, n: int, prec: int = 128) -> float:
    """Large-order 1/Z coefficient generated by the branch point at ``xi_cr``.

    Three-term 1/n expansion built from the 3/2, 5/2 and 7/2 xi-space
    coefficients (equivalently B_3/2, B_5/2 - xi_cr B_3/2 / 2 and
    B_7/2 + xi_cr B_5/2 / 2 - xi_cr^2 B_3/2 / 8).
    """
    if int(n) != n or n < 2:
        raise DomainError(f"n must be an integer >= 2, got {n}")
    n = int(n)
    with mpmath.workprec(prec):
        x = _f(xi.xi_cr)
        b3 = _f(xi.coefficient(Fraction(3, 2))) * x
        second = _f(xi.coefficient(Fraction(5, 2))) * x ** 3
        third = _f(xi.coefficient(Fraction(7, 2))) * x ** 5
        bracket = (b3 + second * 5 / (5 - 2 * n) / x
                   + third * 35 / ((5 - 2 * n) * (7 - 2 * n)) / x ** 2)
        value = binomial_three_halves(n) * x ** (-(n - mpmath.mpf(1) / 2)) * bracket
        return float(value)


def en_table(xi: XiModel, ns: Sequence[int]) -> list[tuple[int, float]]:
    return [(int(n), en_large_n(xi, n)) for n in ns]
