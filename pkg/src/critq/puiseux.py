"""Puiseux-series fits of E(Z) near a critical charge.

Model: ``E(Z) = sum_n B_n (Z - z_cr)**alpha_n`` with ``alpha_0 = 0`` and
strictly increasing exponents.  For a trial ``z_cr`` the coefficients follow
from a weighted linear least-squares problem; ``z_cr`` itself is found by
golden-section search on the weighted residual sum of squares.  In
threshold-locked mode the constant is pinned to the one-electron threshold
``-z_cr**2 / 2`` and eliminated before the linear solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import mpmath

from .errors import DomainError, FitError, ValidationError
from .series import EnergySeries

THRESHOLD_LOCKED = "threshold-locked"
FREE_CONSTANT = "free-constant"
MODES = (THRESHOLD_LOCKED, FREE_CONSTANT)

# 0, 1, 3/2, 2, 5/2, 3, 7/2: no square-root term
STANDARD_EXPONENTS = tuple(Fraction(k, 2) for k in (0, 2, 3, 4, 5, 6, 7))

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


def parse_exponent(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(float(x)).limit_denominator(1000)


def parse_exponents(xs) -> tuple[Fraction, ...]:
    if isinstance(xs, str):
        xs = [s for s in xs.split(",") if s.strip()]
    return tuple(parse_exponent(x) for x in xs)


def threshold_constant(z_cr):
    """One-electron threshold energy ``-z_cr**2 / 2`` in the arithmetic of ``z_cr``."""
    return -(z_cr * z_cr) / 2


@dataclass(frozen=True)
class PuiseuxModel:
    z_cr: float
    exponents: tuple[Fraction, ...]
    coefficients: tuple
    constraint_mode: str = FREE_CONSTANT
    residual_rms: float = 0.0
    residuals: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "exponents", parse_exponents(self.exponents))
        object.__setattr__(self, "coefficients", tuple(self.coefficients))
        self.validate()

    def validate(self) -> "PuiseuxModel":
        ex = self.exponents
        if not ex or ex[0] != 0:
            raise ValidationError("the first exponent must be 0")
        if any(b <= a for a, b in zip(ex, ex[1:])):
            raise ValidationError(f"exponents must be strictly increasing: {ex}")
        if len(self.coefficients) != len(ex):
            raise ValidationError("one coefficient per exponent is required")
        if self.constraint_mode not in MODES:
            raise ValidationError(f"unknown constraint mode {self.constraint_mode!r}")
        if self.constraint_mode == THRESHOLD_LOCKED:
            if self.coefficients[0] != threshold_constant(self.z_cr):
                raise ValidationError("threshold-locked model needs B_0 = -z_cr^2/2 exactly")
        return self

    @classmethod
    def threshold_locked(cls, z_cr, exponents, higher_coefficients, **kw) -> "PuiseuxModel":
        """Build a locked model from the coefficients of the non-constant terms."""
        return cls(z_cr, exponents, (threshold_constant(z_cr),) + tuple(higher_coefficients),
                   THRESHOLD_LOCKED, **kw)

    def coefficient(self, exponent) -> object:
        e = parse_exponent(exponent)
        return self.coefficients[self.exponents.index(e)] if e in self.exponents else 0


def eval_model(model: PuiseuxModel, Z, prec: int | None = None):
    """``sum B_n (Z - z_cr)**alpha_n``; float unless ``prec`` (bits) is given."""
    work = prec or 128
    with mpmath.workprec(work + 10):
        t = mpmath.mpf(Z) - mpmath.mpf(model.z_cr)
        if t < 0:
            raise DomainError(f"Z={Z} lies below the critical charge {model.z_cr}")
        total = mpmath.mpf(0)
        for a, b in zip(model.exponents, model.coefficients):
            if a == 0:
                total += _to_mpf(b)
            elif t != 0:
                total += _to_mpf(b) * mpmath.exp(mpmath.mpf(a.numerator) / a.denominator * mpmath.log(t))
    if prec is None:
        return float(total)
    with mpmath.workprec(prec):
        return +total


def _to_mpf(x):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def sample_model(model: PuiseuxModel, charges: Sequence[float], label: str = "synthetic") -> EnergySeries:
    return EnergySeries.from_pairs(charges, [eval_model(model, z) for z in charges], label)


def _design(data: EnergySeries, z_cr, exponents, mode):
    """Rows of the weighted least-squares problem for a trial critical charge."""
    zc = mpmath.mpf(z_cr)
    free = exponents[1:] if mode == THRESHOLD_LOCKED else exponents
    b0 = threshold_constant(zc) if mode == THRESHOLD_LOCKED else mpmath.mpf(0)
    rows, rhs = [], []
    for p in data.points:
        t = mpmath.mpf(p.Z) - zc
        if t < 0:
            return None
        sw = mpmath.sqrt(mpmath.mpf(p.weight))
        logt = mpmath.log(t) if t > 0 else None
        row = []
        for a in free:
            if a == 0:
                row.append(sw)
            elif logt is None:
                row.append(mpmath.mpf(0))
            else:
                row.append(sw * mpmath.exp(mpmath.mpf(a.numerator) / a.denominator * logt))
        rows.append(row)
        rhs.append(sw * (mpmath.mpf(p.E) - b0))
    return rows, rhs, b0


def _linear_fit(data, z_cr, exponents, mode):
    d = _design(data, z_cr, exponents, mode)
    if d is None:
        return None
    rows, rhs, b0 = d
    A = mpmath.matrix(rows)
    y = mpmath.matrix(rhs)
    # column equilibration keeps the QR well scaled
    ncol = A.cols
    scale = []
    for j in range(ncol):
        s = mpmath.sqrt(mpmath.fsum(A[i, j] ** 2 for i in range(A.rows)))
        scale.append(s if s > 0 else mpmath.mpf(1))
        for i in range(A.rows):
            A[i, j] /= scale[j]
    if A.rows == A.cols:
        x = mpmath.lu_solve(A, y)
    else:
        x, _ = mpmath.qr_solve(A, y)
    coef = [x[j] / scale[j] for j in range(ncol)]
    fitted = A * x
    ssr = mpmath.fsum((y[i] - fitted[i]) ** 2 for i in range(A.rows))
    if mode == THRESHOLD_LOCKED:
        coef = [b0] + coef
    return coef, ssr


def _golden_min(f: Callable, lo, hi, xtol) -> tuple:
    a, b = mpmath.mpf(lo), mpmath.mpf(hi)
    c = b - (b - a) * _INV_PHI
    d = a + (b - a) * _INV_PHI
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - (b - a) * _INV_PHI
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) * _INV_PHI
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def _check_mode(mode):
    if mode not in MODES:
        raise ValidationError(f"unknown constraint mode {mode!r}; use one of {MODES}")


def fit_puiseux(data: EnergySeries, exponents=STANDARD_EXPONENTS, mode: str = THRESHOLD_LOCKED,
                zcr_bracket: tuple[float, float] = (0.85, 0.95), xtol: float = 1e-13,
                prec: int = 128) -> PuiseuxModel:
    """Least-squares Puiseux fit with the critical charge searched in a bracket.

    A degenerate bracket (``lo == hi``) fixes ``z_cr``.  ``xtol`` is the final
    width of the golden-section interval.
    """
    _check_mode(mode)
    exponents = parse_exponents(exponents)
    if not exponents or exponents[0] != 0 or any(b <= a for a, b in zip(exponents, exponents[1:])):
        raise ValidationError(f"exponents must start at 0 and increase strictly: {exponents}")
    data = data.successful()
    lo, hi = float(zcr_bracket[0]), float(zcr_bracket[1])
    if lo > hi:
        raise ValidationError(f"bad bracket {zcr_bracket}")
    fixed = lo == hi
    n_free = len(exponents) - (1 if mode == THRESHOLD_LOCKED else 0) + (0 if fixed else 1)
    if len(data) < n_free:
        raise FitError(f"underdetermined: {len(data)} points for {n_free} free parameters")

    with mpmath.workprec(prec):
        def ssr(z):
            r = _linear_fit(data, z, exponents, mode)
            return mpmath.inf if r is None else r[1]

        if fixed:
            z_best = mpmath.mpf(lo)
        else:
            z_best, f_best = _golden_min(ssr, lo, hi, xtol)
            if not mpmath.isfinite(f_best):
                raise FitError("no admissible critical charge in the bracket "
                               "(every trial lies above a data charge)")
            near_edge = min(z_best - lo, hi - z_best) <= 2 * xtol
            if near_edge:
                raise FitError(f"residual has no interior minimum in [{lo}, {hi}] "
                               f"(best z_cr={float(z_best):.8f} at the bracket edge)")
        fit = _linear_fit(data, z_best, exponents, mode)
        if fit is None:
            raise FitError(f"z_cr={float(z_best)} exceeds a data charge")
        coef, s = fit
        z_out = float(z_best)
        if mode == THRESHOLD_LOCKED:
            coef = [threshold_constant(z_out)] + [float(c) for c in coef[1:]]
        else:
            coef = [float(c) for c in coef]
        wsum = math.fsum(p.weight for p in data.points)
        model = PuiseuxModel(z_out, exponents, tuple(coef), mode, float(mpmath.sqrt(s / wsum)))
    residuals = tuple(p.E - eval_model(model, p.Z) for p in data.points)
    return PuiseuxModel(model.z_cr, model.exponents, model.coefficients, mode,
                        model.residual_rms, residuals)


@dataclass(frozen=True)
class ExponentEstimate:
    exponent: float
    residual_rms: float
    indeterminate: bool
    search_interval: tuple[float, float]


def exponent_scan(data: EnergySeries, fixed_exponents, free_slot_index: int, zcr: float,
                  mode: str = THRESHOLD_LOCKED, xtol: float = 1e-6, prec: int = 128,
                  flat_rtol: float = 1e-6) -> ExponentEstimate:
    """Fit one exponent with all others and ``z_cr`` held fixed.

    The free exponent is searched strictly between its neighbours (above the
    last one by up to 2 for the final slot).  If the residual barely changes
    over the search interval the estimate is flagged indeterminate.
    """
    _check_mode(mode)
    ex = list(parse_exponents(fixed_exponents))
    i = int(free_slot_index)
    if not 1 <= i < len(ex):
        raise ValidationError("the free slot must be a non-constant term")
    left = float(ex[i - 1])
    right = float(ex[i + 1]) if i + 1 < len(ex) else left + 2.0
    margin = 1e-3 * (right - left)
    lo, hi = left + margin, right - margin
    data = data.successful()
    n_free = len(ex) - (1 if mode == THRESHOLD_LOCKED else 0) + 1
    if len(data) < n_free:
        raise FitError(f"underdetermined: {len(data)} points for {n_free} free parameters")

    with mpmath.workprec(prec):
        def ssr(alpha):
            trial = list(ex)
            trial[i] = _FloatExponent(alpha)
            r = _linear_fit(data, zcr, trial, mode)
            if r is None:
                raise FitError(f"z_cr={zcr} exceeds a data charge")
            return r[1]

        a_best, f_best = _golden_min(ssr, lo, hi, xtol)
        grid = [ssr(lo + (hi - lo) * k / 8) for k in range(9)]
        f_max = max(grid + [f_best])
        scale = max(abs(p.E) for p in data.points) or 1.0
        atol = (1e-13 * scale) ** 2 * len(data)
        flat = (f_max - f_best) <= flat_rtol * f_max + atol
        wsum = math.fsum(p.weight for p in data.points)
        return ExponentEstimate(float(a_best), float(mpmath.sqrt(f_best / wsum)), bool(flat),
                                (lo, hi))


class _FloatExponent:
    """Real exponent usable where the fit expects a Fraction-like value."""

    def __init__(self, value):
        self.value = mpmath.mpf(value)
        self.numerator = self.value
        self.denominator = 1

    def __eq__(self, other):
        return self.value == other

    def __hash__(self):
        return hash(float(self.value))
