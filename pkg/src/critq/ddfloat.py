"""Vectorized double-double arithmetic on numpy arrays.

A :class:`DD` value is an unevaluated sum ``hi + lo`` of two float64 arrays
with ``|lo| <= ulp(hi)/2``, giving about 106 bits of significand.  Only the
operations needed by the matrix-element formulas are provided.  Algorithms are
the classic error-free transformations (Knuth two-sum, Dekker split/product).
"""

from __future__ import annotations

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


class DD:
    __slots__ = ("hi", "lo")
    __array_priority__ = 1000

    def __init__(self, hi, lo=None):
        self.hi = np.asarray(hi, dtype=np.float64)
        self.lo = np.zeros_like(self.hi) if lo is None else np.asarray(lo, dtype=np.float64)

    @staticmethod
    def _coerce(x) -> "DD":
        return x if isinstance(x, DD) else DD(x)

    @classmethod
    def sum_exact(cls, a, b) -> "DD":
        """``a + b`` for float64 inputs, without rounding."""
        return cls(*_two_sum(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)))

    @classmethod
    def prod_exact(cls, a, b) -> "DD":
        """``a * b`` for float64 inputs, without rounding."""
        return cls(*_two_prod(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)))

    def __add__(self, other):
        y = self._coerce(other)
        s, e = _two_sum(self.hi, y.hi)
        t, f = _two_sum(self.lo, y.lo)
        e = e + t
        s, e = _quick_two_sum(s, e)
        e = e + f
        return DD(*_quick_two_sum(s, e))

    __radd__ = __add__

    def __neg__(self):
        return DD(-self.hi, -self.lo)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, DD):
            p, e = _two_prod(self.hi, other.hi)
            e = e + (self.hi * other.lo + self.lo * other.hi)
        else:
            c = np.asarray(other, dtype=np.float64)
            p, e = _two_prod(self.hi, c)
            e = e + self.lo * c
        return DD(*_quick_two_sum(p, e))

    __rmul__ = __mul__

    def __truediv__(self, other):
        y = self._coerce(other)
        q1 = self.hi / y.hi
        r = self - y * q1
        q2 = r.hi / y.hi
        r = r - y * q2
        q3 = r.hi / y.hi
        return DD(*_quick_two_sum(q1, q2)) + DD(q3)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def reciprocal(self) -> "DD":
        return DD(np.ones_like(self.hi)) / self

    def __getitem__(self, idx):
        return DD(self.hi[idx], self.lo[idx])

    @property
    def shape(self):
        return self.hi.shape

    @property
    def T(self):
        return DD(self.hi.T, self.lo.T)

    def to_float(self) -> np.ndarray:
        return self.hi + self.lo

    def __repr__(self) -> str:
        return f"DD(hi={self.hi!r}, lo={self.lo!r})"
