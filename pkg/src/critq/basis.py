"""Correlated exponential basis functions and quasi-random basis generation.

A basis function is the exchange-symmetrized product

    [exp(-alpha r1 - beta r2) + exp(-beta r1 - alpha r2)] * exp(-a r12)

Exponents are drawn from one or more parameter boxes with a scrambled Halton
sequence.  Function ``i`` is assigned to a box by a golden-ratio Weyl rule,
so the first ``N`` functions of a size-``N'`` set (``N' > N``) are exactly the
size-``N`` set: bases of increasing size are nested.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import qmc

from .errors import DuplicateFunctionError, ValidationError

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_DUP_RTOL = 1e-12


@dataclass(frozen=True)
class BasisFunction:
    alpha: float
    beta: float
    a: float

    def validate(self) -> "BasisFunction":
        if not (self.alpha + self.beta > 0 and self.alpha + self.a > 0 and self.beta + self.a > 0):
            raise ValidationError(f"basis function not normalizable: {self!r}")
        return self

    def swapped(self) -> "BasisFunction":
        return BasisFunction(self.beta, self.alpha, self.a)


@dataclass(frozen=True)
class ParameterBox:
    alpha_lo: float
    alpha_hi: float
    beta_lo: float
    beta_hi: float
    a_lo: float
    a_hi: float

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.alpha_lo, self.beta_lo, self.a_lo])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.alpha_hi, self.beta_hi, self.a_hi])

    def as_tuple(self) -> tuple[float, ...]:
        return (self.alpha_lo, self.alpha_hi, self.beta_lo, self.beta_hi, self.a_lo, self.a_hi)

    def validate(self) -> "ParameterBox":
        lo, hi = self.lower, self.upper
        if not np.all(np.isfinite(self.as_tuple())) or not np.all(lo < hi):
            raise ValidationError(f"box bounds must satisfy lo < hi: {self!r}")
        # the pairwise sums are linear, so the lower corner is the worst case
        if not (lo[0] + lo[1] > 0 and lo[0] + lo[2] > 0 and lo[1] + lo[2] > 0):
            raise ValidationError(f"box contains non-normalizable functions: {self!r}")
        return self

    def scaled(self, factor: float) -> "ParameterBox":
        return ParameterBox(*(factor * v for v in self.as_tuple()))

    def contains(self, f: BasisFunction) -> bool:
        x = np.array([f.alpha, f.beta, f.a])
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass(frozen=True)
class BasisLayout:
    """Several boxes sharing one basis, with the fraction of functions in each."""

    boxes: tuple[ParameterBox, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.boxes) == 0 or len(self.boxes) != len(self.weights):
            raise ValidationError("layout needs one weight per box and at least one box")
        if any(w <= 0 for w in self.weights):
            raise ValidationError("layout weights must be positive")

    @classmethod
    def single(cls, box: ParameterBox) -> "BasisLayout":
        return cls((box,), (1.0,))

    def scaled(self, factor: float) -> "BasisLayout":
        return BasisLayout(tuple(b.scaled(factor) for b in self.boxes), self.weights)

    def replace_box(self, index: int, box: ParameterBox) -> "BasisLayout":
        boxes = list(self.boxes)
        boxes[index] = box
        return BasisLayout(tuple(boxes), self.weights)

    def to_dict(self) -> dict:
        return {"boxes": [list(b.as_tuple()) for b in self.boxes], "weights": list(self.weights)}

    @classmethod
    def from_dict(cls, d: dict) -> "BasisLayout":
        return cls(tuple(ParameterBox(*map(float, b)) for b in d["boxes"]),
                   tuple(float(w) for w in d["weights"]))


def as_layout(box) -> BasisLayout:
    if isinstance(box, BasisLayout):
        return box
    if isinstance(box, ParameterBox):
        return BasisLayout.single(box)
    return BasisLayout(tuple(box), tuple(1.0 for _ in box))


@dataclass(frozen=True)
class BasisSet:
    functions: tuple[BasisFunction, ...]
    seed: int
    box: BasisLayout = field(compare=False)

    def __len__(self) -> int:
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x = np.array([(f.alpha, f.beta, f.a) for f in self.functions], dtype=np.float64)
        return x[:, 0].copy(), x[:, 1].copy(), x[:, 2].copy()

    def prefix(self, n: int) -> "BasisSet":
        return BasisSet(self.functions[:n], self.seed, self.box)

    def validate(self) -> "BasisSet":
        if not self.functions:
            raise ValidationError("basis set is empty")
        for f in self.functions:
            f.validate()
        check_distinct(self.functions)
        return self


def _is_duplicate(x: np.ndarray, existing: np.ndarray) -> bool:
    if existing.size == 0:
        return False
    scale = np.maximum(np.abs(existing), np.abs(x))
    close = np.abs(existing - x) <= _DUP_RTOL * np.where(scale > 0, scale, 1.0)
    return bool(np.any(np.all(close, axis=1)))


def check_distinct(functions: Sequence[BasisFunction]) -> None:
    seen = np.empty((0, 3))
    for i, f in enumerate(functions):
        x = np.array([f.alpha, f.beta, f.a])
        # an exchanged copy spans the same symmetrized function
        if _is_duplicate(x, seen) or _is_duplicate(x[[1, 0, 2]], seen):
            raise DuplicateFunctionError(f"basis function {i} duplicates an earlier one: {f!r}")
        seen = np.vstack([seen, x])


def _box_schedule(weights: Sequence[float], n: int) -> np.ndarray:
    cum = np.cumsum(np.asarray(weights, dtype=float))
    cum /= cum[-1]
    u = np.mod(np.arange(n) * _GOLDEN, 1.0)
    return np.minimum(np.searchsorted(cum, u, side="right"), len(weights) - 1)


def generate_basis(box, N: int, seed: int = 0) -> BasisSet:
    """Deterministic quasi-random basis of ``N`` functions inside ``box``.

    ``box`` may be a :class:`ParameterBox`, a :class:`BasisLayout` or a
    sequence of boxes (equal weights).
    """
    if int(N) != N or N < 1:
        raise ValidationError(f"basis size must be a positive integer, got {N}")
    layout = as_layout(box)
    for b in layout.boxes:
        b.validate()
    schedule = _box_schedule(layout.weights, int(N))
    children = np.random.SeedSequence(int(seed)).spawn(len(layout.boxes))
    samplers = [qmc.Halton(d=3, scramble=True, seed=np.random.default_rng(c)) for c in children]
    pending: list[list[np.ndarray]] = [[] for _ in layout.boxes]

    def draw(k: int) -> np.ndarray:
        if not pending[k]:
            pending[k] = list(samplers[k].random(64))[::-1]
        return pending[k].pop()

    points = np.empty((0, 3))
    for k in schedule:
        b = layout.boxes[k]
        while True:
            x = b.lower + draw(k) * (b.upper - b.lower)
            if not (_is_duplicate(x, points) or _is_duplicate(x[[1, 0, 2]], points)):
                break
        points = np.vstack([points, x])
    functions = tuple(BasisFunction(float(a), float(bb), float(c)) for a, bb, c in points)
    return BasisSet(functions, int(seed), layout)


def functions_from_arrays(alpha: Iterable[float], beta: Iterable[float], a: Iterable[float],
                          seed: int = 0, box: BasisLayout | None = None) -> BasisSet:
    fs = tuple(BasisFunction(float(x), float(y), float(z)) for x, y, z in zip(alpha, beta, a))
    if box is None:
        arr = np.array([(f.alpha, f.beta, f.a) for f in fs])
        lo, hi = arr.min(axis=0), arr.max(axis=0)
        hi = np.where(hi > lo, hi, lo + 1e-9)
        box = BasisLayout.single(ParameterBox(lo[0], hi[0], lo[1], hi[1], lo[2], hi[2]))
    return BasisSet(fs, seed, box).validate()
