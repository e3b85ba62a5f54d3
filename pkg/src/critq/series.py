"""Energy-versus-charge data containers."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .errors import ValidationError


@dataclass(frozen=True)
class EnergyPoint:
    """Total energy ``E`` (hartree) at nuclear charge ``Z``.

    ``est_error`` is the engine's accuracy estimate (0 for ingested data);
    ``status`` is ``"ok"`` or a short failure description, in which case
    ``E`` is NaN.
    """

    Z: float
    E: float
    weight: float = 1.0
    basis_size: int = 0
    precision_bits: int = 0
    est_error: float = 0.0
    status: str = "ok"

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class EnergySeries:
    points: tuple[EnergyPoint, ...]
    label: str = ""
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))
        self.validate()

    def validate(self) -> "EnergySeries":
        zs = [p.Z for p in self.points]
        dup = sorted({z for z in zs if zs.count(z) > 1})
        if dup:
            raise ValidationError(f"duplicate charges in series {self.label!r}: {dup}")
        bad = [i for i in range(1, len(zs)) if not zs[i] > zs[i - 1]]
        if bad:
            raise ValidationError(
                f"charges must be strictly increasing; rows {bad} are out of order")
        neg = [i for i, p in enumerate(self.points) if not p.weight > 0]
        if neg:
            raise ValidationError(f"weights must be positive; rows {neg} violate this")
        return self

    @classmethod
    def from_pairs(cls, Z: Iterable[float], E: Iterable[float], label: str = "",
                   weights: Sequence[float] | None = None) -> "EnergySeries":
        Z, E = list(Z), list(E)
        w = list(weights) if weights is not None else [1.0] * len(Z)
        return cls(tuple(EnergyPoint(float(z), float(e), float(wi)) for z, e, wi in zip(Z, E, w)),
                   label)

    def __len__(self) -> int:
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @property
    def Z(self) -> list[float]:
        return [p.Z for p in self.points]

    @property
    def E(self) -> list[float]:
        return [p.E for p in self.points]

    @property
    def weights(self) -> list[float]:
        return [p.weight for p in self.points]

    def successful(self) -> "EnergySeries":
        return EnergySeries(tuple(p for p in self.points if p.ok), self.label, dict(self.metadata))

    def select(self, charges: Iterable[float], tol: float = 1e-12) -> "EnergySeries":
        charges = list(charges)
        keep = tuple(p for p in self.points if any(abs(p.Z - z) <= tol for z in charges))
        return EnergySeries(keep, self.label, dict(self.metadata))

    def with_weights(self, weights: Sequence[float]) -> "EnergySeries":
        pts = tuple(replace(p, weight=float(w)) for p, w in zip(self.points, weights))
        return EnergySeries(pts, self.label, dict(self.metadata))
