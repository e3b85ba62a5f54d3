"""Run configuration and energy scans over a list of charges."""

from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Mapping

from .basis import BasisLayout, ParameterBox
from .dataio import write_series
from .engine import (EXCITED_TRUST_RANGE, GROUND_TRUST_RANGE, SpectralConfig, excited_energy,
                     ground_energy)
from .errors import CritqError, StorageError, ValidationError
from .series import EnergyPoint, EnergySeries

log = logging.getLogger(__name__)

SYSTEMS = ("ground-2e", "excited-2e")
PRECISION_ENV = "CRITQ_PRECISION_BITS"


@dataclass(frozen=True)
class RunConfig:
    system: str = "ground-2e"
    z_values: tuple[float, ...] = ()
    basis_size: int = 400
    growth_factor: float = 1.5
    precision_bits: int = 128
    max_precision_bits: int = 512
    seed: int = 0
    parameter_box: dict | list | None = None  # ParameterBox or BasisLayout in dict form, per unit charge
    trust_range: tuple[float, float] | None = None
    output_path: str | None = None
    optimize: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "z_values", tuple(float(z) for z in self.z_values))
        if self.trust_range is not None:
            object.__setattr__(self, "trust_range", tuple(float(x) for x in self.trust_range))

    @property
    def effective_trust_range(self) -> tuple[float, float]:
        if self.trust_range is not None:
            return self.trust_range
        return GROUND_TRUST_RANGE if self.system == "ground-2e" else EXCITED_TRUST_RANGE

    def layout(self) -> BasisLayout | None:
        box = self.parameter_box
        if box is None:
            return None
        if isinstance(box, (list, tuple)):
            return BasisLayout.single(ParameterBox(*map(float, box)))
        if "boxes" in box:
            return BasisLayout.from_dict(box)
        return BasisLayout.single(ParameterBox(**box))

    def validate(self) -> "RunConfig":
        if self.system not in SYSTEMS:
            raise ValidationError(f"system must be one of {SYSTEMS}, got {self.system!r}")
        if self.basis_size < 1:
            raise ValidationError("basis_size must be >= 1")
        if self.precision_bits < 64:
            raise ValidationError("precision_bits must be >= 64")
        if not self.growth_factor > 1:
            raise ValidationError("growth_factor must exceed 1")
        if self.workers < 1:
            raise ValidationError("workers must be >= 1")
        lo, hi = self.effective_trust_range
        if not lo < hi:
            raise ValidationError(f"empty trust range {self.trust_range}")
        outside = [z for z in self.z_values if not (lo <= z <= hi)]
        if outside:
            raise ValidationError(f"charges {outside} lie outside the trust range [{lo}, {hi}]")
        if len(set(self.z_values)) != len(self.z_values):
            raise ValidationError("duplicate charges in z_values")
        layout = self.layout()
        if layout is not None:
            for b in layout.boxes:
                b.validate()
        return self

    def spectral(self) -> SpectralConfig:
        return SpectralConfig(basis_size=self.basis_size, growth_factor=self.growth_factor,
                              precision_bits=self.precision_bits,
                              max_precision_bits=max(self.max_precision_bits, self.precision_bits),
                              seed=self.seed, layout=self.layout(), trust_range=self.trust_range,
                              optimize=self.optimize)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["z_values"] = list(self.z_values)
        if self.trust_range is not None:
            d["trust_range"] = list(self.trust_range)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ValidationError(f"unknown config keys: {unknown}")
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad config: {exc}") from None


def load_config_file(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise StorageError(f"cannot read config {path}: {exc}") from exc
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(d, dict):
        raise ValidationError(f"{path}: config must be a JSON object")
    return d


def env_precision(environ: Mapping[str, str] | None = None) -> int | None:
    raw = (os.environ if environ is None else environ).get(PRECISION_ENV)
    if raw is None or raw == "":
        return None
    try:
        return int(raw)
    except ValueError:
        raise ValidationError(f"{PRECISION_ENV} must be an integer, got {raw!r}") from None


def resolve_config(file_values: Mapping | None = None, overrides: Mapping | None = None,
                   environ: Mapping[str, str] | None = None) -> RunConfig:
    """File values, then the precision env var, then explicit overrides."""
    d = dict(file_values or {})
    bits = env_precision(environ)
    if bits is not None:
        d["precision_bits"] = bits
    d.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig.from_dict(d).validate()


def _point(args: tuple[RunConfig, float]) -> EnergyPoint:
    config, z = args
    spec = config.spectral()
    try:
        if config.system == "ground-2e":
            return ground_energy(z, spec)
        return excited_energy(z, spec)
    except CritqError as exc:
        log.warning("Z=%g failed: %s", z, exc)
        msg = " ".join(str(exc).split()).replace(",", ";")
        return EnergyPoint(Z=z, E=math.nan, status=f"{type(exc).__name__}: {msg}")


def run_scan(config: RunConfig, output_path=None) -> EnergySeries:
    """Energies at every configured charge; failures are recorded per row.

    Rows are written in increasing Z, so the file depends on the
    configuration only.
    """
    config.validate()
    zs = sorted(config.z_values)
    jobs = [(config, z) for z in zs]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            points = list(pool.map(_point, jobs))
    else:
        points = [_point(j) for j in jobs]
    series = EnergySeries(tuple(points), label=config.system,
                          metadata={"config": config.to_dict()})
    path = output_path or config.output_path
    if path:
        write_series(series, path)
    return series


def with_overrides(config: RunConfig, **kw) -> RunConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
