"""CSV / JSON persistence, bundled reference data and fit reports."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import StorageError, ValidationError
from .puiseux import FREE_CONSTANT, THRESHOLD_LOCKED, PuiseuxModel, eval_model, threshold_constant
from .series import EnergyPoint, EnergySeries
from .xispace import XiModel

ENERGY_COLUMNS = ("Z", "E", "basis_size", "precision_bits", "est_error", "status")
REPORT_FORMATS = ("json", "csv", "plot-data")
BUNDLED = ("table1_2e.csv", "table3_3e.csv", "table2_en_reference.csv")


def fmt(x: float) -> str:
    """Decimal text with 20 significant digits (round-trips every double)."""
    return "%.20g" % x


def bundled_path(name: str) -> Path:
    if name not in BUNDLED:
        raise StorageError(f"no bundled dataset named {name!r}; have {BUNDLED}")
    return Path(str(resources.files("critq") / "data" / name))


def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise StorageError(f"cannot read {path}: {exc}") from exc


def _write_text(path, text: str) -> None:
    path = Path(path)
    try:
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text, newline="")
        os.replace(tmp, path)
    except OSError as exc:
        raise StorageError(f"cannot write {path}: {exc}") from exc


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _rows(text: str, path) -> tuple[list[str], list[tuple[int, dict]]]:
    """Parse CSV text skipping '#' comments; rows carry their 1-based file line."""
    lines = text.splitlines()
    body = [(i + 1, ln) for i, ln in enumerate(lines) if ln.strip() and not ln.lstrip().startswith("#")]
    if not body:
        raise ValidationError(f"{path}: no header row")
    header = [h.strip() for h in next(csv.reader([body[0][1]]))]
    out = []
    for lineno, ln in body[1:]:
        cells = [c.strip() for c in next(csv.reader([ln]))]
        if len(cells) != len(header):
            raise ValidationError(f"{path}:{lineno}: expected {len(header)} fields, got {len(cells)}")
        out.append((lineno, dict(zip(header, cells))))
    return header, out


def _float(cell: str, path, lineno: int, name: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ValidationError(f"{path}:{lineno}: column {name}: cannot parse {cell!r}") from None


def parse_energy_csv(text: str, path="<string>", energy_column: str = "E") -> EnergySeries:
    header, rows = _rows(text, path)
    for col in ("Z", energy_column):
        if col not in header:
            raise ValidationError(f"{path}: missing column {col!r}")
    seen: dict[float, int] = {}
    points = []
    for lineno, row in rows:
        z = _float(row["Z"], path, lineno, "Z")
        if z in seen:
            raise ValidationError(f"{path}: duplicate Z={row['Z']} on lines {seen[z]} and {lineno}")
        seen[z] = lineno
        status = row.get("status") or "ok"
        e = _float(row[energy_column], path, lineno, energy_column) if row[energy_column] else math.nan
        points.append(EnergyPoint(
            Z=z, E=e,
            weight=_float(row["weight"], path, lineno, "weight") if row.get("weight") else 1.0,
            basis_size=int(_float(row["basis_size"], path, lineno, "basis_size")) if row.get("basis_size") else 0,
            precision_bits=int(_float(row["precision_bits"], path, lineno, "precision_bits"))
            if row.get("precision_bits") else 0,
            est_error=_float(row["est_error"], path, lineno, "est_error") if row.get("est_error") else 0.0,
            status=status))
    points.sort(key=lambda p: p.Z)
    return EnergySeries(tuple(points), label=Path(str(path)).stem,
                        metadata={"sha256": sha256_hex(text.encode())})


def ingest_csv(path, energy_column: str = "E") -> EnergySeries:
    """Energy series from a CSV file (``Z`` plus an energy column)."""
    raw = _read_bytes(path)
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ValidationError(f"{path}: not UTF-8 text") from exc
    series = parse_energy_csv(text, path, energy_column)
    series.metadata["sha256"] = sha256_hex(raw)
    return series


def ingest_tail(path, column: str | None = None) -> list[tuple[int, float]]:
    """``(n, e_n)`` pairs from a coefficient table; blank cells are skipped.

    Without ``column`` the first column after ``n`` is used.
    """
    text = _read_bytes(path).decode("utf-8")
    header, rows = _rows(text, path)
    if "n" not in header:
        raise ValidationError(f"{path}: missing column 'n'")
    column = column or next((h for h in header if h != "n"), None)
    if column not in header:
        raise ValidationError(f"{path}: missing column {column!r}")
    tail = []
    for lineno, row in rows:
        if row[column]:
            tail.append((int(_float(row["n"], path, lineno, "n")), _float(row[column], path, lineno, column)))
    return tail


def series_to_csv(series: EnergySeries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ENERGY_COLUMNS)
    for p in series:
        w.writerow([fmt(p.Z), fmt(p.E), p.basis_size, p.precision_bits, fmt(p.est_error), p.status])
    return buf.getvalue()


def write_series(series: EnergySeries, path) -> None:
    _write_text(path, series_to_csv(series))


# -- models ------------------------------------------------------------------

def _num_to_json(x):
    return str(x) if isinstance(x, Fraction) else float(x)


def model_to_dict(model: PuiseuxModel) -> dict:
    return {"z_cr": _num_to_json(model.z_cr),
            "exponents": [str(a) for a in model.exponents],
            "coefficients": [_num_to_json(c) for c in model.coefficients],
            "constraint_mode": model.constraint_mode,
            "residual_rms": float(model.residual_rms)}


def _num_from_json(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return float(x)
    raise ValidationError(f"expected a number, got {x!r}")


def model_from_dict(d: dict) -> PuiseuxModel:
    """Inverse of :func:`model_to_dict`.

    For threshold-locked models a constant that matches ``-z_cr**2/2`` to
    1e-9 relative (e.g. after decimal rounding) is snapped to it.
    """
    try:
        z_cr = _num_from_json(d["z_cr"])
        coefs = [_num_from_json(c) for c in d["coefficients"]]
        mode = d.get("constraint_mode", FREE_CONSTANT)
        exponents = d["exponents"]
    except KeyError as exc:
        raise ValidationError(f"model is missing field {exc}") from None
    if mode == THRESHOLD_LOCKED and coefs:
        thr = threshold_constant(z_cr)
        if abs(coefs[0] - thr) > 1e-9 * abs(thr):
            raise ValidationError(f"constant {coefs[0]} differs from the threshold {thr}")
        coefs[0] = thr
    return PuiseuxModel(z_cr, exponents, tuple(coefs), mode, float(d.get("residual_rms", 0.0)))


def xi_to_dict(xi: XiModel) -> dict:
    return {"xi_cr": _num_to_json(xi.xi_cr), "powers": [str(p) for p in xi.powers],
            "coefficients": [_num_to_json(c) for c in xi.coefficients]}


def load_model(path) -> PuiseuxModel:
    """A model from a JSON file; a full report's ``model`` entry is accepted too."""
    try:
        d = json.loads(_read_bytes(path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(d.get("model", d))


def save_model(model: PuiseuxModel, path) -> None:
    _write_text(path, json.dumps(model_to_dict(model), indent=2) + "\n")


# -- reports -----------------------------------------------------------------

@dataclass
class FitReport:
    model: PuiseuxModel
    data: EnergySeries
    residuals: tuple[float, ...]
    xi_model: XiModel | None = None
    en_table: list[tuple[int, float]] | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.residuals) != len(self.data):
            raise ValidationError("one residual per input point is required")

    @classmethod
    def from_fit(cls, model: PuiseuxModel, data: EnergySeries, input_bytes: bytes | None = None,
                 config: dict | None = None, **extra) -> "FitReport":
        digest = sha256_hex(input_bytes) if input_bytes is not None else data.metadata.get("sha256")
        residuals = tuple(float(p.E - eval_model(model, p.Z)) for p in data)
        return cls(model, data, residuals, provenance={"input_sha256": digest, "config": config or {}},
                   **extra)

    def to_dict(self) -> dict:
        d = {"model": model_to_dict(self.model),
             "points": [{"Z": p.Z, "E": p.E, "weight": p.weight, "residual": r}
                        for p, r in zip(self.data, self.residuals)],
             "provenance": self.provenance}
        if self.xi_model is not None:
            d["xi_model"] = xi_to_dict(self.xi_model)
        if self.en_table is not None:
            d["en_table"] = [{"n": int(n), "e_n": float(e)} for n, e in self.en_table]
        return d


def model_csv(model: PuiseuxModel) -> str:
    buf = io.StringIO()
    buf.write(f"# z_cr={fmt(float(model.z_cr))} mode={model.constraint_mode}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["exponent", "coefficient"])
    for a, c in zip(model.exponents, model.coefficients):
        w.writerow([str(a), fmt(float(c))])
    return buf.getvalue()


def plot_data(curves: dict[str, Sequence[tuple[float, float]]]) -> str:
    """Whitespace-separated ``Z E`` blocks, one per named curve, blank-line separated."""
    out = ["# columns: Z E"]
    for label, pts in curves.items():
        out.append(f"# series: {label}")
        out.extend(f"{fmt(z)} {fmt(e)}" for z, e in pts)
        out.append("")
    return "\n".join(out) + "\n"


def series_curves(series: Iterable[EnergySeries]) -> dict[str, list[tuple[float, float]]]:
    return {s.label or f"series{i}": [(p.Z, p.E) for p in s if p.ok] for i, s in enumerate(series)}


def render_report(report: FitReport, fmt_name: str) -> str:
    if fmt_name == "json":
        return json.dumps(report.to_dict(), indent=2) + "\n"
    if fmt_name == "csv":
        return model_csv(report.model)
    if fmt_name == "plot-data":
        data = [(p.Z, p.E) for p in report.data]
        fit = [(p.Z, float(eval_model(report.model, p.Z))) for p in report.data]
        return plot_data({report.data.label or "data": data, "fit": fit})
    raise ValidationError(f"unknown report format {fmt_name!r}; choose from {REPORT_FORMATS}")


def emit_report(report: FitReport, fmt_name: str, path) -> Path:
    _write_text(path, render_report(report, fmt_name))
    return Path(path)
