"""Command-line entry point: ``critq <subcommand> ...``.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O error.
Every subcommand accepts ``--config FILE`` (JSON); explicit flags win over
file values.  For ``scan`` the file holds the run configuration, for the
other subcommands an optional section named after the subcommand supplies
defaults for its flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .branch import branch_pair_search
from .dataio import (REPORT_FORMATS, FitReport, fmt, ingest_csv, ingest_tail, load_model,
                     render_report, series_to_csv, xi_to_dict, _read_bytes, _write_text)
from .errors import CritqError, StorageError, ValidationError
from .integrals import ExponentTriple, PowerTriple, gamma_integral, quadrature_oracle
from .puiseux import MODES, STANDARD_EXPONENTS, THRESHOLD_LOCKED, fit_puiseux, parse_exponents
from .scan import load_config_file, resolve_config, run_scan
from .xispace import en_large_n, to_xi_space

log = logging.getLogger("critq")


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected lo,hi, got {text!r}")
    return vals[0], vals[1]


def _emit(text: str, path) -> None:
    if path:
        _write_text(path, text)
    else:
        sys.stdout.write(text)


def _cmd_scan(args, cfg: dict) -> int:
    file_values = cfg.get("scan", cfg)
    overrides = {"system": args.system, "basis_size": args.basis_size,
                 "precision_bits": args.precision_bits, "seed": args.seed,
                 "output_path": args.output, "workers": args.workers,
                 "z_values": args.z_values}
    config = resolve_config(file_values, overrides)
    series = run_scan(config)
    if not config.output_path:
        sys.stdout.write(series_to_csv(series))
    failed = [p.Z for p in series if not p.ok]
    if failed:
        log.warning("%d of %d points failed: %s", len(failed), len(series), failed)
    return 0


def _cmd_fit(args, cfg: dict) -> int:
    raw = _read_bytes(args.input)
    data = ingest_csv(args.input, args.energy_column).successful()
    exponents = parse_exponents(args.exponents)
    model = fit_puiseux(data, exponents, args.mode, tuple(args.bracket))
    extra = {}
    if args.n:
        xi = to_xi_space(model)
        extra = {"xi_model": xi, "en_table": [(n, en_large_n(xi, n)) for n in args.n]}
    config = {"input": str(args.input), "exponents": [str(a) for a in exponents],
              "mode": args.mode, "bracket": list(args.bracket), "energy_column": args.energy_column}
    report = FitReport.from_fit(model, data, raw, config, **extra)
    _emit(render_report(report, args.format), args.output)
    return 0


def _cmd_xi(args, cfg: dict) -> int:
    xi = to_xi_space(load_model(args.model))
    _emit(json.dumps(xi_to_dict(xi), indent=2) + "\n", args.output)
    return 0


def _cmd_asym(args, cfg: dict) -> int:
    xi = to_xi_space(load_model(args.model))
    lines = ["n,e_n"] + [f"{n},{fmt(en_large_n(xi, n))}" for n in args.n]
    _emit("\n".join(lines) + "\n", args.output)
    return 0


def _cmd_branch(args, cfg: dict) -> int:
    tail = ingest_tail(args.target, args.column)
    model, report = branch_pair_search(tail, args.radius_max, args.threshold)
    out = {"model": {"a": model.a, "b": model.b, "A1": model.A1, "A2": model.A2, "r": model.r},
           "report": report.to_dict()}
    _emit(json.dumps(out, indent=2) + "\n", args.output)
    return 0


def _cmd_oracle(args, cfg: dict) -> int:
    if len(args.powers) != 3 or len(args.exponents) != 3:
        raise ValidationError("--powers and --exponents take three values each")
    powers = PowerTriple(*args.powers)
    e = ExponentTriple(*args.exponents)
    closed = gamma_integral(powers, e)
    quad = quadrature_oracle(powers, e, rel_tol=args.tol)
    rel = abs(float(closed) - quad) / abs(float(closed))
    out = {"closed_form": str(closed), "quadrature": quad, "relative_difference": rel}
    _emit(json.dumps(out, indent=2) + "\n", args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="critq", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"critq {__version__}")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="JSON configuration file")
        sp.add_argument("--output", "-o", help="output file (default: stdout)")
        sp.set_defaults(func=func)
        return sp

    sp = add("scan", _cmd_scan, "variational energies over a list of charges")
    sp.add_argument("--system", choices=("ground-2e", "excited-2e"))
    sp.add_argument("--z-values", type=_floats)
    sp.add_argument("--basis-size", type=int)
    sp.add_argument("--precision-bits", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--workers", type=int)

    sp = add("fit", _cmd_fit, "Puiseux fit of an energy CSV")
    sp.add_argument("--input", required=True)
    sp.add_argument("--exponents", default=",".join(str(a) for a in STANDARD_EXPONENTS))
    sp.add_argument("--mode", choices=MODES, default=THRESHOLD_LOCKED)
    sp.add_argument("--bracket", type=_pair, default=(0.85, 0.95))
    sp.add_argument("--energy-column", default="E")
    sp.add_argument("--format", choices=REPORT_FORMATS, default="json")
    sp.add_argument("--n", type=_ints, help="also tabulate large-order coefficients at these n")

    sp = add("xi", _cmd_xi, "inverse-charge form of a threshold-locked model")
    sp.add_argument("--model", required=True)

    sp = add("asym", _cmd_asym, "large-order 1/Z coefficients from a model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--n", type=_ints, required=True)

    sp = add("branch", _cmd_branch, "branch-pair search against a coefficient tail")
    sp.add_argument("--target", required=True)
    sp.add_argument("--radius-max", type=float, required=True)
    sp.add_argument("--column", help="tail column (default: first after n)")
    sp.add_argument("--threshold", type=float, default=0.1)

    sp = add("oracle", _cmd_oracle, "closed-form integral against quadrature")
    sp.add_argument("--powers", type=_ints, required=True)
    sp.add_argument("--exponents", type=_floats, required=True)
    sp.add_argument("--tol", type=float, default=1e-10)
    return p


def _apply_config_defaults(parser: argparse.ArgumentParser, argv) -> dict:
    """Load ``--config`` and install its section as subcommand defaults."""
    pre, _ = parser.parse_known_args(argv)
    if not pre.config:
        return {}
    cfg = load_config_file(pre.config)
    if pre.command != "scan":
        section = cfg.get(pre.command, {})
        sub = next(a for a in parser._subparsers._group_actions if a.dest == "command")
        sp = sub.choices[pre.command]
        known = {a.dest for a in sp._actions}
        unknown = sorted(set(section) - known)
        if unknown:
            raise ValidationError(f"unknown keys in config section {pre.command!r}: {unknown}")
        for key, val in section.items():
            action = next(a for a in sp._actions if a.dest == key)
            if isinstance(val, str) and action.type is not None:
                val = action.type(val)
            elif isinstance(val, list) and key in ("bracket",):
                val = tuple(val)
            sp.set_defaults(**{key: val})
            action.required = False
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = _apply_config_defaults(parser, argv)
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args, cfg)
    except CritqError as exc:
        print(f"critq: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"critq: error: {exc}", file=sys.stderr)
        return StorageError.exit_code


if __name__ == "__main__":
    sys.exit(main())
