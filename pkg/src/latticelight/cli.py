"""Command-line front end.

Exit status: 0 success, 1 invalid configuration, 2 oracle check failed, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from typing import Optional, Sequence

from .observables import CavityParams
from .oracle import CapExceeded, exact_table1
from .scan import (
    OBSERVABLES,
    PRESETS,
    ConfigError,
    ScanConfig,
    default_output_path,
    emit,
    render,
    run_oracle_check,
    run_scan,
    summarize,
)
from .states import table1

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_IO = 0, 1, 2, 3

_CAVITY_KEYS = ("g0", "a0", "delta_0a", "delta_01", "kappa")


def _angle(text: str) -> float:
    """Radians; accepts plain numbers or multiples of pi such as ``0.1pi``."""
    t = text.strip().lower()
    if t.endswith("pi"):
        head = t[:-2].rstrip("*") or "1"
        if head == "-":
            head = "-1"
        return float(head) * math.pi
    return float(t)


def _add_common(p: argparse.ArgumentParser) -> None:
    # every default is None so that config-file values survive unless a flag is given
    p.add_argument("--config", metavar="PATH", help="JSON file with any of the flags below")
    p.add_argument("--state", choices=("mi", "sf", "coherent"))
    p.add_argument("--N", type=float, help="atom number (mean atom number for coherent)")
    p.add_argument("--M", type=int, help="lattice sites")
    p.add_argument("--K", type=int, help="illuminated sites (default M)")
    p.add_argument("--j0", type=int, help="first illuminated site, 1-based")
    p.add_argument("--d", type=float, help="lattice period")
    p.add_argument("--lambda0", type=float, help="probe wavelength")
    p.add_argument("--lambda1", type=float, help="cavity wavelength")
    p.add_argument("--theta0", type=_angle, help="probe angle in radians (e.g. 0.1pi)")
    p.add_argument("--probe", choices=("traveling", "standing"))
    p.add_argument("--detect", choices=("traveling", "standing"))
    p.add_argument("--start", type=_angle, help="first detection angle (default -pi)")
    p.add_argument("--stop", type=_angle, help="last detection angle (default pi)")
    p.add_argument("--points", type=int, help="grid points (default 361)")
    p.add_argument("--phi", type=_angle, help="quadrature angle")
    p.add_argument("--observables", help=f"comma-separated subset of {','.join(OBSERVABLES)}")
    p.add_argument("--normalize", choices=("raw", "per-nk"))
    p.add_argument("--oracle", action="store_true", default=None, help="add oracle columns")
    p.add_argument("--mc", type=int, metavar="SAMPLES", help="Monte Carlo oracle with this many samples")
    p.add_argument("--seed", type=int, metavar="U64")
    p.add_argument("--cap", type=int, metavar="COUNT", help="max configurations for exact enumeration")
    p.add_argument("--workers", type=int, help="threads for grid evaluation")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=("csv", "json"))
    for key in _CAVITY_KEYS:
        p.add_argument(f"--{key.replace('_', '-')}", dest=key, type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latticelight",
        description="Cavity light scattering from atoms in an optical lattice.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "scan": "angular sweep of the detection angle",
        "check": "compare closed forms with the enumeration (or Monte Carlo) oracle",
        "fig2": "traveling waves, N=M=K=30, theta0=0",
        "fig2c": "traveling waves, N=M=30, K=15, theta0=0",
        "fig3": "standing waves, N=M=K=30, theta0=0.1pi",
        "table1": "second-order occupation statistics of the state",
    }
    for name, text in helps.items():
        _add_common(sub.add_parser(name, help=text, description=text))
    return parser


def config_from_args(args: argparse.Namespace) -> ScanConfig:
    """Preset defaults, then the JSON config file, then explicit flags."""
    values: dict = dict(PRESETS.get(args.command, {}))
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            file_values = json.load(fh)
        if not isinstance(file_values, dict):
            raise ConfigError({"config": "must hold a JSON object"})
        values.update(file_values)
    for key, val in vars(args).items():
        if key in ("command", "config") or val is None:
            continue
        values[key] = val

    cavity = {k: float(values.pop(k)) for k in _CAVITY_KEYS if k in values}
    obs = values.pop("observables", None)
    if isinstance(obs, str):
        obs = [o.strip() for o in obs.split(",") if o.strip()]
    for key in ("theta0", "start", "stop", "phi"):
        if isinstance(values.get(key), str):
            values[key] = _angle(values[key])
    if "N" in values and float(values["N"]).is_integer():
        values["N"] = int(values["N"])

    known = {f.name for f in dataclasses.fields(ScanConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError({k: "unknown setting" for k in unknown})
    try:
        cfg = ScanConfig(**values)
        if cavity:
            cfg.cavity = CavityParams(**cavity)
    except (TypeError, ValueError) as exc:
        raise ConfigError({"cavity" if cavity else "config": str(exc)}) from exc
    if obs is not None:
        cfg.observables = tuple(obs)
    cfg.validate()
    return cfg


def _write(text_or_rows, cfg: ScanConfig, command: str, columns=None) -> None:
    path = cfg.out or default_output_path(command, cfg.format)
    if isinstance(text_or_rows, str):
        text = text_or_rows
        if path is None:
            sys.stdout.write(text)
            return
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    elif path is None:
        sys.stdout.write(render(text_or_rows, cfg.format, columns))
        return
    else:
        emit(text_or_rows, cfg.format, path, columns)
    print(f"wrote {path}", file=sys.stderr)


def _table1_text(cfg: ScanConfig) -> str:
    state = cfg.atomic_state()
    closed = table1(state, cfg.window)
    try:
        oracle = exact_table1(state, cfg.window, cfg.cap)
    except CapExceeded:
        oracle = None
    fields = [f.name for f in dataclasses.fields(closed)]
    rows = [
        {"field": f, "closed_form": getattr(closed, f), "oracle": getattr(oracle, f) if oracle else None}
        for f in fields
    ]
    if cfg.format == "json":
        return json.dumps(rows, indent=1) + "\n"
    lines = ["field,closed_form,oracle"]
    for r in rows:
        o = "" if r["oracle"] is None else repr(float(r["oracle"]))
        lines.append(f"{r['field']},{float(r['closed_form'])!r},{o}")
    return "\n".join(lines) + "\n"


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(args)
        if args.command == "table1":
            _write(_table1_text(cfg), cfg, "table1")
            return EXIT_OK
        if args.command == "check":
            report = run_oracle_check(cfg)
            for line in report.lines():
                print(line)
            return EXIT_OK if report.passed else EXIT_CHECK
        rows = run_scan(cfg)
        _write(rows, cfg, args.command)
        if args.command in PRESETS:
            for key, val in summarize(rows).items():
                print(f"{key}: {val}", file=sys.stderr)
        return EXIT_OK
    except CapExceeded as exc:
        print(f"error: {exc}; rerun with --mc SAMPLES for a Monte Carlo estimate", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        for key, msg in exc.errors.items():
            print(f"error: {key}: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
