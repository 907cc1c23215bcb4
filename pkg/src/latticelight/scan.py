"""Angular sweeps over the detection angle, figure presets, oracle cross-checks and output."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import LatticeGeometry, ModeSpec, couplings
from .observables import (
    CavityParams,
    expected_D,
    expected_D2,
    expected_DstarD,
    fourth_moment_absD4,
    noise_R,
    observe,
)
from .oracle import DEFAULT_CAP, OracleReport, exact_expectations, mc_expectations
from .states import AtomicState, make_state

EXACT_THRESHOLD = 1e-8
MC_SIGMAS = 5.0
# values smaller than this fraction of a moment's natural scale are compared on that scale
ZERO_FLOOR = 1e-3


class ConfigError(ValueError):
    """Invalid scan configuration; ``errors`` maps field names to messages."""

    def __init__(self, errors: dict[str, str]):
        self.errors = errors
        super().__init__("; ".join(f"{k}: {v}" for k, v in errors.items()))


OBSERVABLES = (
    "classical_intensity",
    "DstarD",
    "R",
    "photon_number",
    "photon_variance",
    "quad_variance",
)


@dataclass
class ScanConfig:
    state: str = "sf"
    N: float = 30
    M: int = 30
    K: Optional[int] = None
    j0: int = 1
    d: float = 0.5
    lambda0: float = 1.0
    lambda1: float = 1.0
    theta0: float = 0.0
    probe: str = "traveling"
    detect: str = "traveling"
    start: float = -math.pi
    stop: float = math.pi
    points: int = 361
    cavity: CavityParams = field(default_factory=CavityParams)
    phi: float = 0.0
    observables: tuple[str, ...] = OBSERVABLES
    normalize: str = "raw"
    oracle: bool = False
    mc: Optional[int] = None
    seed: int = 0
    cap: int = DEFAULT_CAP
    workers: int = 1
    out: Optional[str] = None
    format: str = "csv"

    @property
    def window(self) -> int:
        return self.M if self.K is None else self.K

    def validate(self) -> None:
        err: dict[str, str] = {}
        if self.state not in ("mi", "sf", "coherent"):
            err["state"] = f"must be mi, sf or coherent, got {self.state!r}"
        if not isinstance(self.M, int) or self.M < 1:
            err["M"] = f"must be a positive integer, got {self.M!r}"
        elif not 1 <= self.window <= self.M:
            err["K"] = f"must satisfy 1 <= K <= M={self.M}, got {self.K}"
        elif self.j0 < 1 or self.j0 + self.window - 1 > self.M:
            err["j0"] = f"window starting at {self.j0} with K={self.window} exceeds M={self.M}"
        if not self.N >= 0:
            err["N"] = f"must be >= 0, got {self.N}"
        elif self.state == "sf" and int(self.N) != self.N:
            err["N"] = f"superfluid needs an integer atom number, got {self.N}"
        elif self.state == "mi" and "M" not in err and (int(self.N) != self.N or int(self.N) % self.M):
            err["N"] = f"Mott insulator needs N divisible by M={self.M}, got {self.N}"
        for name in ("d", "lambda0", "lambda1"):
            if not getattr(self, name) > 0:
                err[name] = f"must be positive, got {getattr(self, name)}"
        for name in ("probe", "detect"):
            if getattr(self, name) not in ("traveling", "standing"):
                err[name] = f"must be traveling or standing, got {getattr(self, name)!r}"
        for name in ("theta0", "start", "stop"):
            if not -math.pi <= getattr(self, name) <= math.pi:
                err[name] = f"must lie in [-pi, pi], got {getattr(self, name)}"
        if self.start >= self.stop:
            err["stop"] = f"must exceed start={self.start}"
        if self.points < 2:
            err["points"] = f"must be >= 2, got {self.points}"
        if self.normalize not in ("raw", "per-nk"):
            err["normalize"] = f"must be raw or per-nk, got {self.normalize!r}"
        if self.format not in ("csv", "json"):
            err["format"] = f"must be csv or json, got {self.format!r}"
        unknown = [o for o in self.observables if o not in OBSERVABLES]
        if unknown:
            err["observables"] = f"unknown {unknown}; choose from {list(OBSERVABLES)}"
        if self.mc is not None and self.mc < 1:
            err["mc"] = f"must be >= 1, got {self.mc}"
        if not 0 <= self.seed < 2**64:
            err["seed"] = f"must be an unsigned 64-bit integer, got {self.seed}"
        if self.cap < 1:
            err["cap"] = f"must be >= 1, got {self.cap}"
        if self.workers < 1:
            err["workers"] = f"must be >= 1, got {self.workers}"
        if err:
            raise ConfigError(err)

    def atomic_state(self) -> AtomicState:
        return make_state(self.state, self.N, self.M)

    def geometry(self) -> LatticeGeometry:
        return LatticeGeometry(M=self.M, d=self.d, K=self.window, j0=self.j0)

    def probe_mode(self) -> ModeSpec:
        return ModeSpec(self.probe, self.lambda0, self.theta0)

    def detect_mode(self, theta1: float) -> ModeSpec:
        return ModeSpec(self.detect, self.lambda1, theta1)

    def grid(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.points)

    def couplings_at(self, theta1: float):
        return couplings(self.geometry(), self.probe_mode(), self.detect_mode(theta1))


PRESETS = {
    "fig2": dict(N=30, M=30, K=30, theta0=0.0, probe="traveling", detect="traveling", normalize="per-nk"),
    "fig2c": dict(N=30, M=30, K=15, theta0=0.0, probe="traveling", detect="traveling", normalize="per-nk"),
    "fig3": dict(
        N=30, M=30, K=30, theta0=0.1 * math.pi, probe="standing", detect="standing", normalize="per-nk"
    ),
}


def preset(name: str, **overrides) -> ScanConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}")
    return ScanConfig(**{**PRESETS[name], **overrides})


# -- scanning -----------------------------------------------------------------


@dataclass
class OutputRow:
    theta1: float
    classical_intensity: Optional[float] = None
    DstarD: Optional[float] = None
    R: Optional[float] = None
    photon_number: Optional[float] = None
    photon_variance: Optional[float] = None
    quad_variance: Optional[float] = None
    DstarD_raw: Optional[float] = None
    R_raw: Optional[float] = None
    oracle_DstarD: Optional[float] = None
    oracle_R: Optional[float] = None
    oracle_absD4: Optional[float] = None


COLUMNS = tuple(f.name for f in dataclasses.fields(OutputRow))


def _oracle(cfg: ScanConfig, state: AtomicState, c) -> OracleReport:
    if cfg.mc is not None:
        return mc_expectations(state, c, cfg.mc, cfg.seed, workers=1)
    return exact_expectations(state, c, cap=cfg.cap)


def _row(cfg: ScanConfig, state: AtomicState, theta1: float) -> OutputRow:
    c = cfg.couplings_at(theta1)
    rep = observe(c, state, cfg.cavity, cfg.phi)
    values = {
        "classical_intensity": rep.classical_intensity,
        "DstarD": rep.DstarD,
        "R": rep.R,
        "photon_number": rep.photon_number,
        "photon_variance": rep.photon_variance,
        "quad_variance": rep.quad_variance,
    }
    row = OutputRow(theta1=float(theta1), **{k: float(values[k]) for k in cfg.observables})
    if cfg.normalize == "per-nk":
        nk = state.n * cfg.window
        scale = 1.0 / nk if nk > 0 else math.nan
        if "DstarD" in cfg.observables:
            row.DstarD_raw, row.DstarD = row.DstarD, row.DstarD * scale
        if "R" in cfg.observables:
            row.R_raw, row.R = row.R, row.R * scale
    if cfg.oracle:
        o = _oracle(cfg, state, c)
        row.oracle_DstarD = float(o.E_DstarD)
        row.oracle_R = float(o.R)
        row.oracle_absD4 = float(o.E_absD4)
    return row


def run_scan(cfg: ScanConfig) -> list[OutputRow]:
    """One row per grid angle, in grid order."""
    cfg.validate()
    state = cfg.atomic_state()
    grid = cfg.grid()
    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(lambda t: _row(cfg, state, t), grid))
    return [_row(cfg, state, t) for t in grid]


# -- oracle cross-check ---------------------------------------------------------


@dataclass
class Deviation:
    name: str
    max_abs: float = 0.0
    max_rel: float = 0.0
    max_sigma: float = 0.0


@dataclass
class CheckReport:
    method: str
    threshold: float
    points: int
    deviations: list[Deviation]

    @property
    def passed(self) -> bool:
        if self.method == "exact":
            return all(d.max_rel < self.threshold for d in self.deviations)
        return all(d.max_sigma <= self.threshold for d in self.deviations)

    def lines(self) -> list[str]:
        out = [f"method={self.method} points={self.points} threshold={self.threshold:g}"]
        for d in self.deviations:
            out.append(
                f"{d.name:10s} max_abs={d.max_abs:.3e} max_rel={d.max_rel:.3e} max_sigma={d.max_sigma:.3f}"
            )
        out.append("PASS" if self.passed else "FAIL")
        return out


def relative_deviation(a: complex, b: complex, scale: float) -> float:
    """``|a - b|`` relative to the larger of ``|a|``, ``|b|`` and ``ZERO_FLOOR * scale``."""
    denom = max(abs(a), abs(b), ZERO_FLOOR * scale)
    if denom == 0:
        return 0.0
    return abs(a - b) / denom


def moment_scale(c, state: AtomicState) -> float:
    """Natural size of ``D``: ``(n + 1) * sum |A_i|``."""
    return (state.n + 1.0) * float(np.abs(c.coefficients).sum())


def compare(c, state: AtomicState, oracle: OracleReport) -> dict[str, tuple[float, float, float]]:
    """Per-moment (abs deviation, relative deviation, deviation in standard errors)."""
    s1 = moment_scale(c, state)
    closed = {
        "E_D": (expected_D(c, state), oracle.E_D, s1, oracle.stderr_D),
        "E_DstarD": (expected_DstarD(c, state), oracle.E_DstarD, s1**2, oracle.stderr_DstarD),
        "E_absD4": (fourth_moment_absD4(c, state), oracle.E_absD4, s1**4, oracle.stderr_absD4),
        "E_D2": (expected_D2(c, state), oracle.E_D2, s1**2, oracle.stderr_D2),
        "R": (noise_R(c, state), oracle.R, s1**2, None),
    }
    out = {}
    for name, (x, y, scale, se) in closed.items():
        dev = abs(x - y)
        if se is None:
            sig = 0.0
        elif se > 0:
            sig = dev / se
        else:
            sig = 0.0 if relative_deviation(x, y, scale) < EXACT_THRESHOLD else math.inf
        out[name] = (dev, relative_deviation(x, y, scale), sig)
    return out


def run_oracle_check(cfg: ScanConfig) -> CheckReport:
    """Closed forms against the oracle at every grid angle.

    Exact enumeration passes below ``EXACT_THRESHOLD`` relative deviation; Monte
    Carlo passes when every raw moment lies within ``MC_SIGMAS`` standard errors
    (``R`` has no sampling error estimate and is reported only).
    """
    cfg.validate()
    state = cfg.atomic_state()
    method = "exact" if cfg.mc is None else "mc"
    names = ("E_D", "E_DstarD", "E_absD4", "E_D2", "R")
    devs = {n: Deviation(n) for n in names}
    grid = cfg.grid()

    def one(theta1):
        c = cfg.couplings_at(theta1)
        return compare(c, state, _oracle(cfg, state, c))

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(one, grid))
    else:
        results = [one(t) for t in grid]
    for res in results:
        for name, (a, r, sg) in res.items():
            d = devs[name]
            d.max_abs = max(d.max_abs, a)
            d.max_rel = max(d.max_rel, r)
            if name != "R":
                d.max_sigma = max(d.max_sigma, sg)
    threshold = EXACT_THRESHOLD if method == "exact" else MC_SIGMAS
    return CheckReport(method, threshold, len(grid), [devs[n] for n in names])


# -- output -----------------------------------------------------------------------


def summarize(rows: Sequence[OutputRow]) -> dict[str, object]:
    """Angles of the classical maxima and the range of every populated column."""
    out: dict[str, object] = {}
    if not rows:
        return out
    if rows[0].classical_intensity is not None:
        ci = np.array([r.classical_intensity for r in rows])
        top = ci.max()
        out["classical_maxima"] = [r.theta1 for r, v in zip(rows, ci) if v >= top * (1 - 1e-9)]
    for name in columns_for(rows)[1:]:
        vals = [getattr(r, name) for r in rows]
        out[name] = (min(vals), max(vals))
    return out


def columns_for(rows: Sequence[OutputRow], default: Sequence[str] = COLUMNS) -> list[str]:
    """Columns populated in ``rows``, in declared order (all columns for an empty list)."""
    if not rows:
        return list(default)
    return [name for name in COLUMNS if getattr(rows[0], name) is not None]


def _fmt(x: float) -> str:
    return repr(float(x))


def render(rows: Sequence[OutputRow], fmt: str = "csv", columns: Optional[Sequence[str]] = None) -> str:
    cols = list(columns) if columns is not None else columns_for(rows)
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        for row in rows:
            writer.writerow([_fmt(getattr(row, c)) for c in cols])
        return buf.getvalue()
    if fmt == "json":
        objs = [{c: float(getattr(row, c)) for c in cols} for row in rows]
        return json.dumps(objs, indent=1) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def emit(rows: Sequence[OutputRow], fmt: str, path: str, columns: Optional[Sequence[str]] = None) -> str:
    """Write ``rows`` to ``path`` as CSV or JSON; returns the path."""
    text = render(rows, fmt, columns)
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    return path


def load_rows(path: str) -> list[OutputRow]:
    """Read rows back from a CSV or JSON file written by :func:`emit`."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if path.endswith(".json") or text.lstrip().startswith("["):
        return [OutputRow(**{k: float(v) for k, v in obj.items()}) for obj in json.loads(text)]
    reader = csv.DictReader(io.StringIO(text))
    return [OutputRow(**{k: float(v) for k, v in rec.items()}) for rec in reader]


def default_output_path(command: str, fmt: str) -> Optional[str]:
    outdir = os.environ.get("LATTICELIGHT_OUTDIR")
    if not outdir:
        return None
    return os.path.join(outdir, f"{command}.{fmt}")
