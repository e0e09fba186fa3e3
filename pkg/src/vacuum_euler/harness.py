"""Run configuration, scenario orchestration and on-disk artifacts.

A configuration is a flat ``key = value`` text file with ``#`` comments::

    gamma = 2
    epsilon = 1e-3
    t_end = 1000

Every scenario writes into its own directory: the normalised config, the
ansatz table and summary, the snapshot trajectory, a diagnostics time series
and the theorem report.  Exit codes: 0 when every verdict passes, 2 when a
verdict fails or is inconclusive, 3 when a stage raised.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from . import ansatz as ans
from .diagnostics import fit_rate, theorem_report
from .errors import ConfigurationError, HorizonError, PerturbationTooLargeError, SteppingError, VacuumEulerError
from .gas import derive_constants
from .solver import PerturbationSpec, build_grid, run, write_trajectory

__all__ = [
    "RunConfig",
    "Bundle",
    "parse_config",
    "load_config",
    "snapshot_schedule",
    "run_scenario",
    "run_ansatz",
    "sweep",
    "verify_bundle",
    "admissible_epsilon",
    "EXIT_OK",
    "EXIT_VERDICT",
    "EXIT_STAGE",
]

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_VERDICT, EXIT_STAGE = 0, 2, 3

DIAGNOSTIC_COLUMNS = [
    "t", "E0", "E0_tilde", "E1", "E2", "E01", "E11", "sup_bundle", "D_rho", "D_u",
    "x_plus", "x_minus", "elliptic_ratio_01",
    # extra columns after the fixed set
    "dx_plus_dt", "d2x_plus_dt2", "D_rho_unweighted", "separable_error",
]

ANSATZ_COLUMNS = ["t", "eta_x", "eta_xt", "eta_xtt", "h", "h_t", "envelope_ratio_h", "envelope_ratio_ht"]

FIT_SERIES = {"D_u": "D_u", "D_rho": "D_rho", "x_plus": "x_plus", "dx_plus": "dx_plus_dt"}


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "perturbed"
    gamma: float = 2.0
    mass: float = 1.0
    n_cells: int = 400
    cfl: float = 0.5
    t_end: float = 1000.0
    snapshots: int = 64
    snapshot_times: tuple | None = None
    perturbation: str = "polynomial"
    epsilon: float = 1e-3
    q: int = 1
    r: int = 1
    velocity_epsilon: float = 0.0
    q1: int | None = None
    r1: int | None = None
    rel_tol: float = 1e-10
    fit_window: tuple | None = None
    output_dir: str | None = None
    seed: int = 0  # reserved, runs are deterministic

    def perturbation_spec(self) -> PerturbationSpec:
        if self.scenario == "exact" or self.perturbation == "none":
            return PerturbationSpec()
        return PerturbationSpec(
            kind="polynomial",
            amplitude=self.epsilon,
            q=self.q,
            r=self.r,
            velocity_amplitude=self.velocity_epsilon,
            q1=self.q1,
            r1=self.r1,
        )

    def window(self) -> tuple:
        return self.fit_window if self.fit_window is not None else (10.0, self.t_end / 10.0)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if v is None:
                continue
            if isinstance(v, tuple):
                v = ", ".join(repr(float(x)) for x in v)
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


_INT_KEYS = {"n_cells", "snapshots", "q", "r", "q1", "r1", "seed"}
_FLOAT_KEYS = {"gamma", "mass", "cfl", "t_end", "epsilon", "velocity_epsilon", "rel_tol"}
_TUPLE_KEYS = {"snapshot_times", "fit_window"}


def _convert(key, raw):
    try:
        if key in _INT_KEYS:
            f = float(raw)
            if f != int(f):
                raise ValueError
            return int(f)
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _TUPLE_KEYS:
            return tuple(float(v) for v in raw.replace(";", ",").split(",") if v.strip())
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse value {raw!r}", key=key) from None
    return raw


def _validate(cfg: RunConfig) -> RunConfig:
    def bad(key, msg):
        raise ConfigurationError(f"{key}: {msg}", key=key)

    finite = {k: getattr(cfg, k) for k in _FLOAT_KEYS}
    for k, v in finite.items():
        if not math.isfinite(v):
            bad(k, "must be finite")
    if cfg.scenario not in ("perturbed", "exact"):
        bad("scenario", "must be 'perturbed' or 'exact'")
    if cfg.perturbation not in ("polynomial", "none"):
        bad("perturbation", "must be 'polynomial' or 'none'")
    if not cfg.gamma > 1:
        bad("gamma", f"must exceed 1, got {cfg.gamma}")
    if not cfg.mass > 0:
        bad("mass", f"must be positive, got {cfg.mass}")
    if cfg.n_cells < 16 or cfg.n_cells % 2:
        bad("n_cells", f"must be an even integer >= 16, got {cfg.n_cells}")
    if not 0 < cfg.cfl <= 1:
        bad("cfl", f"must lie in (0, 1], got {cfg.cfl}")
    if not cfg.t_end >= 0:
        bad("t_end", f"must be >= 0, got {cfg.t_end}")
    if cfg.snapshots < 1:
        bad("snapshots", "must be >= 1")
    if not 1e-13 <= cfg.rel_tol <= 1e-6:
        bad("rel_tol", f"must lie in [1e-13, 1e-6], got {cfg.rel_tol}")
    for k in ("q", "r", "q1", "r1"):
        v = getattr(cfg, k)
        if v is not None and v < 1:
            bad(k, "must be >= 1")
    if cfg.snapshot_times is not None:
        ts = cfg.snapshot_times
        if list(ts) != sorted(ts) or (ts and (ts[0] < 0 or ts[-1] > cfg.t_end)):
            bad("snapshot_times", "must be sorted and within [0, t_end]")
    if cfg.fit_window is not None:
        if len(cfg.fit_window) != 2 or not cfg.fit_window[0] < cfg.fit_window[1]:
            bad("fit_window", "must be 'lo, hi' with lo < hi")
    return cfg


def parse_config(text: str) -> RunConfig:
    """Parse ``key = value`` lines into a validated :class:`RunConfig`."""
    known = {f.name for f in fields(RunConfig)}
    seen = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigurationError(f"unknown key {key!r} on line {lineno}", key=key)
        if key in seen:
            raise ConfigurationError(f"duplicate key {key!r} on line {lineno}", key=key)
        seen[key] = _convert(key, raw)
    return _validate(RunConfig(**seen))


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def snapshot_schedule(cfg: RunConfig) -> np.ndarray:
    """Snapshot times; the default spacing is uniform in ``log(1 + t)``."""
    if cfg.snapshot_times is not None:
        return np.unique(np.concatenate([[0.0], cfg.snapshot_times]))
    if cfg.t_end == 0 or cfg.snapshots < 2:
        return np.array([0.0])
    k = np.arange(cfg.snapshots)
    ts = (1.0 + cfg.t_end) ** (k / (cfg.snapshots - 1)) - 1.0
    ts[-1] = cfg.t_end
    return ts


@dataclass
class Bundle:
    directory: str
    status: str
    exit_code: int
    stage: str | None = None
    error: str | None = None
    report: object = None


# -- file helpers ---------------------------------------------------------------

def _num(v):
    if v is None:
        return ""
    v = float(v)
    return repr(v) if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return _num(v)


def write_json(path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_table(path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def read_table(path) -> dict:
    """Read a CSV into ``{column: float array}``; blanks become NaN."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        return {}
    return {k: np.array([float(r[k]) if r[k] != "" else math.nan for r in rows]) for k in rows[0]}


# -- ansatz -----------------------------------------------------------------------

def ansatz_summary(table) -> dict:
    env = ans.decay_envelope_check(table)
    out = {
        "gamma": table.gamma,
        "t_end": table.t_end,
        "rel_tol": table.rel_tol,
        "K_observed": env.K_observed,
        "derivative_sup": {str(k): v for k, v in env.derivative_sup.items()},
        "h_ratio_sup": env.h_ratio_sup,
        "h_t_ratio_sup": env.h_t_ratio_sup,
        "duhamel_residual": ans.duhamel_residual(table),
        "t0": None,
        "t1": None,
        "t2": None,
        "terminal_h": float(table.h[-1]),
    }
    try:
        ph = ans.phase_portrait(table)
        out.update(t0=ph.t0, t1=ph.t1, t2=ph.t2, terminal_h=ph.terminal_h)
    except HorizonError as exc:
        out["phase_error"] = str(exc)
    return out


def write_ansatz(directory, table) -> dict:
    g = table.gamma
    t = table.times
    one = 1.0 + t
    lg = np.log(one)
    rows = []
    for i in range(t.size):
        if t[i] >= 1.0:
            rh = table.h[i] / (one[i] ** (-g / (g + 1)) * lg[i])
            rht = abs(table.h_t[i]) / (one[i] ** (-1 - g / (g + 1)) * lg[i])
        else:
            rh = rht = None
        rows.append([t[i], table.eta_x[i], table.eta_xt[i], table.eta_xtt[i], table.h[i], table.h_t[i], rh, rht])
    write_table(os.path.join(directory, "ansatz.csv"), ANSATZ_COLUMNS, rows)
    summary = ansatz_summary(table)
    write_json(os.path.join(directory, "ansatz_summary.json"), summary)
    return summary


def run_ansatz(cfg: RunConfig, output_dir=None) -> dict:
    """Integrate the ansatz for ``cfg`` and write ``ansatz.csv`` plus its summary."""
    directory = output_dir or cfg.output_dir or "."
    os.makedirs(directory, exist_ok=True)
    p = derive_constants(cfg.gamma, cfg.mass)
    table = ans.integrate_ansatz(p, max(cfg.t_end, 1.0), cfg.rel_tol)
    return write_ansatz(directory, table)


# -- scenarios ------------------------------------------------------------------------

def run_scenario(cfg: RunConfig, output_dir=None) -> Bundle:
    """Run ansatz, solver, diagnostics and theorem report; write every artifact."""
    directory = output_dir or cfg.output_dir or f"run_{cfg.scenario}"
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "config.txt"), "w") as fh:
        fh.write(cfg.to_text())
    stage = "constants"
    try:
        p = derive_constants(cfg.gamma, cfg.mass)
        stage = "ansatz"
        table = ans.integrate_ansatz(p, max(cfg.t_end, 1.0), cfg.rel_tol)
        write_ansatz(directory, table)
        stage = "solver"
        grid = build_grid(p, cfg.n_cells)
        traj = run(p, grid, cfg.perturbation_spec(), cfg.t_end, snapshot_schedule(cfg), cfg.cfl)
        write_trajectory(os.path.join(directory, "snapshots"), traj)
        stage = "diagnostics"
        report = theorem_report(traj, table, p, window=cfg.window())
        s = report.series
        rows = zip(*(s[c] for c in DIAGNOSTIC_COLUMNS))
        write_table(os.path.join(directory, "diagnostics.csv"), DIAGNOSTIC_COLUMNS, rows)
        stage = "report"
        write_json(os.path.join(directory, "theorem_report.json"), report.to_dict())
    except (VacuumEulerError, ArithmeticError, ValueError) as exc:
        logger.error("stage %s failed: %s", stage, exc)
        status = {"status": "failed", "exit_code": EXIT_STAGE, "stage": stage, "error": f"{type(exc).__name__}: {exc}"}
        write_json(os.path.join(directory, "status.json"), status)
        return Bundle(directory, "failed", EXIT_STAGE, stage, status["error"])
    code = EXIT_OK if report.status == "pass" else EXIT_VERDICT
    write_json(os.path.join(directory, "status.json"), {"status": report.status, "exit_code": code, "stage": None, "error": None})
    return Bundle(directory, report.status, code, report=report)


def _sweep_one(args):
    idx, item, root = args
    row = {"index": idx, "gamma": None, "epsilon": None, "n_cells": None, "status": "failed", "exit_code": EXIT_STAGE,
           "error": ""}
    try:
        if isinstance(item, RunConfig):
            cfg = item
        elif os.path.exists(str(item)):
            cfg = load_config(item)
        else:
            cfg = parse_config(str(item))
        row.update(gamma=cfg.gamma, epsilon=0.0 if cfg.scenario == "exact" else cfg.epsilon, n_cells=cfg.n_cells)
        bundle = run_scenario(cfg, os.path.join(root, f"run_{idx:03d}"))
        row.update(status=bundle.status, exit_code=bundle.exit_code, error=bundle.error or "")
        if bundle.report is not None:
            for name in FIT_SERIES:
                fit = bundle.report.fits.get(name)
                row[f"{name}_exponent"] = None if fit is None else fit.exponent
            row["dx_plus_target"] = 1.0 / (cfg.gamma + 1.0) - 1.0
    except Exception as exc:  # crash isolation: one bad run never stops the sweep
        row["error"] = f"{type(exc).__name__}: {exc}"
        logger.debug("%s", traceback.format_exc())
    return row


SWEEP_COLUMNS = ["index", "gamma", "epsilon", "n_cells", "status", "exit_code",
                 "D_u_exponent", "D_rho_exponent", "x_plus_exponent", "dx_plus_exponent", "dx_plus_target", "error"]


def sweep(configs, root="sweep", workers: int = 1) -> list:
    """Run each config in its own subdirectory of ``root`` and write ``summary.csv``.

    Items may be :class:`RunConfig` objects, config paths or config text.
    Runs execute in a process pool when ``workers > 1``; the summary is
    written once, in input order, by the calling process.
    """
    configs = list(configs)
    if not configs:
        raise ConfigurationError("sweep needs at least one configuration")
    os.makedirs(root, exist_ok=True)
    jobs = [(i, c, root) for i, c in enumerate(configs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]
    with open(os.path.join(root, "summary.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in SWEEP_COLUMNS])
    return rows


def verify_bundle(directory) -> tuple:
    """Re-derive the rate fits of a bundle from its CSV and compare with the report.

    Returns ``(exit_code, messages)``.
    """
    msgs = []
    try:
        with open(os.path.join(directory, "theorem_report.json")) as fh:
            report = json.load(fh)
        series = read_table(os.path.join(directory, "diagnostics.csv"))
    except (OSError, ValueError) as exc:
        return EXIT_STAGE, [f"cannot read bundle: {exc}"]
    window = tuple(report["window"])
    consistent = True
    for name, col in FIT_SERIES.items():
        rec = report["fits"].get(name)
        if rec is None:
            continue
        y = np.abs(series[col])
        fit = fit_rate(series["t"], y, window)
        ok = abs(fit.exponent - rec["exponent"]) <= 1e-9 * max(1.0, abs(rec["exponent"]))
        consistent &= ok
        msgs.append(f"{name}: recorded {rec['exponent']:.6f} recomputed {fit.exponent:.6f} {'ok' if ok else 'MISMATCH'}")
    for v in report["verdicts"]:
        msgs.append(f"{v['name']}: {v['status']} (value={v['value']}, target={v['target']}, tol={v['tolerance']})")
    if not consistent:
        return EXIT_STAGE, msgs
    return (EXIT_OK if report["status"] == "pass" else EXIT_VERDICT), msgs


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return _validate(replace(cfg, **kw))


def admissible_epsilon(gamma: float, mass: float = 1.0, n_cells: int = 64, t_end: float = 100.0, q: int = 1,
                       r: int = 1, eps_max: float = 1.0, iterations: int = 12) -> tuple:
    """Empirical bracket ``(lo, hi)`` on the largest admissible perturbation size.

    A size is admissible when the initial map is monotone and the run reaches
    ``t_end`` without losing monotonicity.  Bisection assumes admissibility is
    monotone in ``epsilon``; ``lo`` passed and ``hi`` failed (``hi = inf``
    when ``eps_max`` itself passes).
    """
    p = derive_constants(gamma, mass)
    grid = build_grid(p, n_cells)

    def ok(eps):
        try:
            run(p, grid, PerturbationSpec("polynomial", eps, q, r), t_end)
        except (PerturbationTooLargeError, SteppingError):
            return False
        return True

    if ok(eps_max):
        return eps_max, math.inf
    lo, hi = 0.0, eps_max
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if ok(mid) else (lo, mid)
    return lo, hi
