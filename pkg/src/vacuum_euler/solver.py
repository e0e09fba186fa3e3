"""Finite-difference evolution of the Lagrangian free-boundary problem.

The unknown is the flow map ``eta(x, t)`` on the fixed reference interval
``[-L, L]``; it obeys

    rho0 * eta_tt + rho0 * eta_t + (rho0**gamma / eta_x**gamma)_x = 0,

where ``rho0 = varsigma**alpha`` is the initial Barenblatt density and
vanishes at both ends.  Nodes carry ``eta`` and ``eta_t``; cell faces carry
the flux ``rho0**gamma * eta_x**-gamma``, which is exactly zero at the two
vacuum faces.  End nodes use the form obtained by dividing the flux
divergence by ``rho0`` first, which is regular where ``varsigma = 0``.
"""
from __future__ import annotations

import csv
import logging
import math
import os
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, PerturbationTooLargeError, SteppingError
from .gas import GasParameters, initial_weight

__all__ = [
    "Grid",
    "SolverState",
    "PerturbationSpec",
    "PhysicalFields",
    "Trajectory",
    "build_grid",
    "init_state",
    "acceleration",
    "jerk",
    "node_gradient",
    "cfl_dt",
    "step",
    "physical_fields",
    "run",
    "write_snapshot",
    "read_snapshot",
    "write_trajectory",
    "read_trajectory_index",
]

logger = logging.getLogger(__name__)

DT_FLOOR = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform Lagrangian mesh on ``[-L, L]`` with closed-form weights."""

    n_cells: int
    nodes: np.ndarray
    mids: np.ndarray
    dx: float
    rho0_nodes: np.ndarray
    rho0_mids: np.ndarray
    varsigma_nodes: np.ndarray
    varsigma_mids: np.ndarray
    varsigma_x_nodes: np.ndarray
    flux_weight_mids: np.ndarray  # rho0**gamma = varsigma**(alpha+1) at mids


@dataclass(frozen=True)
class SolverState:
    t: float
    eta: np.ndarray
    eta_t: np.ndarray
    step_count: int = 0


@dataclass(frozen=True)
class PerturbationSpec:
    """Initial perturbation of the ansatz flow map.

    For ``kind="polynomial"`` the displacement is
    ``w0 = amplitude * L * (x/L)**q * (1 - (x/L)**2)**r`` and the velocity
    perturbation ``w1`` has the same form with ``velocity_amplitude``, ``q1``
    and ``r1`` (defaulting to ``q`` and ``r``).  ``kind="custom"`` takes
    nodal samples ``w0`` / ``w1`` directly.
    """

    kind: str = "none"
    amplitude: float = 0.0
    q: int = 1
    r: int = 1
    velocity_amplitude: float = 0.0
    q1: int | None = None
    r1: int | None = None
    w0: np.ndarray | None = field(default=None, compare=False)
    w1: np.ndarray | None = field(default=None, compare=False)
    check_vacuum_condition: str = "warn"  # "warn" | "error" | "off"

    def displacement(self, grid: Grid, L: float) -> tuple:
        """Return ``(w0, w0_x)`` at the nodes."""
        x = grid.nodes
        if self.kind == "none":
            z = np.zeros_like(x)
            return z, z.copy()
        if self.kind == "polynomial":
            return _poly_shape(x, L, self.amplitude, self.q, self.r)
        if self.kind == "custom":
            if self.w0 is None:
                z = np.zeros_like(x)
                return z, z.copy()
            w0 = np.asarray(self.w0, dtype=float)
            if w0.shape != x.shape:
                raise ConfigurationError("custom w0 must be sampled at the grid nodes", key="w0")
            return w0.copy(), node_gradient(w0, grid.dx)
        raise ConfigurationError(f"unknown perturbation kind {self.kind!r}", key="perturbation")

    def velocity(self, grid: Grid, L: float) -> np.ndarray:
        x = grid.nodes
        if self.kind == "polynomial":
            q1 = self.q if self.q1 is None else self.q1
            r1 = self.r if self.r1 is None else self.r1
            return _poly_shape(x, L, self.velocity_amplitude, q1, r1)[0]
        if self.kind == "custom" and self.w1 is not None:
            w1 = np.asarray(self.w1, dtype=float)
            if w1.shape != x.shape:
                raise ConfigurationError("custom w1 must be sampled at the grid nodes", key="w1")
            return w1.copy()
        return np.zeros_like(x)


def _poly_shape(x, L, eps, q, r):
    if int(q) != q or int(r) != r or q < 1 or r < 1:
        raise ConfigurationError(f"shape exponents must be integers >= 1, got q={q}, r={r}", key="q")
    s = x / L
    b = 1.0 - s * s
    w = eps * L * s**q * b**r
    w_x = eps * (q * s ** (q - 1) * b**r - 2.0 * r * s ** (q + 1) * b ** (r - 1))
    return w, w_x


@dataclass(frozen=True)
class PhysicalFields:
    positions: np.ndarray  # eta at nodes
    density_mids: np.ndarray
    velocity_nodes: np.ndarray
    x_minus: float
    x_plus: float


@dataclass
class Trajectory:
    """Ordered snapshots of one run."""

    params: GasParameters
    grid: Grid
    snapshots: list

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])


def build_grid(p: GasParameters, n_cells: int) -> Grid:
    """Uniform grid with ``n_cells`` cells; ``n_cells`` must be even and >= 16."""
    if int(n_cells) != n_cells or n_cells < 16 or n_cells % 2:
        raise ConfigurationError(f"n_cells must be an even integer >= 16, got {n_cells}", key="n_cells")
    n = int(n_cells)
    L = p.half_width
    i = np.arange(n + 1)
    # (2i - n)/n is exact and antisymmetric, so the mesh is symmetric bit for bit
    nodes = L * ((2 * i - n) / n)
    nodes[0], nodes[-1] = -L, L
    mids = L * ((2 * np.arange(n) + 1 - n) / n)
    rho_n, sig_n = initial_weight(p, nodes)
    rho_m, sig_m = initial_weight(p, mids)
    return Grid(
        n_cells=n,
        nodes=nodes,
        mids=mids,
        dx=2.0 * L / n,
        rho0_nodes=rho_n,
        rho0_mids=rho_m,
        varsigma_nodes=sig_n,
        varsigma_mids=sig_m,
        varsigma_x_nodes=-2.0 * p.B * nodes,
        flux_weight_mids=sig_m ** (p.alpha + 1.0),
    )


def node_gradient(f, dx):
    """Second-order ``d/dx`` at nodes: centred inside, one-sided at the ends."""
    f = np.asarray(f, dtype=float)
    g = np.empty_like(f)
    g[1:-1] = (f[2:] - f[:-2]) / (2.0 * dx)
    g[0] = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * dx)
    g[-1] = (3.0 * f[-1] - 4.0 * f[-2] + f[-3]) / (2.0 * dx)
    return g


def _check_monotone(eta, t=None):
    d = np.diff(eta)
    bad = np.flatnonzero(~(d > 0))
    if bad.size:
        raise SteppingError(
            f"flow map not monotone at t={t}: cell {bad[0]} has eta_x={d[bad[0]]:.3e}",
            t=t,
            index=int(bad[0]),
        )
    return d


def init_state(grid: Grid, spec: PerturbationSpec, p: GasParameters) -> SolverState:
    """``eta = x + w0``, ``eta_t = x/(gamma+1) + w1`` at the nodes."""
    w0, w0_x = spec.displacement(grid, p.half_width)
    stretch = 1.0 + w0_x
    if np.any(~(stretch > 0)) or not np.all(np.isfinite(stretch)):
        i = int(np.argmin(stretch))
        raise PerturbationTooLargeError(
            f"initial eta_x = 1 + w0_x = {stretch[i]:.3e} <= 0 at node {i}", key="epsilon"
        )
    eta = grid.nodes + w0
    if np.any(np.diff(eta) <= 0):
        raise PerturbationTooLargeError("initial flow map is not strictly increasing", key="epsilon")
    if spec.kind == "custom" and spec.check_vacuum_condition != "off":
        _vacuum_condition(grid, p, stretch, spec.check_vacuum_condition)
    eta_t = grid.nodes / (p.gamma + 1.0) + spec.velocity(grid, p.half_width)
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(eta_t))):
        raise ConfigurationError("initial data is not finite", key="perturbation")
    return SolverState(t=0.0, eta=eta, eta_t=eta_t, step_count=0)


def _vacuum_condition(grid, p, stretch, mode):
    # initial sound speed squared is gamma * varsigma / eta_x**(gamma-1); its
    # x-derivative at the ends must be finite and nonzero
    c2 = p.gamma * grid.varsigma_nodes * stretch ** (1.0 - p.gamma)
    slope = node_gradient(c2, grid.dx)[[0, -1]]
    ok = np.all(np.isfinite(slope)) and np.all(np.abs(slope) > 0)
    if not ok:
        msg = f"physical vacuum condition violated: boundary slopes of c^2 = {slope}"
        if mode == "error":
            raise ConfigurationError(msg, key="perturbation")
        warnings.warn(msg, stacklevel=3)


def acceleration(grid: Grid, state: SolverState, p: GasParameters) -> np.ndarray:
    """Nodal ``eta_tt`` from the discrete momentum balance."""
    return _accel(grid, p, state.eta, state.eta_t, state.t)


def _accel(grid, p, eta, eta_t, t=None):
    dx = grid.dx
    ex = _check_monotone(eta, t) / dx
    flux = grid.flux_weight_mids * ex**-p.gamma
    a = np.empty_like(eta)
    a[1:-1] = -eta_t[1:-1] - (flux[1:] - flux[:-1]) / (dx * grid.rho0_nodes[1:-1])
    ex_l = (-3.0 * eta[0] + 4.0 * eta[1] - eta[2]) / (2.0 * dx)
    ex_r = (3.0 * eta[-1] - 4.0 * eta[-2] + eta[-3]) / (2.0 * dx)
    k = p.alpha + 1.0
    a[0] = -eta_t[0] - k * grid.varsigma_x_nodes[0] * ex_l**-p.gamma
    a[-1] = -eta_t[-1] - k * grid.varsigma_x_nodes[-1] * ex_r**-p.gamma
    return a


def jerk(grid: Grid, state: SolverState, p: GasParameters, eta_tt=None) -> np.ndarray:
    """Nodal ``eta_ttt``: the time derivative of the discrete momentum balance."""
    g = p.gamma
    dx = grid.dx
    eta, eta_t = state.eta, state.eta_t
    if eta_tt is None:
        eta_tt = acceleration(grid, state, p)
    ex = np.diff(eta) / dx
    etx = np.diff(eta_t) / dx
    dflux = -g * grid.flux_weight_mids * ex ** (-g - 1.0) * etx
    j = np.empty_like(eta)
    j[1:-1] = -eta_tt[1:-1] - (dflux[1:] - dflux[:-1]) / (dx * grid.rho0_nodes[1:-1])
    exn = node_gradient(eta, dx)[[0, -1]]
    etxn = node_gradient(eta_t, dx)[[0, -1]]
    k = p.alpha + 1.0
    sx = grid.varsigma_x_nodes[[0, -1]]
    j[[0, -1]] = -eta_tt[[0, -1]] + k * g * sx * exn ** (-g - 1.0) * etxn
    return j


def cfl_dt(grid: Grid, state: SolverState, p: GasParameters, cfl: float = 0.5) -> float:
    """Explicit time step from the local sound speed ``sqrt(g*varsigma) * eta_x**(-(g+1)/2)``."""
    if not 0 < cfl <= 1:
        raise ConfigurationError(f"cfl must lie in (0, 1], got {cfl}", key="cfl")
    ex = np.diff(state.eta) / grid.dx
    speed = np.max(np.sqrt(p.gamma * grid.varsigma_mids) * ex ** (-(p.gamma + 1.0) / 2.0))
    return max(cfl * grid.dx / speed, DT_FLOOR)


def step(grid: Grid, state: SolverState, p: GasParameters, dt: float) -> SolverState:
    """Advance one classical RK4 step; damping is integrated inside the stages."""
    e, v = state.eta, state.eta_t
    t = state.t
    h2 = 0.5 * dt
    a1 = _accel(grid, p, e, v, t)
    e2, v2 = e + h2 * v, v + h2 * a1
    a2 = _accel(grid, p, e2, v2, t + h2)
    e3, v3 = e + h2 * v2, v + h2 * a2
    a3 = _accel(grid, p, e3, v3, t + h2)
    e4, v4 = e + dt * v3, v + dt * a3
    a4 = _accel(grid, p, e4, v4, t + dt)
    eta = e + dt / 6.0 * (v + 2.0 * v2 + 2.0 * v3 + v4)
    eta_t = v + dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
    _check_monotone(eta, t + dt)
    if not (np.all(np.isfinite(eta)) and np.all(np.isfinite(eta_t))):
        raise SteppingError(f"non-finite state after step at t={t + dt}", t=t + dt)
    return SolverState(t=t + dt, eta=eta, eta_t=eta_t, step_count=state.step_count + 1)


def physical_fields(grid: Grid, state: SolverState, p: GasParameters) -> PhysicalFields:
    """Eulerian positions, cell densities ``rho0/eta_x`` and node velocities."""
    ex = _check_monotone(state.eta, state.t) / grid.dx
    return PhysicalFields(
        positions=state.eta.copy(),
        density_mids=grid.rho0_mids / ex,
        velocity_nodes=state.eta_t.copy(),
        x_minus=float(state.eta[0]),
        x_plus=float(state.eta[-1]),
    )


def run(
    p: GasParameters,
    grid: Grid | int,
    perturbation: PerturbationSpec | None,
    t_end: float,
    snapshot_times=None,
    cfl: float = 0.5,
) -> Trajectory:
    """Integrate from ``t = 0`` to ``t_end`` and record snapshots.

    Snapshot times are hit exactly by shortening the step before each one.
    ``t = 0`` is always recorded; ``t_end`` is appended when missing.
    """
    if isinstance(grid, (int, np.integer)):
        grid = build_grid(p, int(grid))
    if t_end < 0 or not math.isfinite(t_end):
        raise ConfigurationError(f"t_end must be finite and >= 0, got {t_end}", key="t_end")
    state = init_state(grid, perturbation or PerturbationSpec(), p)
    times = np.unique(np.asarray([] if snapshot_times is None else snapshot_times, dtype=float))
    if times.size and (times[0] < 0 or times[-1] > t_end):
        raise ConfigurationError("snapshot times must lie in [0, t_end]", key="snapshots")
    times = times[times > 0]
    if t_end > 0 and (times.size == 0 or times[-1] < t_end):
        times = np.append(times, t_end)
    snaps = [state]
    for ts in times:
        while state.t < ts:
            dt = cfl_dt(grid, state, p, cfl)
            if state.t + dt >= ts or ts - (state.t + dt) < 1e-12 * ts:
                dt = ts - state.t
                state = step(grid, state, p, dt)
                state = replace(state, t=float(ts))
            else:
                state = step(grid, state, p, dt)
        snaps.append(state)
    logger.debug("run finished: %d steps to t=%g", state.step_count, state.t)
    return Trajectory(params=p, grid=grid, snapshots=snaps)


# -- snapshot files ----------------------------------------------------------

def _fmt(v):
    return repr(float(v))


def write_snapshot(path, grid: Grid, state: SolverState, p: GasParameters) -> None:
    """Write one snapshot as CSV with a ``# key = value`` header block."""
    dens = physical_fields(grid, state, p).density_mids
    header = dict(p.header())
    header.pop("alpha")
    header["n_cells"] = grid.n_cells
    header["t"] = state.t
    with open(path, "w", newline="") as fh:
        for k, v in header.items():
            fh.write(f"# {k} = {v if isinstance(v, int) else _fmt(v)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x_lagrangian", "eta", "eta_t", "density_mid"])
        for i in range(grid.n_cells + 1):
            d = _fmt(dens[i]) if i < grid.n_cells else ""
            w.writerow([_fmt(grid.nodes[i]), _fmt(state.eta[i]), _fmt(state.eta_t[i]), d])


def read_snapshot(path) -> tuple:
    """Read a snapshot file; returns ``(header dict, SolverState, density)``."""
    header = {}
    rows = []
    with open(path, newline="") as fh:
        lines = fh.readlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            k, v = line[1:].split("=", 1)
            k = k.strip()
            header[k] = int(v) if k == "n_cells" else float(v)
        else:
            body.append(line)
    reader = csv.DictReader(body)
    for row in reader:
        rows.append(row)
    eta = np.array([float(r["eta"]) for r in rows])
    eta_t = np.array([float(r["eta_t"]) for r in rows])
    dens = np.array([float(r["density_mid"]) for r in rows if r["density_mid"] != ""])
    return header, SolverState(t=header["t"], eta=eta, eta_t=eta_t), dens


def write_trajectory(directory, traj: Trajectory) -> str:
    """Write every snapshot plus an index CSV (time, path); returns the index path."""
    os.makedirs(directory, exist_ok=True)
    index = os.path.join(directory, "index.csv")
    with open(index, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "path"])
        for k, s in enumerate(traj.snapshots):
            name = f"snap_{k:04d}.csv"
            write_snapshot(os.path.join(directory, name), traj.grid, s, traj.params)
            w.writerow([_fmt(s.t), name])
    return index


def read_trajectory_index(path) -> list:
    """Return ``[(t, absolute snapshot path), ...]`` from an index file."""
    base = os.path.dirname(os.path.abspath(path))
    with open(path, newline="") as fh:
        return [(float(r["t"]), os.path.join(base, r["path"])) for r in csv.DictReader(fh)]
