"""Weighted energies, sup norms, rate fits and theorem checks.

The perturbation of the ansatz is ``w = eta - x * eta_x_ansatz(t)``.  All
integrals use the midpoint rule on the solver grid with the closed-form
weights ``varsigma**a`` evaluated at the cell midpoints.  Time derivatives
``w_tt`` and ``w_ttt`` come from the discrete equation, never from
differencing snapshots.

Only derivatives up to second order in time and space are formed; the full
high-order energy is out of reach of finite differences on degenerate
weights.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .ansatz import AnsatzTable, barenblatt_stretch
from .errors import FitError, ParameterError
from .gas import GasParameters
from .solver import Grid, SolverState, Trajectory, acceleration, jerk, node_gradient

__all__ = [
    "PerturbationFields",
    "EnergyReport",
    "RateFit",
    "TheoremReport",
    "fields_from_samples",
    "perturbation_fields",
    "energy",
    "energy_mixed",
    "energy_report",
    "sup_bundle",
    "hardy_check",
    "elliptic_ratio",
    "fit_rate",
    "theorem_report",
    "DEFAULT_TOLERANCES",
]

MIXED_ORDERS = ((0, 1), (1, 1), (0, 2))


def node_second_derivative(f, dx):
    """Second-order ``d2/dx2`` at nodes; 4-point one-sided at the ends."""
    f = np.asarray(f, dtype=float)
    g = np.empty_like(f)
    g[1:-1] = (f[2:] - 2.0 * f[1:-1] + f[:-2]) / dx**2
    g[0] = (2.0 * f[0] - 5.0 * f[1] + 4.0 * f[2] - f[3]) / dx**2
    g[-1] = (2.0 * f[-1] - 5.0 * f[-2] + 4.0 * f[-3] - f[-4]) / dx**2
    return g


@dataclass(frozen=True)
class PerturbationFields:
    """Nodal samples of ``w`` and the derivatives the energies need."""

    t: float
    x: np.ndarray
    dx: float
    w: np.ndarray
    w_t: np.ndarray
    w_tt: np.ndarray
    w_ttt: np.ndarray
    w_x: np.ndarray
    w_tx: np.ndarray
    w_ttx: np.ndarray
    w_xx: np.ndarray
    w_txx: np.ndarray

    def scaled(self, c: float) -> "PerturbationFields":
        """Fields of ``c * w`` with every derivative frozen and scaled."""
        kw = {k: (v * c if isinstance(v, np.ndarray) and k != "x" else v) for k, v in self.__dict__.items()}
        return PerturbationFields(**kw)


def fields_from_samples(grid: Grid, t, w, w_t, w_tt=None, w_ttt=None) -> PerturbationFields:
    """Build fields from nodal time derivatives; space derivatives by differences."""
    z = np.zeros_like(grid.nodes)
    w = np.asarray(w, dtype=float)
    w_t = np.asarray(w_t, dtype=float)
    w_tt = z if w_tt is None else np.asarray(w_tt, dtype=float)
    w_ttt = z if w_ttt is None else np.asarray(w_ttt, dtype=float)
    dx = grid.dx
    return PerturbationFields(
        t=float(t),
        x=grid.nodes,
        dx=dx,
        w=w,
        w_t=w_t,
        w_tt=w_tt,
        w_ttt=w_ttt,
        w_x=node_gradient(w, dx),
        w_tx=node_gradient(w_t, dx),
        w_ttx=node_gradient(w_tt, dx),
        w_xx=node_second_derivative(w, dx),
        w_txx=node_second_derivative(w_t, dx),
    )


def perturbation_fields(state: SolverState, grid: Grid, table: AnsatzTable, p: GasParameters) -> PerturbationFields:
    """Perturbation ``w = eta - x * eta_x(t)`` and its derivatives at a snapshot."""
    a = table.evaluate(state.t)
    x = grid.nodes
    eta_tt = acceleration(grid, state, p)
    eta_ttt = jerk(grid, state, p, eta_tt)
    return fields_from_samples(
        grid,
        state.t,
        state.eta - x * a["eta_x"],
        state.eta_t - x * a["eta_xt"],
        eta_tt - x * a["eta_xtt"],
        eta_ttt - x * a["eta_xttt"],
    )


def _avg(f):
    return 0.5 * (f[1:] + f[:-1])


def _dmid(f, dx):
    return np.diff(f) / dx


def energy(fields: PerturbationFields, grid: Grid, p: GasParameters, j: int) -> float:
    """Time-weighted energy ``E_j`` for ``j`` in 0, 1, 2."""
    series = (fields.w, fields.w_t, fields.w_tt, fields.w_ttt)
    if j not in (0, 1, 2):
        raise ParameterError(f"energy order j={j} not supported (j <= 2)")
    a = p.alpha
    s = grid.varsigma_mids
    tw = 1.0 + fields.t
    f = series[j]
    integrand = s**a * _avg(f) ** 2 + s ** (a + 1) * _dmid(f, fields.dx) ** 2 + tw * s**a * _avg(series[j + 1]) ** 2
    return float(tw ** (2 * j) * np.sum(integrand) * grid.dx)


def energy_mixed(fields: PerturbationFields, grid: Grid, p: GasParameters, j: int, i: int) -> float:
    """Mixed space norm ``E_{j,i}`` for ``(j, i)`` in (0,1), (1,1), (0,2)."""
    if (j, i) not in MIXED_ORDERS:
        raise ParameterError(f"mixed energy (j={j}, i={i}) not supported")
    dx = fields.dx
    base, base_xx = (fields.w, fields.w_xx) if j == 0 else (fields.w_t, fields.w_txx)
    # space derivatives of order 1..3 at mids
    d = {1: _dmid(base, dx), 2: _avg(base_xx), 3: _dmid(base_xx, dx)}
    a = p.alpha
    s = grid.varsigma_mids
    integrand = s ** (a + i + 1) * d[i + 1] ** 2 + s ** (a + i - 1) * d[i] ** 2
    return float((1.0 + fields.t) ** (2 * j) * np.sum(integrand) * grid.dx)


def sup_bundle(fields: PerturbationFields, p: GasParameters) -> float:
    """Truncated weighted sup-norm bundle.

    Sum at each node of ``(1+t)^{2j} |d_t^j w|^2`` (j <= 2),
    ``(1+t)^{2j} |d_t^j w_x|^2`` (j <= 1) and the degenerate-weight terms
    ``|rho0^{(g-1)/2} w_xx|^2``, ``(1+t)^2 |rho0^{g-1} w_txx|^2``; the
    maximum over nodes is returned.
    """
    s = np.maximum(p.A - p.B * fields.x**2, 0.0)
    tw = 1.0 + fields.t
    total = (
        fields.w**2
        + tw**2 * fields.w_t**2
        + tw**4 * fields.w_tt**2
        + fields.w_x**2
        + tw**2 * fields.w_tx**2
        + s * fields.w_xx**2
        + tw**2 * s**2 * fields.w_txx**2
    )
    return float(np.max(total))


@dataclass(frozen=True)
class EnergyReport:
    t: float
    E0: float
    E1: float
    E2: float
    E0_tilde: float
    E01: float
    E11: float
    E02: float
    sup_bundle: float

    def mixed(self, j, i):
        return {(0, 1): self.E01, (1, 1): self.E11, (0, 2): self.E02}[(j, i)]


def energy_report(fields: PerturbationFields, grid: Grid, p: GasParameters) -> EnergyReport:
    E0 = energy(fields, grid, p, 0)
    mass_term = float(np.sum(grid.varsigma_mids**p.alpha * _avg(fields.w) ** 2) * grid.dx)
    return EnergyReport(
        t=fields.t,
        E0=E0,
        E1=energy(fields, grid, p, 1),
        E2=energy(fields, grid, p, 2),
        E0_tilde=max(E0 - mass_term, 0.0),
        E01=energy_mixed(fields, grid, p, 0, 1),
        E11=energy_mixed(fields, grid, p, 1, 1),
        E02=energy_mixed(fields, grid, p, 0, 2),
        sup_bundle=sup_bundle(fields, p),
    )


def hardy_check(grid: Grid, F, k: float) -> tuple:
    """Both sides of the boundary Hardy inequality and their ratio.

    ``lhs = int d^{k-2} F^2``, ``rhs = int d^k (F^2 + F_x^2)`` with ``d`` the
    distance to the interval ends.  ``F`` is a callable or nodal samples.
    """
    if not k > 1:
        raise ParameterError(f"Hardy weight power must exceed 1, got {k}")
    x = grid.nodes
    f = np.asarray(F(x) if callable(F) else F, dtype=float) * np.ones_like(x)
    L = x[-1]
    d = np.minimum(grid.mids + L, L - grid.mids)
    fm = _avg(f)
    fx = _dmid(f, grid.dx)
    lhs = float(np.sum(d ** (k - 2.0) * fm**2) * grid.dx)
    rhs = float(np.sum(d**k * (fm**2 + fx**2)) * grid.dx)
    if lhs == 0.0:
        return lhs, rhs, 0.0
    return lhs, rhs, (lhs / rhs if rhs > 0 else math.inf)


def elliptic_ratio(reports, j: int = 0, i: int = 1) -> np.ndarray:
    """``E_{j,i} / (E0_tilde + sum_{1 <= m <= i+j} E_m)`` per report.

    0/0 is reported as 0 and x/0 as ``inf``.
    """
    if (j, i) not in MIXED_ORDERS:
        raise ParameterError(f"elliptic ratio for (j={j}, i={i}) not supported")
    out = []
    for r in reports:
        num = r.mixed(j, i)
        den = r.E0_tilde + sum((r.E1, r.E2)[: i + j])
        if den > 0:
            out.append(num / den)
        else:
            out.append(0.0 if num == 0 else math.inf)
    return np.array(out)


@dataclass(frozen=True)
class RateFit:
    exponent: float
    intercept: float
    r_squared: float
    window: tuple
    n_points: int


def fit_rate(t, y, window=None) -> RateFit:
    """Least-squares slope of ``log y`` against ``log(1 + t)`` inside ``window``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window is None:
        window = (float(t.min()), float(t.max()))
    lo, hi = window
    m = (t >= lo) & (t <= hi)
    if m.sum() < 8:
        raise FitError(f"need at least 8 samples in window [{lo}, {hi}], got {int(m.sum())}")
    if np.any(~(y[m] > 0)):
        raise FitError("fit requires strictly positive samples")
    X = np.log1p(t[m])
    Y = np.log(y[m])
    slope, intercept = np.polyfit(X, Y, 1)
    resid = Y - (slope * X + intercept)
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0 else min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return RateFit(float(slope), float(intercept), r2, (float(lo), float(hi)), int(m.sum()))


# -- theorem report ------------------------------------------------------------

DEFAULT_TOLERANCES = {
    "D_u_exponent": 0.15,
    "D_rho_exponent": 0.15,
    "x_plus_exponent": 0.02,
    "dx_plus_exponent": 0.05,
    "symmetry": 1e-10,
    "energy_growth": 2.0,
    "bundle_growth": 4.0,
    "elliptic_spread": 10.0,
    "separable_error": 1e-3,
}


def _time_derivative(t, y):
    """``dy/dt`` from samples, Richardson-extrapolated when ``log(1+t)`` is uniform."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    tau = np.log1p(t)
    dtau = np.diff(tau)
    if t.size >= 5 and np.allclose(dtau, dtau[0], rtol=1e-9, atol=0):
        h = dtau[0]
        d1 = np.gradient(y, h)
        d = d1.copy()
        # centred differences with steps h and 2h combine to fourth order
        d[2:-2] = (8.0 * (y[3:-1] - y[1:-3]) - (y[4:] - y[:-4])) / (12.0 * h)
        return d / (1.0 + t)
    return np.gradient(y, t)


@dataclass
class TheoremReport:
    header: dict
    window: tuple
    zero_perturbation: bool
    series: dict = field(repr=False)
    fits: dict = field(default_factory=dict)
    verdicts: list = field(default_factory=list)
    status: str = "pass"

    def to_dict(self) -> dict:
        return {
            "header": self.header,
            "window": list(self.window),
            "zero_perturbation": self.zero_perturbation,
            "fits": {k: asdict(v) for k, v in self.fits.items()},
            "verdicts": self.verdicts,
            "status": self.status,
        }

    @property
    def rate_failed(self) -> bool:
        return any(v["status"] == "fail" for v in self.verdicts)


def _verdict(name, value, target, tol, passed, kind="rate", status=None):
    return {
        "name": name,
        "kind": kind,
        "value": value,
        "target": target,
        "tolerance": tol,
        "status": status or ("pass" if passed else "fail"),
    }


def theorem_report(
    trajectory: Trajectory,
    table: AnsatzTable,
    p: GasParameters,
    window=None,
    tolerances=None,
) -> TheoremReport:
    """Evaluate every per-snapshot series and check the asymptotic laws.

    Series: weighted density gap ``D_rho = sup |1/eta_x - 1/eta_bar_x|``,
    velocity gap ``D_u = sup |eta_t - x * eta_bar_xt|``, the vacuum boundaries
    and their first two time derivatives, energies and the sup bundle.
    Exponents are fitted on ``window`` (default ``[10, t_end/10]``).
    """
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(tolerances or {})
    g = p.gamma
    grid = trajectory.grid
    x = grid.nodes
    snaps = trajectory.snapshots
    t = trajectory.times
    t_end = float(t[-1])
    if window is None:
        window = (10.0, t_end / 10.0)
    window = (float(window[0]), float(window[1]))

    reports, D_rho, D_rho_raw, D_u, sep_err = [], [], [], [], []
    for s in snaps:
        f = perturbation_fields(s, grid, table, p)
        reports.append(energy_report(f, grid, p))
        eb = float(barenblatt_stretch(g, s.t))
        ebt = float(barenblatt_stretch(g, s.t, 1))
        ex = np.diff(s.eta) / grid.dx
        gap = np.abs(1.0 / ex - 1.0 / eb)
        D_rho.append(float(np.max(gap)))
        D_rho_raw.append(float(np.max(grid.rho0_mids * gap)))
        D_u.append(float(np.max(np.abs(s.eta_t - x * ebt))))
        ex_ans = float(table.evaluate(s.t)["eta_x"])
        sep_err.append(float(np.max(np.abs(f.w)) / (p.half_width * ex_ans)))

    x_plus = np.array([s.eta[-1] for s in snaps])
    x_minus = np.array([s.eta[0] for s in snaps])
    v_plus = np.array([s.eta_t[-1] for s in snaps])
    a_plus = _time_derivative(t, v_plus) if t.size >= 3 else np.zeros_like(t)
    series = {
        "t": t,
        "E0": np.array([r.E0 for r in reports]),
        "E0_tilde": np.array([r.E0_tilde for r in reports]),
        "E1": np.array([r.E1 for r in reports]),
        "E2": np.array([r.E2 for r in reports]),
        "E01": np.array([r.E01 for r in reports]),
        "E11": np.array([r.E11 for r in reports]),
        "sup_bundle": np.array([r.sup_bundle for r in reports]),
        "D_rho": np.array(D_rho),
        "D_rho_unweighted": np.array(D_rho_raw),
        "D_u": np.array(D_u),
        "x_plus": x_plus,
        "x_minus": x_minus,
        "dx_plus_dt": v_plus,
        "d2x_plus_dt2": a_plus,
        "x_plus_scaled": x_plus / (1.0 + t) ** (1.0 / (g + 1.0)),
        "elliptic_ratio_01": elliptic_ratio(reports, 0, 1),
        "separable_error": np.array(sep_err),
    }
    s0 = snaps[0]
    w0 = s0.eta - x
    w1 = s0.eta_t - x / (g + 1.0)
    zero = bool(np.max(np.abs(w0)) <= 1e-14 * p.half_width and np.max(np.abs(w1)) <= 1e-14 * p.half_width)
    odd = bool(np.array_equal(s0.eta, -s0.eta[::-1]) and np.array_equal(s0.eta_t, -s0.eta_t[::-1]))

    rep = TheoremReport(
        header={**p.header(), "n_cells": grid.n_cells, "t_end": t_end},
        window=window,
        zero_perturbation=zero,
        series=series,
    )
    span_ok = (1.0 + t_end) / (1.0 + t[0]) >= 100.0
    targets = {
        "D_u": -1.0,
        "D_rho": -2.0 / (g + 1.0),
        "x_plus": 1.0 / (g + 1.0),
        "dx_plus": 1.0 / (g + 1.0) - 1.0,
    }
    fit_inputs = {
        "D_u": series["D_u"],
        "D_rho": series["D_rho"],
        "x_plus": x_plus,
        "dx_plus": np.abs(v_plus),
        "d2x_plus": np.abs(a_plus),
    }
    for name, y in fit_inputs.items():
        try:
            rep.fits[name] = fit_rate(t, y, window)
        except FitError:
            pass

    for name, target in targets.items():
        key = f"{name}_exponent"
        fit = rep.fits.get(name)
        if not span_ok or fit is None:
            rep.verdicts.append(_verdict(key, None, target, tol[key], False, status="inconclusive"))
        elif zero and name in ("D_u", "D_rho"):
            # with no perturbation these gaps are pure ansatz correction; the
            # ln-envelope checks below apply instead
            rep.verdicts.append(_verdict(key, fit.exponent, target, tol[key], False, status="n/a"))
        else:
            rep.verdicts.append(
                _verdict(key, fit.exponent, target, tol[key], abs(fit.exponent - target) <= tol[key])
            )

    if odd:
        sym = float(np.max(np.abs(x_minus + x_plus)))
        rep.verdicts.append(_verdict("boundary_symmetry", sym, 0.0, tol["symmetry"], sym <= tol["symmetry"], "bound"))

    late = t >= 1.0
    if late.any():
        lg = np.log1p(t[late])
        env_u = p.half_width * (1.0 + t[late]) ** (-1.0 - g / (g + 1.0)) * lg
        if zero:
            worst = float(np.max(series["D_u"][late] / env_u))
            rep.verdicts.append(_verdict("D_u_ln_envelope", worst, 1.0, 0.0, worst <= 1.0 + 1e-6, "bound"))
            worst = float(np.max(series["separable_error"]))
            rep.verdicts.append(
                _verdict("separable_error", worst, 0.0, tol["separable_error"], worst <= tol["separable_error"], "bound")
            )

    if not zero:
        E0 = series["E0"]
        grow = float(np.max(E0) / E0[0]) if E0[0] > 0 else math.inf
        rep.verdicts.append(_verdict("energy_growth", grow, 1.0, tol["energy_growth"], grow <= tol["energy_growth"], "bound"))
        sb = series["sup_bundle"]
        grow = float(np.max(sb) / sb[0]) if sb[0] > 0 else math.inf
        rep.verdicts.append(_verdict("bundle_growth", grow, 1.0, tol["bundle_growth"], grow <= tol["bundle_growth"], "bound"))
        er = series["elliptic_ratio_01"]
        spread = float(np.max(er) / np.median(er)) if np.median(er) > 0 else math.inf
        rep.verdicts.append(
            _verdict("elliptic_spread", spread, 1.0, tol["elliptic_spread"], spread <= tol["elliptic_spread"], "bound")
        )

    statuses = {v["status"] for v in rep.verdicts}
    if "fail" in statuses:
        rep.status = "fail"
    elif "inconclusive" in statuses:
        rep.status = "inconclusive"
    return rep
