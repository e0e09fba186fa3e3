"""Ansatz correction: the spatially uniform stretch ``eta_x(t)`` and ``h(t)``.

The ansatz flow map is ``x * eta_x(t)`` with

    eta_x'' + eta_x' - eta_x**(-gamma) / (gamma+1) = 0,
    eta_x(0) = 1,  eta_x'(0) = 1/(gamma+1),

and ``h = eta_x - (1+t)**(1/(gamma+1))`` is the correction to the
Barenblatt stretch.  The ODE is integrated in the ``(h, h_t)`` variables, in
which ``h`` starts at exactly zero; integrating ``eta_x`` directly and
subtracting the Barenblatt stretch loses all relative accuracy in ``h`` for
small ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import HorizonError, IntegrationError, ParameterError
from .gas import GasParameters

__all__ = [
    "AnsatzTable",
    "PhaseSummary",
    "EnvelopeReport",
    "integrate_ansatz",
    "correction_h",
    "duhamel_residual",
    "phase_portrait",
    "decay_envelope_check",
    "barenblatt_stretch",
]


def barenblatt_stretch(gamma, t, order=0):
    """``d^k/dt^k (1+t)**(1/(gamma+1))`` for ``k = order`` in 0..3."""
    e = 1.0 / (gamma + 1.0)
    coef = 1.0
    for k in range(order):
        coef *= e - k
    return coef * (1.0 + np.asarray(t, dtype=float)) ** (e - order)


def _rhs(gamma):
    g1 = gamma + 1.0

    def f(t, y):
        h, z = y
        eb = (1.0 + t) ** (1.0 / g1)
        # eb**-g - (eb+h)**-g, written to keep full accuracy for small h
        gap = -(eb**-gamma) * math.expm1(-gamma * math.log1p(h / eb))
        ebtt = -gamma / g1**2 * (1.0 + t) ** (1.0 / g1 - 2.0)
        return [z, -z - gap / g1 - ebtt]

    return f


@dataclass(frozen=True)
class AnsatzTable:
    """Dense trajectory of the ansatz stretch and its correction.

    The sample arrays hold values at the accepted integrator steps; any other
    time is served by the degree-7 dense output through :meth:`evaluate`.
    """

    gamma: float
    rel_tol: float
    times: np.ndarray
    eta_x: np.ndarray
    eta_xt: np.ndarray
    eta_xtt: np.ndarray
    h: np.ndarray
    h_t: np.ndarray
    interpolation_order: int = 7
    solution: object = field(default=None, repr=False, compare=False)

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    def evaluate(self, t) -> dict:
        """Evaluate ``eta_x`` and its first three derivatives plus ``h, h_t``.

        Derivatives of order 2 and 3 come from the ODE, not from the
        interpolant.
        """
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < 0) or np.any(t_arr > self.t_end * (1 + 1e-14)):
            raise ParameterError(f"t outside ansatz table range [0, {self.t_end}]")
        t_cl = np.clip(t_arr, 0.0, self.t_end)
        h, z = self.solution(t_cl)
        g = self.gamma
        ex = barenblatt_stretch(g, t_cl) + h
        ext = barenblatt_stretch(g, t_cl, 1) + z
        extt = -ext + ex**-g / (g + 1.0)
        exttt = -extt - g * ex ** (-g - 1.0) * ext / (g + 1.0)
        return {
            "t": t_cl,
            "eta_x": ex,
            "eta_xt": ext,
            "eta_xtt": extt,
            "eta_xttt": exttt,
            "h": h,
            "h_t": z,
        }


@dataclass(frozen=True)
class PhaseSummary:
    t0: float  # maximum of h_t
    t1: float  # maximum of h (h_t = 0)
    t2: float  # minimum of h_t
    terminal_h: float
    h_t_max: float
    h_t_min: float


@dataclass(frozen=True)
class EnvelopeReport:
    K_observed: float
    derivative_sup: dict  # k -> sup |d^k eta_x| (1+t)^(k - 1/(g+1))
    h_ratio_sup: float  # sup h / ((1+t)^(-g/(g+1)) ln(1+t)), t >= 1
    h_t_ratio_sup: float  # sup |h_t| / ((1+t)^(-1-g/(g+1)) ln(1+t)), t >= 1
    checkpoints: int


def integrate_ansatz(p: GasParameters, t_end: float, rel_tol: float = 1e-10) -> AnsatzTable:
    """Integrate the ansatz ODE on ``[0, t_end]`` with DOP853 and dense output."""
    if not (t_end > 0 and math.isfinite(t_end)):
        raise ParameterError(f"t_end must be positive and finite, got {t_end}")
    if not (1e-13 <= rel_tol <= 1e-6):
        raise ParameterError(f"rel_tol must lie in [1e-13, 1e-6], got {rel_tol}")
    g = p.gamma
    sol = integrate.solve_ivp(
        _rhs(g),
        (0.0, float(t_end)),
        [0.0, 0.0],
        method="DOP853",
        rtol=rel_tol,
        atol=rel_tol * 1e-6,
        dense_output=True,
    )
    if sol.status != 0:
        last = float(sol.t[-1]) if sol.t.size else 0.0
        raise IntegrationError(f"ansatz integration failed at t={last}: {sol.message}", last_time=last)
    t = sol.t
    h, z = sol.y
    ex = barenblatt_stretch(g, t) + h
    if np.any(ex <= 0):
        raise IntegrationError("nonpositive stretch encountered", last_time=float(t[np.argmax(ex <= 0)]))
    ext = barenblatt_stretch(g, t, 1) + z
    extt = -ext + ex**-g / (g + 1.0)
    return AnsatzTable(
        gamma=g,
        rel_tol=rel_tol,
        times=t,
        eta_x=ex,
        eta_xt=ext,
        eta_xtt=extt,
        h=h,
        h_t=z,
        solution=sol.sol,
    )


def correction_h(table: AnsatzTable, t) -> tuple:
    """Return ``(h, h_t)`` at time(s) ``t`` from the dense output."""
    v = table.evaluate(t)
    if np.ndim(t) == 0:
        return float(v["h"]), float(v["h_t"])
    return v["h"], v["h_t"]


def log_checkpoints(t_end, n=50, t_min=1e-2):
    """``0`` followed by ``n - 1`` log-spaced times up to ``t_end``."""
    if t_end <= t_min:
        return np.linspace(0.0, t_end, n)
    return np.concatenate([[0.0], np.geomspace(t_min, t_end, n - 1)])


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(20)


def duhamel_residual(table: AnsatzTable, n_checkpoints: int = 50) -> float:
    """Max relative gap between ``eta_xt`` and its integral representation.

    The right-hand side ``e^{-t}/(g+1) + 1/(g+1) int_0^t e^{-(t-s)} eta_x(s)^{-g} ds``
    is evaluated with composite 20-point Gauss-Legendre panels of width at
    most 1/2 on the dense trajectory.  The kernel is truncated below
    ``s = t - 60`` where it is smaller than 1e-26.
    """
    g = table.gamma
    g1 = g + 1.0
    worst = 0.0
    for t in log_checkpoints(table.t_end, n_checkpoints):
        lhs = float(table.evaluate(t)["eta_xt"])
        rhs = math.exp(-t) / g1
        if t > 0:
            lo = max(0.0, t - 60.0)
            n_pan = max(1, int(math.ceil((t - lo) / 0.5)))
            edges = np.linspace(lo, t, n_pan + 1)
            a, b = edges[:-1, None], edges[1:, None]
            s = 0.5 * (b - a) * _GL_NODES[None, :] + 0.5 * (a + b)
            w = 0.5 * (b - a) * _GL_WEIGHTS[None, :]
            ex = table.evaluate(s.ravel())["eta_x"].reshape(s.shape)
            rhs += float(np.sum(w * np.exp(-(t - s)) * ex**-g)) / g1
        worst = max(worst, abs(lhs - rhs) / abs(lhs))
    return worst


def _refine_root(fun, ts, idx):
    return optimize.brentq(fun, ts[idx], ts[idx + 1], xtol=1e-14, rtol=4 * np.finfo(float).eps)


def phase_portrait(table: AnsatzTable, return_fraction: float = 1e-2, samples: int = 20000) -> PhaseSummary:
    """Locate the phase times of ``(h, z = h_t)``.

    ``t0`` is where ``z`` peaks (``h_tt`` changes sign from + to -), ``t1``
    the zero crossing of ``z`` (maximum of ``h``), ``t2`` the minimum of
    ``z``.  The horizon is accepted when ``|z(t_end)|`` has decayed to at
    most ``return_fraction * |z(t2)|``.
    """
    g = table.gamma
    f = _rhs(g)
    ts = np.concatenate([[0.0], np.geomspace(1e-6, table.t_end, samples)])

    def z_of(t):
        return float(table.solution(t)[1])

    def zt_of(t):
        h, z = table.solution(t)
        return f(t, [h, z])[1]

    z = table.solution(ts)[1]
    zt = np.array([zt_of(t) for t in ts])

    def first_crossing(vals, start, sign):
        # sign=+1: + to -, sign=-1: - to +
        for i in range(start, len(vals) - 1):
            if sign * vals[i] > 0 and sign * vals[i + 1] <= 0:
                return i
        return None

    i0 = first_crossing(zt, 1, +1)
    if i0 is None:
        raise HorizonError("h_t never reaches its maximum within the table")
    t0 = _refine_root(zt_of, ts, i0)
    i1 = first_crossing(z, i0, +1)
    if i1 is None:
        raise HorizonError("h_t never crosses zero within the table")
    t1 = _refine_root(z_of, ts, i1)
    i2 = first_crossing(zt, i1, -1)
    if i2 is None:
        raise HorizonError("h_t never reaches its minimum within the table")
    t2 = _refine_root(zt_of, ts, i2)
    z_min = z_of(t2)
    z_end = z_of(table.t_end)
    if abs(z_end) > return_fraction * abs(z_min):
        raise HorizonError(
            f"h_t has not returned towards 0 by t_end={table.t_end}: |h_t(t_end)|={abs(z_end):.3e}, "
            f"|h_t(t2)|={abs(z_min):.3e}"
        )
    return PhaseSummary(
        t0=t0,
        t1=t1,
        t2=t2,
        terminal_h=float(table.solution(table.t_end)[0]),
        h_t_max=z_of(t0),
        h_t_min=z_min,
    )


def decay_envelope_check(table: AnsatzTable, k_max: int = 3, n_checkpoints: int = 400) -> EnvelopeReport:
    """Measure the constants in the decay envelopes of ``eta_x`` and ``h``.

    Sup norms run over the union of log-spaced checkpoints and the accepted
    integrator steps.  The ln-weighted ratios for ``h`` and ``h_t`` start at
    ``t = 1`` because both sides vanish at ``t = 0``.
    """
    if not 0 <= k_max <= 3:
        raise ParameterError("k_max must be between 0 and 3")
    g = table.gamma
    ts = np.union1d(log_checkpoints(table.t_end, n_checkpoints, t_min=1e-3), table.times)
    v = table.evaluate(ts)
    one = 1.0 + ts
    keys = ["eta_x", "eta_xt", "eta_xtt", "eta_xttt"]
    sup = {k: float(np.max(np.abs(v[keys[k]]) * one ** (k - 1.0 / (g + 1.0)))) for k in range(k_max + 1)}
    late = ts >= 1.0
    lg = np.log(one[late])
    h_env = one[late] ** (-g / (g + 1.0)) * lg
    ht_env = one[late] ** (-1.0 - g / (g + 1.0)) * lg
    return EnvelopeReport(
        K_observed=float(np.max(v["eta_x"] * one ** (-1.0 / (g + 1.0)))),
        derivative_sup=sup,
        h_ratio_sup=float(np.max(v["h"][late] / h_env)) if late.any() else 0.0,
        h_t_ratio_sup=float(np.max(np.abs(v["h_t"][late]) / ht_env)) if late.any() else 0.0,
        checkpoints=int(ts.size),
    )
