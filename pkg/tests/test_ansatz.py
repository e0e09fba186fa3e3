import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from vacuum_euler.ansatz import (
    barenblatt_stretch,
    correction_h,
    decay_envelope_check,
    duhamel_residual,
    integrate_ansatz,
    log_checkpoints,
    phase_portrait,
)
from vacuum_euler.errors import HorizonError, ParameterError
from vacuum_euler.gas import derive_constants


@pytest.fixture(scope="module")
def table2(p2):
    return integrate_ansatz(p2, 1e4)


def radau_oracle(gamma, t_end):
    """eta_x integrated directly with an implicit method, plus phase events."""
    g1 = gamma + 1.0

    def f(t, y):
        return [y[1], -y[1] + y[0] ** -gamma / g1]

    def ht_zero(t, y):
        return y[1] - barenblatt_stretch(gamma, t, 1)

    def htt_zero(t, y):
        return f(t, y)[1] - barenblatt_stretch(gamma, t, 2)

    ht_zero.direction = -1
    return solve_ivp(f, (0, t_end), [1.0, 1.0 / g1], method="Radau", rtol=1e-12, atol=1e-14,
                     dense_output=True, events=[ht_zero, htt_zero])


def test_initial_values(table2):
    v = table2.evaluate(0.0)
    assert v["eta_x"] == 1.0
    assert v["eta_xt"] == pytest.approx(1.0 / 3.0, rel=1e-15)
    assert correction_h(table2, 0.0) == (0.0, 0.0)


@pytest.mark.parametrize("gamma", [1.5, 2.0, 3.0])
def test_matches_implicit_oracle(gamma):
    tab = integrate_ansatz(derive_constants(gamma, 1.0), 200.0)
    ref = radau_oracle(gamma, 200.0)
    ts = np.array([0.5, 1.0, 5.0, 20.0, 100.0, 200.0])
    np.testing.assert_allclose(tab.evaluate(ts)["eta_x"], ref.sol(ts)[0], rtol=1e-9)
    np.testing.assert_allclose(tab.evaluate(ts)["eta_xt"], ref.sol(ts)[1], rtol=1e-8)


def test_phase_times_match_oracle_events(table2):
    ph = phase_portrait(table2)
    ref = radau_oracle(2.0, 20.0)
    t1 = ref.t_events[0][0]
    t0, t2 = ref.t_events[1][:2]
    assert ph.t0 == pytest.approx(t0, rel=1e-7)
    assert ph.t1 == pytest.approx(t1, rel=1e-7)
    assert ph.t2 == pytest.approx(t2, rel=1e-7)
    assert 0 < ph.t0 < ph.t1 < ph.t2
    assert ph.h_t_max > 0 > ph.h_t_min


def test_terminal_h_under_envelope(table2):
    ph = phase_portrait(table2)
    env = (1.0 + 1e4) ** (-2.0 / 3.0) * math.log1p(1e4)
    assert env == pytest.approx(0.0198, abs=5e-5)
    assert 0 < ph.terminal_h <= env


def test_short_horizon_raises(p2):
    with pytest.raises(HorizonError):
        phase_portrait(integrate_ansatz(p2, 3.0))


def test_h_leading_asymptotics(table2):
    # h ~ g/(g+1)^2 (1+t)^(-g/(g+1)) ln(1+t), approached from above with 1/ln corrections
    t = np.array([1e2, 1e3, 1e4])
    h = table2.evaluate(t)["h"]
    ratio = h / (2.0 / 9.0 * (1 + t) ** (-2.0 / 3.0) * np.log1p(t))
    assert np.all(np.diff(ratio) < 0)
    assert 1.0 < ratio[-1] < 1.1


def test_duhamel_at_default_tolerance(table2):
    assert duhamel_residual(table2) <= 1e-6


def test_duhamel_detects_wrong_table(p2, table2):
    from dataclasses import replace

    bad = replace(table2, gamma=2.5)  # solution of a different ODE
    assert duhamel_residual(bad, n_checkpoints=10) > 1e-3


@pytest.mark.parametrize("rel_tol", [1e-14, 1e-5, 0.0])
def test_rel_tol_range(p2, rel_tol):
    with pytest.raises(ParameterError):
        integrate_ansatz(p2, 10.0, rel_tol)


@pytest.mark.parametrize("t_end", [0.0, -1.0, math.inf])
def test_t_end_range(p2, t_end):
    with pytest.raises(ParameterError):
        integrate_ansatz(p2, t_end)


def test_evaluate_out_of_range(table2):
    with pytest.raises(ParameterError):
        table2.evaluate(2e4)
    with pytest.raises(ParameterError):
        table2.evaluate(-1.0)


def test_ode_derived_derivatives_consistent(table2):
    # third derivative from the ODE against a centred difference of the second
    t, dt = 7.0, 1e-3
    v = table2.evaluate(np.array([t - dt, t, t + dt]))
    fd = (v["eta_xtt"][2] - v["eta_xtt"][0]) / (2 * dt)
    assert v["eta_xttt"][1] == pytest.approx(fd, rel=1e-5)


def test_envelope_report(table2):
    env = decay_envelope_check(table2)
    assert 1.0 <= env.K_observed <= 2.0
    assert env.h_ratio_sup <= 1.0
    assert set(env.derivative_sup) == {0, 1, 2, 3}
    assert all(np.isfinite(v) for v in env.derivative_sup.values())
    with pytest.raises(ParameterError):
        decay_envelope_check(table2, k_max=4)


def test_log_checkpoints():
    ts = log_checkpoints(100.0, 10)
    assert ts[0] == 0 and ts[-1] == pytest.approx(100.0) and len(ts) == 10
    assert np.all(np.diff(ts) > 0)


@settings(max_examples=15, deadline=None)
@given(gamma=st.floats(1.2, 4.0))
def test_h_nonnegative_and_monotone_stretch(gamma):
    tab = integrate_ansatz(derive_constants(gamma, 1.0), 500.0)
    assert np.all(tab.h >= -1e-12)
    assert np.all(tab.eta_xt >= -1e-12)
    assert np.all(tab.eta_x / barenblatt_stretch(gamma, tab.times) >= 1 - 1e-9)
