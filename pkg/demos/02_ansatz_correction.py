#!/usr/bin/env python
# The uniform stretch eta_x(t) and its correction h(t) to the Barenblatt stretch.
import numpy as np

from vacuum_euler.ansatz import decay_envelope_check, duhamel_residual, integrate_ansatz, phase_portrait
from vacuum_euler.diagnostics import fit_rate
from vacuum_euler.gas import derive_constants

p = derive_constants(2.0, 1.0)
table = integrate_ansatz(p, 1e4)

# h rises, peaks where h_t crosses zero, then decays slowly
ph = phase_portrait(table)
print(f"h_t peaks at t0={ph.t0:.4f}, h peaks at t1={ph.t1:.4f}, h_t bottoms at t2={ph.t2:.4f}")
print(f"h(1e4) = {ph.terminal_h:.5f}")

# the integral form of eta_xt is an independent check of the ODE solve
print(f"Duhamel residual: {duhamel_residual(table):.2e}")

env = decay_envelope_check(table)
print(f"sup eta_x/(1+t)^(1/3) = {env.K_observed:.4f}")
print(f"sup h / ((1+t)^(-2/3) ln(1+t)) = {env.h_ratio_sup:.4f}")

# a log-log fit sees the ln(1+t) factor as a shallower power
t = np.geomspace(1e2, 1e4, 200)
fit = fit_rate(t, table.evaluate(t)["h"], (1e2, 1e4))
print(f"fitted slope of h on [1e2, 1e4]: {fit.exponent:.4f}  (pure power would be {-2/3:.4f})")
for tt in [1e2, 1e3, 1e4]:
    h = float(table.evaluate(tt)["h"])
    lead = 2 / 9 * (1 + tt) ** (-2 / 3) * np.log1p(tt)
    print(f"t={tt:8.0f}  h={h:.3e}  h / [2/9 (1+t)^(-2/3) ln(1+t)] = {h / lead:.4f}")
