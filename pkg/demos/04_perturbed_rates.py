#!/usr/bin/env python
# A small odd perturbation of the ansatz flow: energies, boundary and rate fits.
import tempfile

import numpy as np

from vacuum_euler.harness import parse_config, run_scenario

cfg = parse_config("""
gamma = 2
epsilon = 1e-3
n_cells = 200
t_end = 1000
fit_window = 10, 100
""")
with tempfile.TemporaryDirectory() as d:
    bundle = run_scenario(cfg, d)
rep = bundle.report
s = rep.series

print("t          E0          sup_bundle  D_u         D_rho       x_plus")
for k in range(0, len(s["t"]), 8):
    print(f"{s['t'][k]:9.3f}  {s['E0'][k]:.4e}  {s['sup_bundle'][k]:.4e}  {s['D_u'][k]:.4e}  "
          f"{s['D_rho'][k]:.4e}  {s['x_plus'][k]:.5f}")

print()
for v in rep.verdicts:
    val = v["value"]
    shown = "-" if val is None else f"{val:.4f}"
    print(f"{v['name']:>18}: {v['status']:<12} value={shown:>10} target={v['target']}")
print("overall:", rep.status, " exit code", bundle.exit_code)

# x_plus/(1+t)^(1/3) settles towards L from above as h decays
L = rep.header["L"]
print(f"x_plus/(1+t)^(1/3) at t_end: {s['x_plus'][-1] / (1 + s['t'][-1]) ** (1 / 3):.5f}   L = {L:.5f}")
