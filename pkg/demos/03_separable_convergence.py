#!/usr/bin/env python
# With no perturbation the solver should reproduce eta = x * eta_x(t).
import numpy as np

from vacuum_euler.ansatz import integrate_ansatz
from vacuum_euler.gas import derive_constants
from vacuum_euler.solver import run

p = derive_constants(2.0, 1.0)
table = integrate_ansatz(p, 10.0)
exact_stretch = float(table.evaluate(10.0)["eta_x"])

prev = None
for n in [50, 100, 200, 400]:
    traj = run(p, n, None, 10.0)
    s = traj.snapshots[-1]
    exact = traj.grid.nodes * exact_stretch
    err = np.max(np.abs(s.eta - exact)) / np.max(np.abs(exact))
    rate = "" if prev is None else f"  ratio {prev / err:.2f}"
    print(f"n={n:4d}  steps={s.step_count:5d}  rel sup error={err:.3e}{rate}")
    prev = err
print("boundary symmetry x_- + x_+ =", s.eta[0] + s.eta[-1])
