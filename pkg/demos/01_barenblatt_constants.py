#!/usr/bin/env python
# Barenblatt reference flow: constants, support growth and mass.
import numpy as np

from vacuum_euler.gas import barenblatt_boundaries, barenblatt_density, derive_constants, total_mass

for gamma, mass in [(1.5, 1.0), (2.0, 1.0), (3.0, 2.0)]:
    p = derive_constants(gamma, mass)
    print(f"gamma={gamma}  M={mass}:  A={p.A:.10f}  B={p.B:.10f}  L={p.half_width:.6f}")

# gamma = 2 has a closed form: A^(3/2) = sqrt(3)/8
p = derive_constants(2.0, 1.0)
print("closed form A:", (np.sqrt(3) / 8) ** (2 / 3))

# the support grows like (1+t)^(1/(gamma+1)) while the mass stays put
for t in [0, 7, 63, 999]:
    lo, hi = barenblatt_boundaries(p, t)
    print(f"t={t:4d}  support=[{lo:8.4f}, {hi:8.4f}]  rho(0,t)={barenblatt_density(p, 0.0, t):.5f}  mass={total_mass(p, t):.12f}")
