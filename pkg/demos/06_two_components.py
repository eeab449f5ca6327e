"""
Two uncoupled bodies, phase-shifted forcing
===========================================

Each velocity has its own friction law; the second plate lags by ``phi``.
The averaged zero is ``(0, sin phi)``, which puts the first component on its
switching hyperplane, so the fixed-point search starts slightly off it.
"""
import numpy as np

from pwsavg.averaging import find_zero
from pwsavg.model import dual_dry_friction
from pwsavg.poincare import find_fixed_point, monodromy, off_hyperplanes

phi = np.pi / 3
system = dual_dry_friction(0.2, 0.2, 0.2, 0.2, phi)
avg = find_zero(system, [0.1, 0.7])
print("averaged zero", avg.xi0, "expected", np.array([0.0, np.sin(phi)]))
print("averaged Jacobian\n", avg.jacobian)

eps = 0.01
xi = find_fixed_point(system, eps, off_hyperplanes(system, avg.xi0, eps))
res = monodromy(system, xi, eps, averaged_jac=avg.jacobian)
print("fixed point", xi)
print("multipliers", res.eigenvalues.real, "predicted", res.predicted.real)
