"""
From the averaged zero to an actual periodic motion
===================================================

For small ``eps`` the period map has a fixed point close to the averaged
zero, drifting away linearly in ``eps``.  Its multiplier should be
``1 + eps * fbar'`` up to ``O(eps^2)``.
"""
from pwsavg.averaging import find_zero
from pwsavg.model import dry_friction
from pwsavg.poincare import find_fixed_point, monodromy, original_periodicity

system = dry_friction(0.3, 0.1)
avg = find_zero(system, [-0.5])
lam = avg.jacobian[0, 0]

print(" eps      xi_eps          (xi_eps-xi0)/eps   mu            1+eps*lambda")
for eps in (0.04, 0.02, 0.01, 0.005):
    xi = find_fixed_point(system, eps, avg.xi0)
    mu = monodromy(system, xi, eps).eigenvalues[0].real
    print(f"{eps:<8} {xi[0]:.12f}  {(xi[0] - avg.xi0[0]) / eps:.6f}          {mu:.8f}    {1 + eps * lam:.8f}")

orbit = original_periodicity(system, xi, eps, periods=10)
print("return after one period", orbit["one_period"], " drift over ten", orbit["max_drift"])
