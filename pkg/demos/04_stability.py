"""
Stability seen by iterating the period map
==========================================

Perturbed starts around the fixed point contract at the rate of the
multiplier.  Reversing the friction sign makes the averaged slope
positive and the same experiment runs away.
"""
from pwsavg.averaging import find_zero
from pwsavg.model import anti_dry_friction, dry_friction
from pwsavg.poincare import empirical_stability, find_fixed_point, monodromy

for system, radius in ((dry_friction(0.3, 0.1), 0.05), (anti_dry_friction(0.3, 0.1), 0.01)):
    eps = 0.1 if system.name == "dry_friction" else 0.01
    avg = find_zero(system, [-0.5])
    xi = find_fixed_point(system, eps, avg.xi0)
    mu = monodromy(system, xi, eps).eigenvalues[0].real
    rec = empirical_stability(system, xi, eps, radius=radius, iterations=200)
    print(f"{system.name}: averaged verdict {avg.verdict}, mu = {mu:.5f}")
    print(f"  iterates: {rec.verdict} after {rec.steps} steps, late ratio {rec.late_ratio:.5f}")

# At eps = 0.01 the stable multiplier is 0.9887: 200 steps only shrink a
# 0.05 offset to about 5e-3, so the iteration is still undecided.
system = dry_friction(0.3, 0.1)
xi = find_fixed_point(system, 0.01, [-0.7])
rec = empirical_stability(system, xi, 0.01, radius=0.05, iterations=200)
print(f"eps = 0.01: {rec.verdict}, final distances {[round(d[-1], 6) for d in rec.distances]}")
