"""
Checking the hypotheses before trusting the averages
====================================================

The method needs periodic unperturbed motion, finitely many crossings away
from the period ends, and a nonzero crossing speed.  A velocity amplitude
just touching zero (``xi`` near 1) grazes the switching surface.
"""
import json

from pwsavg.checker import check_hypotheses, measure_convergence_check, switching_time_sensitivity
from pwsavg.model import dry_friction

system = dry_friction(0.3, 0.1)

for xi in (-0.7, 0.0, 1 - 1e-14):
    rep = check_hypotheses(system, [xi], sample_count=20)
    print(f"xi = {xi!r}: {'ok' if rep.passed else 'FAILED'}")
    for c in rep.checks:
        if not c.passed:
            print("   ", c.name, json.dumps(c.witness))

sens = switching_time_sensitivity(system, [0.5])
print("d(switch time)/d(xi):", sens["d_xi"][:, 0], " d/d(eps):", sens["d_eps"])

out = measure_convergence_check(system, [-0.7], sigma=0.1, eps_list=[0.1, 0.01, 0.001])
print("time with a different force:", out["measure"], " per unit eps:", out["ratio"])
