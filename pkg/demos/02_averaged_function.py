"""
The averaged function and its zero
==================================

Averaging the discontinuous friction force over one period of the
unperturbed motion ``xi + sin t`` gives a continuous function of ``xi``.
Its zero predicts the mean velocity of the periodic motion, and the sign
of its slope predicts stability.
"""
import numpy as np

from pwsavg.averaging import find_zero, tabulate
from pwsavg.model import dry_friction

a, b = 0.3, 0.1
system = dry_friction(a, b)

for row in tabulate(system, np.linspace(-0.9, 0.9, 7)[:, None]):
    xi, fb = row
    # closed form from the time spent with positive velocity
    exact = -a * (np.pi + 2 * np.arcsin(xi)) + b * (np.pi - 2 * np.arcsin(xi))
    print(f"xi = {xi:+.2f}   fbar = {fb:+.10f}   closed form {exact:+.10f}")

report = find_zero(system, [-0.5])
print("zero", report.xi0[0], "expected", np.sin(np.pi * (b - a) / (2 * (a + b))))
print("slope", report.jacobian[0, 0], "->", report.verdict)
print("Newton residuals", ["%.1e" % r for r in report.residual_history])
