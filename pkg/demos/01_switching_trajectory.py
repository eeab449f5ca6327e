"""
Integrating across switching hyperplanes
========================================

A body on a vibrating plate has velocity ``x`` with ``x' = cos t + eps*F``,
where the friction force ``F`` is ``-a`` while sliding forward and ``+b``
while sliding back.  The force jumps at ``x = 0``, so the integrator stops
at each crossing, checks that the trajectory passes through, and restarts
on the other side.
"""
import numpy as np

from pwsavg.errors import StickingDetected
from pwsavg.integrator import integrate_piecewise
from pwsavg.model import dry_friction

system = dry_friction(a=0.3, b=0.1)

# Unperturbed motion from 0.5 is 0.5 + sin t: zeros at 7pi/6 and 11pi/6.
traj = integrate_piecewise(system, [0.5], eps=0.0, horizon=2 * np.pi)
for ev in traj.events:
    print(f"t = {ev.time:.12f}  sign {ev.sign_before:+d} -> {ev.sign_after:+d}  normal speed {ev.margin:.6f}")
print("expected", 7 * np.pi / 6, 11 * np.pi / 6)

# With friction switched on the crossings move, the orbit stays continuous.
traj = integrate_piecewise(system, [0.5], eps=0.05, horizon=2 * np.pi)
print("x(T) =", traj.final_state[0], " largest junction jump", traj.junction_jumps().max())

# Strong symmetric friction pins the body: both sides push toward x = 0.
try:
    integrate_piecewise(dry_friction(1, 1), [0.5], eps=1.5, horizon=2 * np.pi)
except StickingDetected as exc:
    print("sticking:", exc)
