"""Independent reference values for the dry-friction models.

Nothing here calls the package's integrator or quadrature: the generating
flow is ``xi + sin t``, and on each orthant the perturbed flow is
``x_k + sin t - sin t_k + eps * c * (t - t_k)`` with ``c`` the constant
friction force, so crossings reduce to scalar root finding.
"""
import numpy as np
from scipy.optimize import brentq


def occupation_measure(xi):
    """Measure of {tau in [0, 2pi] : xi + sin(tau) > 0}."""
    xi = np.clip(xi, -1.0, 1.0)
    return np.pi + 2 * np.arcsin(xi)


def fbar(a, b, xi):
    meas = occupation_measure(xi)
    return -a * meas + b * (2 * np.pi - meas)


def fbar_prime(a, b, xi):
    return -2 * (a + b) / np.sqrt(1 - xi**2)


def fbar_zero(a, b):
    return np.sin(np.pi * (b - a) / (2 * (a + b)))


def brute_occupation(xi, n=2_000_000):
    """Grid count of the same set; checks the closed form itself."""
    t = (np.arange(n) + 0.5) * (2 * np.pi / n)
    return np.count_nonzero(xi + np.sin(t) > 0) * (2 * np.pi / n)


def period_map(a, b, xi, eps, T=2 * np.pi, phase=0.0, sign=1.0, samples=4000):
    """x(T) for x' = cos(t + phase) + eps*force(x), force -a (x > 0), +b (x < 0).

    ``sign=-1`` gives the reversed-friction model.
    """
    def force(s):
        return sign * (-a if s > 0 else b)

    t0, x0 = 0.0, float(xi)
    s = 1 if x0 > 0 else -1

    def x_at(t, t0, x0, s):
        return x0 + np.sin(t + phase) - np.sin(t0 + phase) + eps * force(s) * (t - t0)

    while True:
        grid = np.linspace(t0, T, max(8, int(samples * (T - t0) / T)))
        vals = s * x_at(grid, t0, x0, s)
        # skip the starting point, which sits on the hyperplane after a crossing
        idx = np.nonzero(vals[1:] <= 0)[0]
        if idx.size == 0:
            return x_at(T, t0, x0, s)
        i = idx[0] + 1
        t_root = brentq(lambda t: x_at(t, t0, x0, s), grid[i - 1], grid[i], xtol=1e-15, rtol=1e-15)
        t0, x0, s = t_root, 0.0, -s


def fixed_point(a, b, eps, guess, **kw):
    return brentq(lambda x: period_map(a, b, x, eps, **kw) - x, guess - 0.05, guess + 0.05, xtol=1e-15)


def multiplier(a, b, xi, eps, h=1e-6, **kw):
    return (period_map(a, b, xi + h, eps, **kw) - period_map(a, b, xi - h, eps, **kw)) / (2 * h)
