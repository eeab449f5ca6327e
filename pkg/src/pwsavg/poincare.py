"""Period maps of the perturbed system and checks of the averaging predictions.

``standard_form_map`` is the time-``T`` map in standard-form coordinates
``u = x^{-1}(t, x(t, xi, eps), 0)``.  Its fixed points are the periodic
solutions, and its derivative at a fixed point (the monodromy matrix,
taken here by central differences so that switching-time sensitivities
are included) should be ``I + eps * fbar'(xi0) + O(eps^2)``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .averaging import AveragedReport, averaged_function, damped_newton, find_zero, perturbed_average
from .integrator import DEFAULT_TOL, Tolerances, integrate_piecewise, inverse_generating_flow
from .model import PiecewiseSystem

EPS_MAX = 0.1
CONVERGED = "Converged"
DIVERGED = "Diverged"
UNDECIDED = "Undecided"


def full_period_map(system: PiecewiseSystem, xi, eps, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``x(T, xi, eps)`` in original coordinates."""
    return integrate_piecewise(system, xi, eps, system.period, tol).final_state


def standard_form_map(system: PiecewiseSystem, xi, eps, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """``u(T, xi, eps)``: the period map pulled back by the generating flow."""
    return inverse_generating_flow(system, full_period_map(system, xi, eps, tol), system.period, tol)


def _fd_jacobian(fun, x, step):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    cols = []
    for j in range(x.size):
        d = np.zeros(x.size)
        d[j] = step
        cols.append((fun(x + d) - fun(x - d)) / (2 * step))
    return np.column_stack(cols)


def find_fixed_point(system: PiecewiseSystem, eps, xi_guess, fixed_point_tol: float = 1e-10,
                     max_iter: int = 50, fd_step: float = 1e-6, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Fixed point of :func:`standard_form_map` by damped Newton.

    Every initial value is a fixed point when ``eps = 0``, so that case is
    rejected.
    """
    if not eps > 0:
        raise ValueError("find_fixed_point requires eps > 0")
    if eps > EPS_MAX:
        warnings.warn(f"eps={eps} exceeds {EPS_MAX}; asymptotic estimates may not apply", stacklevel=2)

    def residual(xi):
        return standard_form_map(system, xi, eps, tol) - xi

    xi, _, _, _ = damped_newton(residual, lambda x: _fd_jacobian(residual, x, fd_step),
                                xi_guess, fixed_point_tol, max_iter)
    return xi


def _match(mu, predicted):
    """Pair two spectra by sorting on (real, imag)."""
    mu = np.asarray(sorted(np.atleast_1d(mu), key=lambda z: (z.real, z.imag)))
    predicted = np.asarray(sorted(np.atleast_1d(predicted), key=lambda z: (z.real, z.imag)))
    return mu, predicted


@dataclass
class MonodromyResult:
    matrix: np.ndarray
    eigenvalues: np.ndarray
    predicted: np.ndarray | None
    residual: float | None


def monodromy(system: PiecewiseSystem, xi_eps, eps, fd_step: float = 1e-6, averaged_jac=None,
              tol: Tolerances = DEFAULT_TOL) -> MonodromyResult:
    """Central-difference derivative of the standard-form map at ``xi_eps``.

    When ``averaged_jac`` (the averaged Jacobian at the averaged zero) is
    given, the first-order prediction ``1 + eps * lambda`` and the largest
    eigenvalue mismatch are reported too.
    """
    M = _fd_jacobian(lambda x: standard_form_map(system, x, eps, tol), xi_eps, fd_step)
    mu = np.linalg.eigvals(M)
    if averaged_jac is None:
        return MonodromyResult(M, mu, None, None)
    predicted = 1 + eps * np.linalg.eigvals(np.atleast_2d(averaged_jac))
    mu_s, pred_s = _match(mu, predicted)
    return MonodromyResult(M, mu_s, pred_s, float(np.max(np.abs(mu_s - pred_s))))


def epsilon_derivative_check(system: PiecewiseSystem, xi, eps_list, tol: Tolerances = DEFAULT_TOL) -> dict:
    """Difference quotients ``(u(T, xi, eps) - xi)/eps`` against ``fbar(xi)``.

    Returns the quotients, their distance to the averaged function (also per
    component), and the log-log slope of that distance against ``eps``.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list) or any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be positive and strictly decreasing")
    fbar = averaged_function(system, xi, tol)
    quotients = np.array([(standard_form_map(system, xi, e, tol) - xi) / e for e in eps_list])
    comp = np.abs(quotients - fbar)
    resid = np.linalg.norm(quotients - fbar, axis=1)
    slope = float(np.polyfit(np.log(eps_list), np.log(resid), 1)[0]) if np.all(resid > 0) else float("nan")
    return {
        "xi": xi, "fbar": fbar, "eps": np.array(eps_list), "quotient": quotients,
        "residual": resid, "component_residual": comp, "slope": slope,
    }


@dataclass
class StabilityRecord:
    verdict: str
    steps: int
    distances: list  # one distance history per perturbation ray
    ratios: list
    late_ratio: float | None

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "steps": self.steps,
            "final_distances": [float(d[-1]) for d in self.distances],
            "late_ratio": None if self.late_ratio is None else float(self.late_ratio),
        }


def empirical_stability(system: PiecewiseSystem, xi_eps, eps, radius: float = 0.05, iterations: int = 200,
                        converge_tol: float = 1e-6, late_window: int = 10,
                        tol: Tolerances = DEFAULT_TOL) -> StabilityRecord:
    """Iterate the period map from ``xi_eps +- radius * e_j``.

    A ray converges when its distance to ``xi_eps`` drops to
    ``converge_tol`` and diverges when it exceeds ``2 * radius``.  The
    late ratio is the geometric-mean distance ratio over the last
    ``late_window`` steps of the slowest ray.
    """
    xi_eps = np.atleast_1d(np.asarray(xi_eps, dtype=float))
    if radius == 0:
        return StabilityRecord(CONVERGED, 0, [[0.0]], [[]], None)
    n = xi_eps.size
    histories, ratio_lists = [], []
    verdicts = []
    steps = 0
    for j in range(n):
        for sign in (1.0, -1.0):
            u = xi_eps.copy()
            u[j] += sign * radius
            dist = [float(np.linalg.norm(u - xi_eps))]
            verdict = UNDECIDED
            for _ in range(iterations):
                u = standard_form_map(system, u, eps, tol)
                dist.append(float(np.linalg.norm(u - xi_eps)))
                if dist[-1] <= converge_tol:
                    verdict = CONVERGED
                    break
                if dist[-1] > 2 * radius:
                    verdict = DIVERGED
                    break
            steps = max(steps, len(dist) - 1)
            histories.append(dist)
            d = np.array(dist)
            ratio_lists.append(list(d[1:] / d[:-1]))
            verdicts.append(verdict)
    if DIVERGED in verdicts:
        overall = DIVERGED
    elif all(v == CONVERGED for v in verdicts):
        overall = CONVERGED
    else:
        overall = UNDECIDED
    late = []
    for dist in histories:
        d = np.array(dist)
        w = min(late_window, len(d) - 1)
        if w > 0 and d[-1] > 0:
            late.append(float((d[-1] / d[-1 - w]) ** (1.0 / w)))
    late_ratio = max(late, key=lambda r: abs(r - 1) if overall == DIVERGED else r) if late else None
    return StabilityRecord(overall, steps, histories, ratio_lists, late_ratio)


def te_identity_residual(system: PiecewiseSystem, xi, eps, tol: Tolerances = DEFAULT_TOL) -> float:
    """``|u(T) - xi - eps * perturbed_average(xi, eps)|``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    lhs = standard_form_map(system, xi, eps, tol)
    return float(np.max(np.abs(lhs - xi - eps * perturbed_average(system, xi, eps, tol))))


def original_periodicity(system: PiecewiseSystem, x0, eps, periods: int = 10,
                         tol: Tolerances = DEFAULT_TOL) -> dict:
    """Return to ``x0`` after one period and drift over ``periods`` more."""
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    T = system.period
    traj = integrate_piecewise(system, x0, eps, (periods + 1) * T, tol)
    marks = np.array([traj(k * T) if k <= periods else traj.final_state for k in range(1, periods + 2)])
    return {
        "one_period": float(np.linalg.norm(marks[0] - x0)),
        "max_drift": float(np.max(np.linalg.norm(marks - x0, axis=1))),
        "events_per_period": len(traj.events) / (periods + 1),
    }


def largest_valid_epsilon(system: PiecewiseSystem, xi0, averaged_jac, eps_grid,
                          tol: Tolerances = DEFAULT_TOL) -> float | None:
    """Largest grid value up to which Newton converges and every multiplier
    stays on the side of the unit circle that the averaged Jacobian predicts.
    """
    lam = np.linalg.eigvals(np.atleast_2d(averaged_jac))
    best = None
    guess = np.atleast_1d(np.asarray(xi0, dtype=float))
    for eps in sorted(eps_grid):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                xi_eps = find_fixed_point(system, eps, guess, tol=tol)
            mu = monodromy(system, xi_eps, eps, tol=tol).eigenvalues
        except Exception:
            break
        pred_inside = np.all(lam.real < 0)
        if pred_inside != bool(np.all(np.abs(mu) < 1)):
            break
        best, guess = eps, xi_eps
    return best


@dataclass
class PoincareReport:
    eps: float
    xi_eps: np.ndarray
    x_eps0: np.ndarray
    fixed_point_residual: float
    monodromy: np.ndarray
    eigenvalues: np.ndarray
    predicted_eigenvalues: np.ndarray
    eigenvalue_residual: float
    averaged: AveragedReport
    shift_over_eps: float
    te_residual: float
    original_periodicity: dict
    stability: StabilityRecord | None = None
    warnings: list = field(default_factory=list)

    def to_dict(self) -> dict:
        def cplx(zs):
            return [[float(z.real), float(z.imag)] for z in zs]

        return {
            "eps": float(self.eps),
            "xi_eps": [float(v) for v in self.xi_eps],
            "x_eps0": [float(v) for v in self.x_eps0],
            "fixed_point_residual": float(self.fixed_point_residual),
            "monodromy": [[float(v) for v in row] for row in self.monodromy],
            "eigenvalues": cplx(self.eigenvalues),
            "predicted_eigenvalues": cplx(self.predicted_eigenvalues),
            "eigenvalue_residual": float(self.eigenvalue_residual),
            "shift_over_eps": float(self.shift_over_eps),
            "te_residual": float(self.te_residual),
            "original_periodicity": {k: float(v) for k, v in self.original_periodicity.items()},
            "averaged": self.averaged.to_dict(),
            "stability": None if self.stability is None else self.stability.to_dict(),
            "warnings": list(self.warnings),
        }


def analyse(system: PiecewiseSystem, eps, xi_guess, fixed_point_tol: float = 1e-10, fd_step: float = 1e-6,
            stability_radius: float | None = 0.05, stability_iterations: int = 200,
            tol: Tolerances = DEFAULT_TOL) -> PoincareReport:
    """Averaged zero, fixed point, monodromy and all consistency residuals."""
    notes = []
    if eps > EPS_MAX:
        notes.append(f"eps={eps} exceeds {EPS_MAX}; first-order identities are not expected to hold")
    avg = find_zero(system, xi_guess, tol=tol)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        xi_eps = find_fixed_point(system, eps, off_hyperplanes(system, avg.xi0, eps), fixed_point_tol,
                                  fd_step=fd_step, tol=tol)
    mono = monodromy(system, xi_eps, eps, fd_step, avg.jacobian, tol)
    fp_res = float(np.linalg.norm(standard_form_map(system, xi_eps, eps, tol) - xi_eps))
    stab = None
    if stability_radius is not None:
        stab = empirical_stability(system, xi_eps, eps, stability_radius, stability_iterations, tol=tol)
    return PoincareReport(
        eps=float(eps), xi_eps=xi_eps, x_eps0=xi_eps.copy(), fixed_point_residual=fp_res,
        monodromy=mono.matrix, eigenvalues=mono.eigenvalues, predicted_eigenvalues=mono.predicted,
        eigenvalue_residual=mono.residual, averaged=avg,
        shift_over_eps=float(np.linalg.norm(xi_eps - avg.xi0) / eps),
        te_residual=te_identity_residual(system, xi_eps, eps, tol),
        original_periodicity=original_periodicity(system, xi_eps, eps, tol=tol),
        stability=stab, warnings=notes,
    )


def off_hyperplanes(system, xi, eps, shift=None):
    """Move switching components that sit on a hyperplane slightly off it."""
    xi = np.array(xi, dtype=float)
    shift = eps if shift is None else shift
    for j in system.switching:
        if abs(xi[j]) < shift:
            xi[j] = shift if xi[j] >= 0 else -shift
    return xi
