"""Averaged function, its Jacobian and zeros, and the stability verdict.

The averaged function is the period integral of the perturbation pulled
back along the generating flow::

    fbar(xi) = int_0^T  M(tau)^{-1} f(tau, x(tau, xi, 0), 0) dtau,

where ``M`` is the fundamental matrix of the generating system.  The
integrand jumps whenever the generating solution crosses a switching
hyperplane, so ``[0, T]`` is split at those times and each smooth piece is
integrated as an augmented ODE ``(x, M, I)`` with the adaptive integrator.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import NoConvergence, SingularJacobian, TangentialContact
from .integrator import (
    DEFAULT_TOL,
    N_SUB,
    Tolerances,
    fundamental_matrix,
    integrate_piecewise,
    integrate_smooth,
    inverse_generating_flow,
)
from .model import PiecewiseSystem, orthant_signature

STABLE = "AsymptoticallyStable"
UNSTABLE = "Unstable"
INCONCLUSIVE = "Inconclusive"


@dataclass(frozen=True)
class Crossing:
    """A zero of one component of the generating solution."""

    time: float
    component: int
    margin: float
    kind: str = "cross"  # "cross", "graze" or "start"


def generating_crossings(system: PiecewiseSystem, xi, tol: Tolerances = DEFAULT_TOL):
    """All zeros of switching components along the generating solution on [0, T].

    Returns the dense generating segment and the crossings sorted by time.
    Components starting inside the dead band are reported with kind
    ``"start"``; sign-preserving touches of the dead band with kind
    ``"graze"``.
    """
    seg = integrate_smooth(system.generating_rhs, 0.0, xi, system.period, tol.rtol, tol.atol)
    out = []
    for j in system.switching:
        if abs(seg.x_a[j]) <= tol.dead_tol:
            out.append(Crossing(0.0, j, abs(system.generating_rhs(0.0, seg.x_a)[j]), "start"))
        ts = seg.step_times
        for ta, tb in zip(ts[:-1], ts[1:]):
            out.extend(_zeros_in_step(system, seg, j, ta, tb, tol))
    out.sort(key=lambda c: (c.time, c.component))
    return seg, out


def _zeros_in_step(system, seg, j, ta, tb, tol):
    grid = np.linspace(ta, tb, N_SUB + 1)
    v = seg(grid)[j]

    def xj(t):
        return seg(t)[j]

    def vj(t):
        return system.generating_rhs(t, seg(t))[j]

    def crossing(t, kind="cross"):
        return Crossing(float(t), j, abs(vj(t)), kind)

    found = []
    for i in range(N_SUB):
        if i > 0 and v[i] == 0 and v[i - 1] * v[i + 1] < 0:
            found.append(crossing(grid[i]))
        elif v[i] * v[i + 1] < 0:
            found.append(crossing(brentq(xj, grid[i], grid[i + 1], xtol=tol.event_tol,
                                         rtol=4 * np.finfo(float).eps)))
    # Touches between samples: examine discrete minima of |x_j|.
    a = np.abs(v)
    spread = float(np.max(a) - np.min(a))
    for i in range(N_SUB + 1):
        if a[i] > spread + tol.dead_tol or v[i] == 0:
            continue
        if (i > 0 and a[i - 1] < a[i]) or (i < N_SUB and a[i + 1] < a[i]):
            continue
        s = np.sign(v[i])
        for lo, hi in ((i - 1, i), (i, i + 1)):
            if lo < 0 or hi > N_SUB or np.sign(v[lo]) != s or np.sign(v[hi]) != s:
                continue
            if not (s * vj(grid[lo]) < 0 < s * vj(grid[hi])):
                continue
            t_min = brentq(vj, grid[lo], grid[hi], xtol=tol.event_tol)
            g_min = s * xj(t_min)
            if g_min <= 0:
                found.append(crossing(brentq(xj, grid[lo], t_min, xtol=tol.event_tol)))
                found.append(crossing(brentq(xj, t_min, grid[hi], xtol=tol.event_tol)))
            elif g_min <= tol.dead_tol:
                found.append(crossing(t_min, "graze"))
    return found


def _pieces(system, seg, crossings, tol):
    """Split points of [0, T] and the orthant active on each piece."""
    T = system.period
    for c in crossings:
        if c.kind == "graze" or (c.kind == "cross" and c.margin < tol.transversality_tol):
            raise TangentialContact(
                f"generating solution touches the hyperplane of component {c.component} "
                f"at t={c.time:.16g} with normal speed {c.margin:.3g}",
                time=c.time, component=c.component, margin=c.margin)
    cuts = sorted({0.0, T, *(c.time for c in crossings if 0.0 < c.time < T)})
    pieces = []
    for ta, tb in zip(cuts[:-1], cuts[1:]):
        sig = list(orthant_signature(seg(0.5 * (ta + tb)), tol.dead_tol))
        # Pieces shorter than the dead band take the direction of departure.
        v = system.generating_rhs(ta, seg(ta))
        for j in system.switching:
            if sig[j] == 0:
                sig[j] = int(np.sign(v[j]))
            if sig[j] == 0:
                raise TangentialContact(f"generating solution lingers on a hyperplane on [{ta}, {tb}]")
        pieces.append((ta, tb, system.canonical(sig)))
    return pieces


def _quadrature_rhs(system, eps, sig, fd_step, pullback="variational"):
    n = system.n
    branch = system.branch(sig)

    def rhs(t, z):
        x = z[:n]
        m = z[n:n + n * n].reshape(n, n)
        out = np.empty_like(z)
        out[:n] = system.generating_rhs(t, x)
        if eps:
            out[:n] += eps * branch(t, x, eps)
        out[n:n + n * n] = (-system.drift_jac(t, x, fd_step) @ m).ravel()
        f = branch(t, x, eps)
        if pullback == "variational":
            out[n + n * n:] = np.linalg.solve(m, f)
        else:
            out[n + n * n:] = np.linalg.solve(_pullback(system, t, x, fd_step), f)
        return out

    return rhs


def _pullback(system, t, y, fd_step):
    u = inverse_generating_flow(system, y, t)
    return fundamental_matrix(system, u, t, Tolerances(fd_step=fd_step))


def _integrate_pieces(system, x0, pieces, eps, tol, pullback="variational"):
    n = system.n
    z = np.concatenate([np.asarray(x0, dtype=float), np.eye(n).ravel(), np.zeros(n)])
    for ta, tb, sig in pieces:
        if tb <= ta:
            continue
        rhs = _quadrature_rhs(system, eps, sig, tol.fd_step, pullback)
        z = integrate_smooth(rhs, ta, z, tb, tol.rtol, tol.atol).x_b
    return z[n + n * n:]


def averaged_function(system: PiecewiseSystem, xi, tol: Tolerances = DEFAULT_TOL, split: bool = True) -> np.ndarray:
    """Classical averaged function at ``xi``.

    With ``split=False`` the discontinuous integrand is integrated in a
    single adaptive pass with the orthant resolved pointwise; this exists
    only to quantify what the split buys.
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if not split:
        return _averaged_unsplit(system, xi, tol)
    seg, crossings = generating_crossings(system, xi, tol)
    return _integrate_pieces(system, xi, _pieces(system, seg, crossings, tol), 0.0, tol)


def _averaged_unsplit(system, xi, tol):
    n = system.n

    def rhs(t, z):
        sig = system.canonical(tuple(s if s != 0 else 1 for s in orthant_signature(z[:n], tol.dead_tol)))
        return _quadrature_rhs(system, 0.0, sig, tol.fd_step)(t, z)

    z0 = np.concatenate([xi, np.eye(n).ravel(), np.zeros(n)])
    return integrate_smooth(rhs, 0.0, z0, system.period, tol.rtol, tol.atol).x_b[n + n * n:]


def perturbed_average(system: PiecewiseSystem, xi, eps, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Pull-back integral of the perturbation along the ``eps``-trajectory.

    Satisfies ``u(T, xi, eps) = xi + eps * perturbed_average(xi, eps)`` in
    standard-form coordinates.  For affine drifts the pull-back matrix is the
    inverse fundamental matrix; otherwise it is recomputed at every
    quadrature node from the inverse generating flow (slow).
    """
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    if eps == 0:
        return averaged_function(system, xi, tol)
    traj = integrate_piecewise(system, xi, eps, system.period, tol)
    pieces = [(s.t_a, s.t_b, s.signature) for s in traj.segments]
    mode = "variational" if system.affine_drift else "direct"
    return _integrate_pieces(system, xi, pieces, eps, tol, mode)


def averaged_jacobian(system: PiecewiseSystem, xi, fd_step: float = 1e-5, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Central-difference Jacobian of :func:`averaged_function`."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    n = xi.size
    jac = np.empty((n, n))
    for j in range(n):
        d = np.zeros(n)
        d[j] = fd_step
        jac[:, j] = (averaged_function(system, xi + d, tol) - averaged_function(system, xi - d, tol)) / (2 * fd_step)
    return jac


def classify(jacobian, margin_tol: float | None = None) -> str:
    """Stability verdict from the eigenvalues of the averaged Jacobian."""
    eig = np.linalg.eigvals(np.atleast_2d(np.asarray(jacobian, dtype=float)))
    if margin_tol is None:
        margin_tol = 1e-8 * max(1.0, float(np.max(np.abs(eig))))
    re = eig.real
    if np.all(re <= -margin_tol):
        return STABLE
    if np.any(re >= margin_tol):
        return UNSTABLE
    return INCONCLUSIVE


@dataclass
class AveragedReport:
    xi0: np.ndarray
    residual: float
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    verdict: str
    newton_iterations: int
    residual_history: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "xi0": [float(v) for v in self.xi0],
            "residual": float(self.residual),
            "jacobian": [[float(v) for v in row] for row in self.jacobian],
            "eigenvalues": [[float(v.real), float(v.imag)] for v in self.eigenvalues],
            "verdict": self.verdict,
            "newton_iterations": int(self.newton_iterations),
            "residual_history": [float(v) for v in self.residual_history],
        }


def damped_newton(fun, jac, x0, tol, max_iter, max_halvings=20, polish=True):
    """Newton iteration with step halving on residual increase.

    Returns ``(x, residual, iterations, history)``.  Once the residual test
    passes, one more Newton step is tried and kept if it does not raise the
    residual; residual tolerances alone leave ``x`` loose by a factor
    ``1/|J|``.
    """
    x = np.atleast_1d(np.asarray(x0, dtype=float)).copy()
    fx = fun(x)
    r = float(np.linalg.norm(fx))
    history = [r]
    it = 0
    while True:
        converged = r <= tol
        if converged and not polish:
            return x, r, it, history
        if not converged and it >= max_iter:
            raise NoConvergence(f"no convergence after {max_iter} iterations (residual {r:.3g})",
                                iterations=it, residual=r)
        J = jac(x)
        scale = max(1.0, float(np.max(np.abs(J)))) ** len(x)
        if abs(np.linalg.det(J)) < 1e-12 * scale:
            if converged:
                return x, r, it, history
            raise SingularJacobian(f"Jacobian is singular at {x.tolist()} (det={np.linalg.det(J):.3g})")
        step = np.linalg.solve(J, -fx)
        if converged:
            x_new = x + step
            f_new = fun(x_new)
            r_new = float(np.linalg.norm(f_new))
            if r_new <= r:
                x, r = x_new, r_new
                history.append(r)
            return x, r, it + 1, history
        lam = 1.0
        for _ in range(max_halvings + 1):
            x_new = x + lam * step
            f_new = fun(x_new)
            r_new = float(np.linalg.norm(f_new))
            if r_new < r:
                break
            lam *= 0.5
        else:
            raise NoConvergence(f"line search stalled at iteration {it + 1}", iterations=it + 1, residual=r)
        x, fx, r = x_new, f_new, r_new
        history.append(r)
        it += 1


def find_zero(system: PiecewiseSystem, xi_guess, newton_tol: float = 1e-10, max_iter: int = 50,
              tol: Tolerances = DEFAULT_TOL, margin_tol: float | None = None) -> AveragedReport:
    """Zero of the averaged function by damped Newton, plus its stability verdict."""
    def fun(x):
        return averaged_function(system, x, tol)

    def jac(x):
        return averaged_jacobian(system, x, tol.fd_step, tol)

    xi0, r, its, history = damped_newton(fun, jac, xi_guess, newton_tol, max_iter)
    J = jac(xi0)
    eig = np.linalg.eigvals(J)
    return AveragedReport(xi0, r, J, eig, classify(J, margin_tol), its, history)


def tabulate(system: PiecewiseSystem, grid, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Rows ``(xi..., fbar...)`` over a list of points (for plotting)."""
    rows = []
    for xi in grid:
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        rows.append(np.concatenate([xi, averaged_function(system, xi, tol)]))
    return np.array(rows)
