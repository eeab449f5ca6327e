"""Piecewise-smooth periodic systems  x' + h(t, x) = eps * f(t, x, eps).

The perturbation ``f`` is smooth inside each open orthant and may jump across
the coordinate hyperplanes ``{x[j] = 0}`` for ``j`` in ``switching``.  Inside
the orthant with sign vector ``s`` it coincides with a smooth branch
``f_s``; a :class:`PiecewiseSystem` stores all branches behind a single
callback ``perturbation(t, x, eps, signs)``.

Component indices are zero-based throughout the package.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import InvalidParams, UnknownModel, UnresolvedOrthant

DEAD_TOL = 1e-9

Signature = tuple[int, ...]


def orthant_signature(x, dead_tol: float = DEAD_TOL) -> Signature:
    """Sign vector of ``x`` with a dead band.

    Entry ``j`` is ``sign(x[j])`` when ``|x[j]| > dead_tol`` and 0 otherwise.

    >>> orthant_signature([-0.3, 0.2])
    (-1, 1)
    >>> orthant_signature([1e-12])
    (0,)
    """
    if dead_tol <= 0:
        raise ValueError("dead_tol must be positive")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return tuple(int(np.sign(v)) if abs(v) > dead_tol else 0 for v in x)


@dataclass(frozen=True)
class PiecewiseSystem:
    """Immutable description of a piecewise-smooth periodic system.

    Parameters
    ----------
    n : int
        State dimension.
    period : float
        Forcing period ``T``.
    drift : callable
        ``drift(t, x) -> ndarray``, the smooth part ``h``.  Does not depend on
        ``eps``.
    perturbation : callable
        ``perturbation(t, x, eps, signs) -> ndarray``; returns the branch
        ``f_s`` selected by the sign tuple ``signs`` (entries +-1).
    switching : tuple of int
        Components whose hyperplanes carry discontinuities of ``f``.
    drift_jacobian : callable, optional
        Analytic ``dh/dx``; finite differences are used when absent.
    affine_drift : bool
        True when ``h`` is affine in ``x``.  The generating flow is then
        affine in its initial value, which lets the pull-back matrix be
        propagated along perturbed trajectories without second derivatives.
    """

    n: int
    period: float
    drift: Callable
    perturbation: Callable
    switching: tuple[int, ...]
    name: str = "custom"
    params: Mapping[str, float] = field(default_factory=dict)
    drift_jacobian: Callable | None = None
    affine_drift: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise InvalidParams("dimension must be positive")
        if not self.period > 0:
            raise InvalidParams("period must be positive")
        sw = tuple(sorted(set(int(j) for j in self.switching)))
        if any(j < 0 or j >= self.n for j in sw):
            raise InvalidParams(f"switching components {sw} out of range for n={self.n}")
        object.__setattr__(self, "switching", sw)

    def canonical(self, signs) -> Signature:
        """Sign tuple with non-switching entries replaced by +1."""
        signs = tuple(int(s) for s in signs)
        if len(signs) != self.n:
            raise ValueError(f"signature length {len(signs)} != n={self.n}")
        return tuple(s if j in self.switching else 1 for j, s in enumerate(signs))

    def branch(self, signs) -> Callable:
        """The smooth branch ``f_s`` as a callable ``(t, x, eps)``."""
        sig = self.canonical(signs)
        if any(sig[j] == 0 for j in self.switching):
            raise UnresolvedOrthant(f"signature {sig} has a zero entry on a switching component")
        return lambda t, x, eps: np.asarray(self.perturbation(t, x, eps, sig), dtype=float)

    def drift_jac(self, t, x, fd_step: float = 1e-5) -> np.ndarray:
        """``dh/dx`` at ``(t, x)``; central differences unless analytic."""
        x = np.asarray(x, dtype=float)
        if self.drift_jacobian is not None:
            return np.atleast_2d(np.asarray(self.drift_jacobian(t, x), dtype=float))
        jac = np.empty((self.n, self.n))
        for j in range(self.n):
            dx = np.zeros(self.n)
            dx[j] = fd_step
            jac[:, j] = (np.asarray(self.drift(t, x + dx)) - np.asarray(self.drift(t, x - dx))) / (2 * fd_step)
        return jac

    def generating_rhs(self, t, x) -> np.ndarray:
        return -np.asarray(self.drift(t, x), dtype=float)


def rhs_full(system: PiecewiseSystem, t, x, eps, sig) -> np.ndarray:
    """Velocity ``-h(t, x) + eps * f_sig(t, x, eps)`` in the orthant ``sig``."""
    x = np.asarray(x, dtype=float)
    out = system.generating_rhs(t, x)
    if eps == 0:
        return out
    return out + eps * system.branch(sig)(t, x, eps)


def perturbation_periodicity_defect(system: PiecewiseSystem, x, eps=0.0, n_probe=100) -> float:
    """Largest ``|f_s(t) - f_s(t + T)|`` over a probe grid and all orthants."""
    x = np.asarray(x, dtype=float)
    ts = np.linspace(0.0, system.period, n_probe, endpoint=False)
    worst = 0.0
    m = len(system.switching)
    for k in range(2**m):
        signs = [1] * system.n
        for i, j in enumerate(system.switching):
            signs[j] = -1 if (k >> i) & 1 else 1
        f = system.branch(signs)
        for t in ts:
            worst = max(worst, float(np.max(np.abs(f(t, x, eps) - f(t + system.period, x, eps)))))
    return worst


# -- built-in models ---------------------------------------------------------

def _positive(params, names):
    for name in names:
        if not params[name] > 0:
            raise InvalidParams(f"parameter {name!r} must be positive, got {params[name]!r}")


def _dry_friction(a, b, sign=1.0, name="dry_friction"):
    # Velocity of a vibrated body: x' = cos t - a*eps*E(x) + b*eps*E(-x).
    def drift(t, x):
        return np.array([-np.cos(t)])

    def perturbation(t, x, eps, signs):
        return np.array([sign * (-a if signs[0] > 0 else b)])

    return PiecewiseSystem(
        n=1, period=2 * np.pi, drift=drift, perturbation=perturbation, switching=(0,),
        name=name, params={"a": a, "b": b},
        drift_jacobian=lambda t, x: np.zeros((1, 1)), affine_drift=True,
    )


def dry_friction(a=0.3, b=0.1) -> PiecewiseSystem:
    """Body on a vibrating plate with asymmetric Coulomb friction."""
    _positive({"a": a, "b": b}, ("a", "b"))
    return _dry_friction(float(a), float(b))


def anti_dry_friction(a=0.3, b=0.1) -> PiecewiseSystem:
    """Dry friction with the perturbation sign reversed (destabilising)."""
    _positive({"a": a, "b": b}, ("a", "b"))
    return _dry_friction(float(a), float(b), sign=-1.0, name="anti_dry_friction")


def dual_dry_friction(a1=0.2, b1=0.2, a2=0.2, b2=0.2, phi=np.pi / 3) -> PiecewiseSystem:
    """Two uncoupled dry-friction velocities, the second forced by cos(t + phi)."""
    _positive({"a1": a1, "b1": b1, "a2": a2, "b2": b2}, ("a1", "b1", "a2", "b2"))
    a1, b1, a2, b2, phi = map(float, (a1, b1, a2, b2, phi))

    def drift(t, x):
        return np.array([-np.cos(t), -np.cos(t + phi)])

    def perturbation(t, x, eps, signs):
        return np.array([-a1 if signs[0] > 0 else b1, -a2 if signs[1] > 0 else b2])

    return PiecewiseSystem(
        n=2, period=2 * np.pi, drift=drift, perturbation=perturbation, switching=(0, 1),
        name="dual_dry_friction", params={"a1": a1, "b1": b1, "a2": a2, "b2": b2, "phi": phi},
        drift_jacobian=lambda t, x: np.zeros((2, 2)), affine_drift=True,
    )


BUILTINS = {
    "dry_friction": (dry_friction, ("a", "b")),
    "anti_dry_friction": (anti_dry_friction, ("a", "b")),
    "dual_dry_friction": (dual_dry_friction, ("a1", "b1", "a2", "b2", "phi")),
}


def make_builtin(name: str, params: Mapping[str, float] | None = None) -> PiecewiseSystem:
    """Instantiate a registered model.

    Missing parameters take the factory defaults; unknown ones are rejected.
    """
    if name not in BUILTINS:
        raise UnknownModel(f"unknown model {name!r}; available: {sorted(BUILTINS)}")
    factory, names = BUILTINS[name]
    params = dict(params or {})
    extra = set(params) - set(names)
    if extra:
        raise InvalidParams(f"unknown parameters for {name}: {sorted(extra)}")
    for key, value in params.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not np.isfinite(value):
            raise InvalidParams(f"parameter {key!r} must be a finite number")
    return factory(**params)
