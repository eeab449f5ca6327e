"""Numerical checks of the standing hypotheses on a system and a generating orbit.

Each check returns a :class:`CheckResult`; failures carry a witness (time,
component, value) so a report can say where a hypothesis broke.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .averaging import generating_crossings
from .integrator import DEFAULT_TOL, Tolerances, generating_flow, integrate_piecewise
from .model import PiecewiseSystem


@dataclass
class CheckResult:
    name: str
    passed: bool
    margins: dict = field(default_factory=dict)
    witness: dict | None = None

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "margins": _plain(self.margins),
                "witness": _plain(self.witness)}


@dataclass
class HypothesisReport:
    checks: list

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "checks": [c.to_dict() for c in self.checks]}


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)) and not isinstance(obj, bool):
        return int(obj)
    return obj


def check_generating_periodicity(system: PiecewiseSystem, sample_count: int = 50, tol: float = 1e-8,
                                 box=(-2.0, 2.0), integ: Tolerances = DEFAULT_TOL) -> CheckResult:
    """Every sampled generating solution returns to its start after one period.

    Samples are the first ``sample_count`` points of an unscrambled Halton
    sequence mapped into ``box`` (deterministic).
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    pts = qmc.Halton(d=system.n, scramble=False).random(sample_count + 1)[1:]
    lo, hi = box
    worst, witness = 0.0, None
    for p in pts:
        xi = lo + (hi - lo) * p
        defect = float(np.max(np.abs(generating_flow(system, xi, system.period, integ) - xi)))
        if defect > worst:
            worst = defect
            if defect > tol:
                witness = {"time": system.period, "xi": xi.tolist(), "value": defect}
                break
    return CheckResult("generating_periodicity", worst <= tol, {"max_defect": worst}, witness)


def check_crossing_structure(system: PiecewiseSystem, xi0, structural_tol: float | None = None,
                             integ: Tolerances = DEFAULT_TOL) -> CheckResult:
    """Finitely many crossings, none at ``t = 0`` or ``t = T``, no double touches."""
    T = system.period
    stol = 1e-6 * T if structural_tol is None else structural_tol
    _, crossings = generating_crossings(system, xi0, integ)
    events = [{"time": c.time, "component": c.component, "margin": c.margin, "kind": c.kind} for c in crossings]
    margins = {"m": len(crossings), "events": events}

    def fail(reason, c):
        return CheckResult("crossing_structure", False, margins,
                           {"reason": reason, "time": c.time, "component": c.component,
                            "value": float(np.atleast_1d(xi0)[c.component]) if c.kind == "start" else c.margin})

    if len(crossings) > integ.max_events:
        return CheckResult("crossing_structure", False, margins,
                           {"reason": "too many crossings", "time": T, "component": -1, "value": len(crossings)})
    for c in crossings:
        if c.kind == "start" or c.time <= stol:
            return fail("first crossing time must be positive (starts on a switching hyperplane)", c)
        if c.time >= T - stol:
            return fail("crossing at the end of the period", c)
    for j in system.switching:
        times = [c.time for c in crossings if c.component == j]
        for t1, t2 in zip(times, times[1:]):
            if t2 - t1 <= stol:
                c = next(c for c in crossings if c.component == j and c.time == t2)
                return fail("repeated contact with the same hyperplane", c)
    return CheckResult("crossing_structure", True, margins, None)


def check_transversality(system: PiecewiseSystem, xi0, transversality_tol: float = 1e-6,
                         integ: Tolerances = DEFAULT_TOL, fd_step: float = 1e-6) -> CheckResult:
    """Normal speed at every generating crossing is at least ``transversality_tol``.

    Margins are evaluated from the right-hand side and, independently, from
    a central difference of the dense output; both are reported.
    """
    seg, crossings = generating_crossings(system, xi0, integ)
    crossings = [c for c in crossings if c.kind != "start"]
    rows = []
    for c in crossings:
        x = seg(c.time)
        direct = abs(system.generating_rhs(c.time, x)[c.component])
        lo, hi = max(0.0, c.time - fd_step), min(system.period, c.time + fd_step)
        dense = abs((seg(hi)[c.component] - seg(lo)[c.component]) / (hi - lo))
        rows.append({"time": c.time, "component": c.component, "margin": direct,
                     "margin_dense": dense, "kind": c.kind})
    margins = {"events": rows, "min_margin": min((r["margin"] for r in rows), default=None)}
    for r in rows:
        if r["kind"] == "graze" or r["margin"] < transversality_tol:
            return CheckResult("transversality", False, margins,
                               {"time": r["time"], "component": r["component"], "value": r["margin"]})
    return CheckResult("transversality", True, margins, None)


def check_hypotheses(system: PiecewiseSystem, xi0, integ: Tolerances = DEFAULT_TOL,
                     sample_count: int = 50) -> HypothesisReport:
    """All three checks; transversality only when the crossing structure holds."""
    checks = [check_generating_periodicity(system, sample_count, integ=integ),
              check_crossing_structure(system, xi0, integ=integ)]
    if checks[-1].passed:
        checks.append(check_transversality(system, xi0, integ.transversality_tol, integ))
    return HypothesisReport(checks)


def _switch_times(system, xi, eps, integ):
    traj = integrate_piecewise(system, xi, eps, system.period, integ)
    return np.array([e.time for e in traj.events]), [e.component for e in traj.events]


def switching_time_sensitivity(system: PiecewiseSystem, xi0, eps: float = 0.0, probe_step: float = 1e-4,
                               rel_tol: float = 1e-3, integ: Tolerances = DEFAULT_TOL) -> dict:
    """Finite-difference slopes of the switching times in ``xi`` and ``eps``.

    Slopes are taken at steps ``h`` and ``h/2`` (central in ``xi``; in
    ``eps`` central for ``eps > 0`` and forward at ``eps = 0``).  The probe
    passes when both estimates agree to ``rel_tol`` relative.
    """
    xi0 = np.atleast_1d(np.asarray(xi0, dtype=float))
    base, comps = _switch_times(system, xi0, eps, integ)

    def times(xi, e):
        t, c = _switch_times(system, xi, e, integ)
        if c != comps:
            raise ValueError("switching sequence changes inside the probe neighbourhood")
        return t

    def slope_xi(k, h):
        d = np.zeros_like(xi0)
        d[k] = h
        return (times(xi0 + d, eps) - times(xi0 - d, eps)) / (2 * h)

    def slope_eps(h):
        if eps > h:
            return (times(xi0, eps + h) - times(xi0, eps - h)) / (2 * h)
        return (times(xi0, eps + h) - base) / h

    h = probe_step
    d_xi = [(slope_xi(k, h), slope_xi(k, h / 2)) for k in range(xi0.size)]
    d_eps = (slope_eps(h), slope_eps(h / 2))

    def agree(a, b):
        return bool(np.all(np.abs(a - b) <= rel_tol * np.maximum(np.abs(b), 1e-12)))

    passed = all(agree(a, b) for a, b in d_xi) and agree(*d_eps)
    return {
        "times": base, "components": comps,
        "d_xi": np.array([b for _, b in d_xi]).T,  # rows: events, columns: xi components
        "d_xi_coarse": np.array([a for a, _ in d_xi]).T,
        "d_eps": d_eps[1], "d_eps_coarse": d_eps[0], "passed": passed,
    }


def measure_convergence_check(system: PiecewiseSystem, xi, sigma: float, eps_list, grid_size: int = 10_000,
                              integ: Tolerances = DEFAULT_TOL) -> dict:
    """Measure of ``{t : |f(t, x(t, u(t), 0), eps) - f(t, x(t, xi, 0), 0)| >= sigma}``.

    By construction of the standard-form trajectory ``u``,
    ``x(t, u(t), 0)`` is the perturbed solution itself, which is what gets
    sampled.  Measures are counted on a uniform midpoint grid.
    """
    if grid_size < 1000:
        raise ValueError("grid_size must be at least 1000")
    eps_list = [float(e) for e in eps_list]
    if any(a <= b for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly decreasing")
    T = system.period
    dt = T / grid_size
    t = (np.arange(grid_size) + 0.5) * dt
    ref = _perturbation_samples(system, integrate_piecewise(system, xi, 0.0, T, integ), t, 0.0)
    measures = []
    for eps in eps_list:
        if eps == 0:
            measures.append(0.0)
            continue
        vals = _perturbation_samples(system, integrate_piecewise(system, xi, eps, T, integ), t, eps)
        dev = np.linalg.norm(vals - ref, axis=1)
        measures.append(float(np.count_nonzero(dev >= sigma) * dt))
    measures = np.array(measures)
    pos = [(e, m) for e, m in zip(eps_list, measures) if e > 0]
    ratios = np.array([m / e for e, m in pos])
    nz = ratios[ratios > 0]
    return {
        "eps": np.array(eps_list), "measure": measures, "ratio": ratios,
        "K": float(np.max(ratios)) if ratios.size else 0.0,
        "spread": float(np.max(nz) / np.min(nz)) if nz.size else 1.0,
        "strictly_decreasing": bool(np.all(np.diff(measures) < 0)),
    }


def _perturbation_samples(system, traj, t, eps):
    x = traj(t)
    out = np.empty((t.size, system.n))
    for k, tk in enumerate(t):
        out[k] = system.branch(traj.signature_at(tk))(tk, x[:, k], eps)
    return out
