"""Batch command-line front end.

Usage::

    pwsavg <command> --scenario <path> --out <dir> [--epsilon <v>] [--quiet]

Commands: simulate, average, find-periodic, classify, poincare, check, sweep.
Every run writes ``report.json`` into the output directory (default taken
from ``$PWSAVG_OUT``, else ``./pwsavg_out``) plus command-specific CSV files.

Exit codes: 0 success, 1 numerical failure, 2 scenario error, 3 failed
hypothesis check.
"""
from __future__ import annotations

import argparse
import itertools
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import averaging, checker, poincare
from .errors import NumericalError, PwsavgError, ScenarioError, SchemaError
from .export import write_csv, write_json
from .integrator import integrate_piecewise, write_events_csv, write_trajectory_csv
from .scenario import SCHEMA_VERSION, Scenario, parse_scenario, scenario_from_dict

COMMANDS = ("simulate", "average", "find-periodic", "classify", "poincare", "check", "sweep")
OUT_ENV = "PWSAVG_OUT"
EXIT_OK, EXIT_NUMERICAL, EXIT_SCENARIO, EXIT_HYPOTHESIS = 0, 1, 2, 3


class HypothesisFailure(Exception):
    pass


def _need_eps(sc: Scenario, command: str):
    if not sc.epsilon > 0:
        raise SchemaError(f"command {command!r} requires epsilon > 0", "epsilon")


def _fixed_point(system, sc, xi0):
    o = sc.options
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return poincare.find_fixed_point(system, sc.epsilon, poincare.off_hyperplanes(system, xi0, sc.epsilon),
                                         o["fixed_point_tol"], o["max_iter"], o["monodromy_fd_step"],
                                         sc.tolerances)


def _find_zero(system, sc):
    return averaging.find_zero(system, sc.xi_guess, sc.options["newton_tol"], sc.options["max_iter"],
                               sc.tolerances)


def cmd_simulate(sc: Scenario, out: Path):
    system = sc.system()
    horizon = sc.options["horizon"] if sc.options["horizon"] is not None else system.period
    traj = integrate_piecewise(system, sc.xi_guess, sc.epsilon, horizon, sc.tolerances)
    write_trajectory_csv(traj, out / "trajectory.csv", sc.options["samples_per_segment"])
    write_events_csv(traj, out / "events.csv")
    jumps = traj.junction_jumps()
    report = {
        "horizon": float(horizon),
        "final_state": traj.final_state,
        "event_count": len(traj.events),
        "events": [{"time": e.time, "component": e.component, "sign_before": e.sign_before,
                    "sign_after": e.sign_after, "margin": e.margin} for e in traj.events],
        "max_junction_jump": float(jumps.max()) if jumps.size else 0.0,
    }
    return report, ["trajectory.csv", "events.csv"]


def cmd_average(sc: Scenario, out: Path):
    system = sc.system()
    o = sc.options
    j = o["average_component"]
    if not 0 <= j < system.n:
        raise SchemaError("options.average_component out of range", "options.average_component")
    lo, hi = o["average_range"] or (sc.xi_guess[j] - 1.0, sc.xi_guess[j] + 1.0)
    rows = []
    for v in np.linspace(lo, hi, o["average_count"]):
        xi = np.array(sc.xi_guess, dtype=float)
        xi[j] = v
        try:
            fbar = averaging.averaged_function(system, xi, sc.tolerances)
        except NumericalError:
            fbar = np.full(system.n, np.nan)
        rows.append([*xi, *fbar])
    header = [f"xi{k + 1}" for k in range(system.n)] + [f"fbar{k + 1}" for k in range(system.n)]
    write_csv(out / "averaged.csv", header, rows)
    report = _find_zero(system, sc).to_dict()
    write_json(out / "averaged_report.json", {"schema_version": SCHEMA_VERSION, **report})
    return {"averaged": report}, ["averaged.csv", "averaged_report.json"]


def cmd_find_periodic(sc: Scenario, out: Path):
    system = sc.system()
    avg = _find_zero(system, sc)
    report = {"xi0": avg.xi0, "averaged_residual": avg.residual, "xi_eps": None}
    if sc.epsilon > 0:
        xi_eps = _fixed_point(system, sc, avg.xi0)
        report["xi_eps"] = xi_eps
        report["fixed_point_residual"] = float(np.linalg.norm(
            poincare.standard_form_map(system, xi_eps, sc.epsilon, sc.tolerances) - xi_eps))
    return report, []


def cmd_classify(sc: Scenario, out: Path):
    system = sc.system()
    avg = _find_zero(system, sc)
    report = {"xi0": avg.xi0, "eigenvalues": np.asarray(avg.eigenvalues, dtype=complex), "verdict": avg.verdict}
    if sc.epsilon > 0:
        xi_eps = _fixed_point(system, sc, avg.xi0)
        mono = poincare.monodromy(system, xi_eps, sc.epsilon, sc.options["monodromy_fd_step"], avg.jacobian,
                                  sc.tolerances)
        mod = np.abs(mono.eigenvalues)
        report["multipliers"] = np.asarray(mono.eigenvalues, dtype=complex)
        report["multiplier_verdict"] = (averaging.STABLE if np.all(mod < 1) else
                                        averaging.UNSTABLE if np.any(mod > 1) else averaging.INCONCLUSIVE)
    return report, []


def cmd_poincare(sc: Scenario, out: Path):
    _need_eps(sc, "poincare")
    system = sc.system()
    o = sc.options
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = poincare.analyse(system, sc.epsilon, sc.xi_guess, o["fixed_point_tol"], o["monodromy_fd_step"],
                               o["stability_radius"], o["stability_iterations"], sc.tolerances)
    body = rep.to_dict()
    write_json(out / "poincare_report.json", {"schema_version": SCHEMA_VERSION, **body})
    rows = []
    if rep.stability is not None:
        for ray, dist in enumerate(rep.stability.distances):
            rows.extend([step, ray, d] for step, d in enumerate(dist))
    write_csv(out / "iterates.csv", ["step", "ray", "distance"], rows)
    return {"poincare": body}, ["poincare_report.json", "iterates.csv"]


def cmd_check(sc: Scenario, out: Path):
    system = sc.system()
    rep = checker.check_hypotheses(system, sc.xi_guess, sc.tolerances, sc.options["check_samples"])
    body = rep.to_dict()
    write_json(out / "hypothesis_report.json", {"schema_version": SCHEMA_VERSION, **body})
    if not rep.passed:
        raise HypothesisFailure(body)
    return {"hypotheses": body}, ["hypothesis_report.json"]


def _sweep_point(doc):
    sc = scenario_from_dict(doc)
    system = sc.system()
    try:
        avg = _find_zero(system, sc)
        xi_eps = _fixed_point(system, sc, avg.xi0)
        mono = poincare.monodromy(system, xi_eps, sc.epsilon, sc.options["monodromy_fd_step"], avg.jacobian,
                                  sc.tolerances)
    except NumericalError as exc:
        return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}
    return {"ok": True, "xi_eps": xi_eps.tolist(), "mu": [[z.real, z.imag] for z in mono.eigenvalues],
            "residual": mono.residual}


def cmd_sweep(sc: Scenario, out: Path):
    system = sc.system()
    o = sc.options
    eps_values = o["sweep_epsilon"] or [sc.epsilon]
    if any(not e > 0 for e in eps_values):
        raise SchemaError("sweep requires positive epsilon values", "options.sweep_epsilon")
    pnames = sorted((o["sweep_params"] or {}).keys())
    pgrid = list(itertools.product(*[o["sweep_params"][k] for k in pnames])) if pnames else [()]
    docs, keys = [], []
    for combo in pgrid:
        for eps in eps_values:
            d = sc.to_dict()
            d["model"]["params"].update(dict(zip(pnames, combo)))
            d["epsilon"] = eps
            d["options"] = {k: v for k, v in d["options"].items() if k not in ("sweep_epsilon", "sweep_params")}
            scenario_from_dict(d)  # surface invalid grid points as scenario errors up front
            docs.append(d)
            keys.append((combo, eps))
    if o["workers"] > 1 and len(docs) > 1:
        with ProcessPoolExecutor(max_workers=min(o["workers"], len(docs))) as pool:
            results = list(pool.map(_sweep_point, docs))
    else:
        results = [_sweep_point(d) for d in docs]
    n = system.n
    header = [*pnames, "eps", *[f"xi_eps{k + 1}" for k in range(n)], *[f"mu{k + 1}" for k in range(n)],
              *[f"mu_imag{k + 1}" for k in range(n)], "mu_residual", "status"]
    rows, points = [], []
    for (combo, eps), res in zip(keys, results):
        if res["ok"]:
            rows.append([*combo, eps, *res["xi_eps"], *[m[0] for m in res["mu"]], *[m[1] for m in res["mu"]],
                         res["residual"], "ok"])
        else:
            rows.append([*combo, eps, *([float("nan")] * (3 * n + 1)), "failed"])
        points.append({"params": dict(zip(pnames, combo)), "eps": eps, **res})
    write_csv(out / "sweep_summary.csv", header, rows)
    return {"points": points}, ["sweep_summary.csv"]


HANDLERS = {
    "simulate": cmd_simulate, "average": cmd_average, "find-periodic": cmd_find_periodic,
    "classify": cmd_classify, "poincare": cmd_poincare, "check": cmd_check, "sweep": cmd_sweep,
}


def run(command: str, scenario: Scenario, output_dir) -> tuple[dict, int]:
    """Execute one command; returns the run report and the exit code."""
    if command not in HANDLERS:
        raise ValueError(f"unknown command {command!r}")
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = {"schema_version": SCHEMA_VERSION, "command": command, "scenario": scenario.to_dict(),
              "status": "ok", "report": None, "artifacts": [], "error": None}
    started = time.perf_counter()
    code = EXIT_OK
    try:
        body, artifacts = HANDLERS[command](scenario, out)
        report["report"], report["artifacts"] = body, artifacts
    except HypothesisFailure as exc:
        report["status"], report["report"] = "hypothesis_failed", {"hypotheses": exc.args[0]}
        report["artifacts"] = ["hypothesis_report.json"]
        code = EXIT_HYPOTHESIS
    except ScenarioError as exc:
        report["status"], code = "scenario_error", EXIT_SCENARIO
        report["error"] = _error(exc, command, scenario)
    except (NumericalError, ValueError) as exc:
        report["status"], code = "numerical_error", EXIT_NUMERICAL
        report["error"] = _error(exc, command, scenario)
    report["timing"] = {"wall_seconds": time.perf_counter() - started}
    write_json(out / "report.json", report)
    return report, code


def _error(exc, command, scenario):
    info = {"type": type(exc).__name__, "message": str(exc), "command": command,
            "model": scenario.model, "epsilon": scenario.epsilon}
    for attr in ("time", "component", "margin", "key"):
        if getattr(exc, attr, None) is not None:
            info[attr] = getattr(exc, attr)
    return info


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwsavg", description=__doc__.split("\n")[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--scenario", required=True, help="scenario JSON file")
    parser.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./pwsavg_out)")
    parser.add_argument("--epsilon", type=float, default=None, help="override the scenario epsilon")
    parser.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = args.out or os.environ.get(OUT_ENV) or "pwsavg_out"
    try:
        sc = parse_scenario(args.scenario)
        if args.epsilon is not None:
            doc = sc.to_dict()
            doc["epsilon"] = args.epsilon
            sc = scenario_from_dict(doc)
    except PwsavgError as exc:
        print(f"pwsavg: scenario error: {exc}", file=sys.stderr)
        return EXIT_SCENARIO
    report, code = run(args.command, sc, out)
    if code not in (EXIT_OK, EXIT_HYPOTHESIS) and report["error"]:
        e = report["error"]
        print(f"pwsavg {args.command} [{e['model']}, eps={e['epsilon']:g}]: {e['type']}: {e['message']}",
              file=sys.stderr)
    elif not args.quiet:
        print(f"pwsavg {args.command}: {report['status']} -> {Path(out) / 'report.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
