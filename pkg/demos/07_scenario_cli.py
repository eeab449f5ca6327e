"""
Reproducible runs from a scenario file
======================================

The ``pwsavg`` command reads a JSON scenario, writes ``report.json`` and CSV
artifacts, and exits 0/1/2/3 for success, numerical failure, bad scenario,
or failed hypothesis check.  The same runs are reachable from Python.
"""
import json
import tempfile
from pathlib import Path

from pwsavg.cli import main

scenario = {
    "schema_version": 1,
    "model": {"name": "dry_friction", "params": {"a": 0.3, "b": 0.1}},
    "epsilon": 0.01,
    "xi_guess": [-0.7],
    "options": {"stability_iterations": 20, "sweep_epsilon": [0.005, 0.01, 0.02]},
}

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "scenario.json"
    path.write_text(json.dumps(scenario))
    for command in ("classify", "sweep"):
        out = Path(tmp) / command
        code = main([command, "--scenario", str(path), "--out", str(out)])
        print("exit code", code)
    print((Path(tmp) / "sweep" / "sweep_summary.csv").read_text())
    report = json.loads((Path(tmp) / "classify" / "report.json").read_text())
    print(json.dumps(report["report"], indent=1))
