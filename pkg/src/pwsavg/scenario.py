"""Scenario documents: strict JSON input for the command-line runs.

A scenario names a built-in model and its parameters, the perturbation size
``epsilon``, an initial guess ``xi_guess`` and optional tolerances and
command options.  Unknown keys are rejected at every level.  Example::

    {"schema_version": 1,
     "model": {"name": "dry_friction", "params": {"a": 0.3, "b": 0.1}},
     "epsilon": 0.01,
     "xi_guess": [-0.7]}
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields

from .errors import ParseError, SchemaError
from .integrator import Tolerances
from .model import BUILTINS, PiecewiseSystem, make_builtin

SCHEMA_VERSION = 1

OPTION_DEFAULTS = {
    "horizon": None,              # simulate; defaults to one period
    "samples_per_segment": 50,    # simulate CSV density
    "newton_tol": 1e-10,
    "max_iter": 50,
    "fixed_point_tol": 1e-10,
    "monodromy_fd_step": 1e-6,
    "stability_radius": 0.05,
    "stability_iterations": 200,
    "average_component": 0,       # average: tabulated component
    "average_range": None,        # average: [lo, hi]; default xi_guess +- 1
    "average_count": 41,
    "check_samples": 50,
    "sweep_epsilon": None,        # sweep: list of eps values
    "sweep_params": None,         # sweep: {param: [values]}
    "workers": 1,
}


@dataclass
class Scenario:
    model: str
    params: dict
    epsilon: float
    xi_guess: list
    tolerances: Tolerances = field(default_factory=Tolerances)
    options: dict = field(default_factory=lambda: dict(OPTION_DEFAULTS))
    schema_version: int = SCHEMA_VERSION

    def system(self) -> PiecewiseSystem:
        return make_builtin(self.model, self.params)

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "model": {"name": self.model, "params": dict(self.params)},
            "epsilon": self.epsilon,
            "xi_guess": list(self.xi_guess),
            "tolerances": {k: v for k, v in asdict(self.tolerances).items() if v is not None},
            "options": dict(self.options),
        }


def _number(value, key, *, minimum=None, strict=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise SchemaError(f"{key} must be a finite number", key)
    if minimum is not None and (value <= minimum if strict else value < minimum):
        raise SchemaError(f"{key} must be {'>' if strict else '≥'} {minimum:g}", key)
    return value


def _reject_unknown(obj, allowed, where):
    if not isinstance(obj, dict):
        raise SchemaError(f"{where} must be an object", where)
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise SchemaError(f"unknown key {extra[0]!r} in {where}", extra[0])


def scenario_from_dict(doc) -> Scenario:
    _reject_unknown(doc, {"schema_version", "model", "epsilon", "xi_guess", "tolerances", "options"}, "scenario")
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaError(f"unsupported schema_version {version!r}", "schema_version")
    for key in ("model", "epsilon", "xi_guess"):
        if key not in doc:
            raise SchemaError(f"missing required key {key!r}", key)

    model = doc["model"]
    _reject_unknown(model, {"name", "params"}, "model")
    if "name" not in model or not isinstance(model["name"], str):
        raise SchemaError("model.name must be a string", "model.name")
    params = model.get("params", {})
    _reject_unknown(params, BUILTINS.get(model["name"], (None, tuple(params)))[1], "model.params")
    for k, v in params.items():
        _number(v, f"model.params.{k}")
    make_builtin(model["name"], params)  # UnknownModel / InvalidParams

    eps = _number(doc["epsilon"], "epsilon", minimum=0)
    if eps > 1:
        raise SchemaError("epsilon must be ≤ 1", "epsilon")
    xi = doc["xi_guess"]
    if not isinstance(xi, list) or not xi:
        raise SchemaError("xi_guess must be a non-empty list", "xi_guess")
    xi = [_number(v, "xi_guess") for v in xi]
    n = make_builtin(model["name"], params).n
    if len(xi) != n:
        raise SchemaError(f"xi_guess must have length {n}", "xi_guess")

    tol_doc = doc.get("tolerances", {})
    _reject_unknown(tol_doc, {f.name for f in fields(Tolerances)}, "tolerances")
    for k, v in tol_doc.items():
        _number(v, f"tolerances.{k}", minimum=0, strict=True)
    if "max_events" in tol_doc and not isinstance(tol_doc["max_events"], int):
        raise SchemaError("tolerances.max_events must be an integer", "tolerances.max_events")
    tolerances = Tolerances(**tol_doc)

    opt_doc = doc.get("options", {})
    _reject_unknown(opt_doc, OPTION_DEFAULTS, "options")
    options = dict(OPTION_DEFAULTS)
    options.update(opt_doc)
    _check_options(options)
    return Scenario(model["name"], dict(params), float(eps), [float(v) for v in xi],
                    tolerances, options, version)


def _check_options(opt):
    for key in ("newton_tol", "fixed_point_tol", "monodromy_fd_step"):
        _number(opt[key], f"options.{key}", minimum=0, strict=True)
    for key in ("max_iter", "stability_iterations", "average_count", "check_samples", "workers",
                "samples_per_segment"):
        if not isinstance(opt[key], int) or isinstance(opt[key], bool) or opt[key] < 1:
            raise SchemaError(f"options.{key} must be a positive integer", f"options.{key}")
    _number(opt["stability_radius"], "options.stability_radius", minimum=0)
    if opt["horizon"] is not None:
        _number(opt["horizon"], "options.horizon", minimum=0)
    if opt["average_range"] is not None:
        r = opt["average_range"]
        if not (isinstance(r, list) and len(r) == 2) or r[0] >= r[1]:
            raise SchemaError("options.average_range must be [lo, hi] with lo < hi", "options.average_range")
    if opt["sweep_epsilon"] is not None:
        if not isinstance(opt["sweep_epsilon"], list) or not opt["sweep_epsilon"]:
            raise SchemaError("options.sweep_epsilon must be a non-empty list", "options.sweep_epsilon")
        for v in opt["sweep_epsilon"]:
            _number(v, "options.sweep_epsilon", minimum=0, strict=True)
    if opt["sweep_params"] is not None:
        if not isinstance(opt["sweep_params"], dict):
            raise SchemaError("options.sweep_params must be an object", "options.sweep_params")
        for k, vals in opt["sweep_params"].items():
            if not isinstance(vals, list) or not vals:
                raise SchemaError(f"options.sweep_params.{k} must be a non-empty list", f"options.sweep_params.{k}")


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ParseError(f"cannot read scenario {path}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"scenario is not valid UTF-8 (byte {exc.start})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                         exc.lineno, exc.colno) from exc
    return scenario_from_dict(doc)
