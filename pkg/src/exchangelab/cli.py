"""Scenario-driven command-line front end.

A scenario is a single YAML document with a ``kind`` selecting the
experiment (simulate, gate, five-pulse, perturb, rates, sweep) and
kind-specific blocks.  Validation is strict: unknown keys are rejected
with a nearest-key suggestion, every numeric field is checked before
any computation runs.

Reports are written with deterministic formatting (sorted JSON keys,
17-significant-digit floats), so repeated runs produce byte-identical
payload files; the wall-clock timestamp lives in a ``run.meta.json``
sidecar instead.

Exit codes: 0 success, 1 validation error, 2 numerical failure
(degenerate perturbation denominator, no detectable oscillation).
"""

from __future__ import annotations

import argparse
import copy
import difflib
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from . import dynamics, estimates, gates, perturbation
from .dynamics import NoDynamicsError, PulseSegment
from .hilbert import enumerate_basis
from .perturbation import SingularityError
from .serialize import ensure_dir, write_csv, write_json

__all__ = ["ScenarioError", "Scenario", "parse_scenario", "run_scenario", "main"]

KINDS = ("simulate", "gate", "five-pulse", "perturb", "rates", "sweep")

_TOP_KEYS = {
    "simulate": ("kind", "model", "schedule", "parameters", "output"),
    "gate": ("kind", "model", "schedule", "parameters", "output"),
    "five-pulse": ("kind", "model", "parameters", "output"),
    "perturb": ("kind", "parameters", "output"),
    "rates": ("kind", "parameters", "output"),
    "sweep": ("kind", "parameters", "output"),
}

_OUTPUT_KEYS = {
    "simulate": ("scan", "trajectory"),
    "gate": ("report",),
    "five-pulse": ("table", "report"),
    "perturb": ("report",),
    "rates": ("table", "report"),
    "sweep": ("table",),
}

_DEFAULT_OUTPUT = {
    "simulate": {"scan": "transmission.csv", "trajectory": "trajectory.csv"},
    "gate": {"report": "gate.json"},
    "five-pulse": {"table": "five_pulse.csv", "report": "five_pulse.json"},
    "perturb": {"report": "perturbation.json"},
    "rates": {"table": "regime_map.csv", "report": "rates.json"},
    "sweep": {"table": "sweep.csv"},
}


class ScenarioError(ValueError):
    """A scenario failed parsing or validation."""


def _fail(message: str) -> None:
    raise ScenarioError(message)


def _check_keys(mapping: dict, allowed: Sequence[str], context: str) -> None:
    for key in mapping:
        if key not in allowed:
            hints = difflib.get_close_matches(str(key), allowed, n=1)
            hint = f"; did you mean {hints[0]!r}?" if hints else ""
            _fail(f"unknown key {key!r} in {context}{hint}")


def _require_mapping(value, context: str) -> dict:
    if not isinstance(value, dict):
        _fail(f"{context} must be a mapping, got {type(value).__name__}")
    return value


def _number(value, context: str, *, minimum=None, strict_min=None,
            allow_zero=True) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(f"{context} must be a number, got {value!r}")
    value = float(value)
    if not np.isfinite(value):
        _fail(f"{context} must be finite, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(f"{context} must be >= {minimum}, got {value!r}")
    if strict_min is not None and value <= strict_min:
        _fail(f"{context} must be > {strict_min}, got {value!r}")
    if not allow_zero and value == 0.0:
        _fail(f"{context} must be non-zero")
    return value


def _integer(value, context: str, *, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        if isinstance(value, float) and float(value).is_integer():
            value = int(value)
        else:
            _fail(f"{context} must be an integer, got {value!r}")
    if minimum is not None and value < minimum:
        _fail(f"{context} must be >= {minimum}, got {value!r}")
    return int(value)


def _value_list(spec, context: str, *, minimum=None) -> List[float]:
    """A list of numbers, given either literally or as start/stop/count."""
    if isinstance(spec, list):
        if not spec:
            _fail(f"{context} must not be empty")
        return [_number(v, f"{context}[{i}]", minimum=minimum)
                for i, v in enumerate(spec)]
    if not isinstance(spec, dict):
        _fail(f"{context} must be a number, a list of numbers, or a "
              f"start/stop/count grid, got {spec!r}")
    grid = _require_mapping(spec, context)
    _check_keys(grid, ("start", "stop", "count"), context)
    for key in ("start", "stop", "count"):
        if key not in grid:
            _fail(f"{context} grid requires key {key!r}")
    start = _number(grid["start"], f"{context}.start", minimum=minimum)
    stop = _number(grid["stop"], f"{context}.stop", minimum=minimum)
    count = _integer(grid["count"], f"{context}.count", minimum=1)
    return [float(x) for x in np.linspace(start, stop, count)]


def _scalar_or_values(spec, context: str, *, minimum=None) -> List[float]:
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return [_number(spec, context, minimum=minimum)]
    return _value_list(spec, context, minimum=minimum)


@dataclass
class Scenario:
    """A validated scenario ready to run."""

    kind: str
    data: dict
    model: Optional[gates.ExchangeModel] = None
    schedule: Optional[List[PulseSegment]] = None
    preset: Optional[str] = None
    parameters: dict = field(default_factory=dict)
    output: Dict[str, str] = field(default_factory=dict)


def _parse_model(data: dict) -> gates.ExchangeModel:
    spec = data.get("model", {"type": "bosonized"})
    spec = _require_mapping(spec, "model")
    _check_keys(spec, ("type", "atoms"), "model")
    kind = spec.get("type")
    if kind == "bosonized":
        if "atoms" in spec:
            _fail("model.atoms is only valid for type tavis-cummings")
        return gates.ExchangeModel(atoms=None)
    if kind == "tavis-cummings":
        if "atoms" not in spec:
            _fail("model type tavis-cummings requires atoms")
        return gates.ExchangeModel(atoms=_integer(spec["atoms"], "model.atoms",
                                                  minimum=1))
    _fail(f"model.type must be bosonized or tavis-cummings, got {kind!r}")


def _parse_segment(spec, index: int, labels: Sequence[str]) -> PulseSegment:
    context = f"schedule.segments[{index}]"
    spec = _require_mapping(spec, context)
    _check_keys(spec, ("duration", "coupling", "detunings", "widths"), context)
    if "duration" not in spec:
        _fail(f"{context} requires duration")
    duration = _number(spec["duration"], f"{context}.duration", minimum=0.0)
    coupling = None
    if "coupling" in spec:
        cspec = _require_mapping(spec["coupling"], f"{context}.coupling")
        _check_keys(cspec, ("modes", "rate"), f"{context}.coupling")
        modes = cspec.get("modes")
        if (not isinstance(modes, list) or len(modes) != 2
                or modes[0] == modes[1]):
            _fail(f"{context}.coupling.modes must list two distinct modes")
        for label in modes:
            if label not in labels:
                _fail(f"{context}.coupling references unknown mode {label!r}")
        rate = _number(cspec.get("rate"), f"{context}.coupling.rate")
        coupling = (modes[0], modes[1], rate)

    def diagonal(key: str, minimum) -> dict:
        out = {}
        if key in spec:
            block = _require_mapping(spec[key], f"{context}.{key}")
            _check_keys(block, labels, f"{context}.{key}")
            for label, value in block.items():
                out[label] = _number(value, f"{context}.{key}.{label}",
                                     minimum=minimum)
        return out

    return PulseSegment(duration=duration, coupling=coupling,
                        detunings=diagonal("detunings", None),
                        widths=diagonal("widths", 0.0))


def _parse_schedule(data: dict, model: gates.ExchangeModel,
                    ) -> Tuple[List[PulseSegment], Optional[str]]:
    spec = data.get("schedule")
    if spec is None:
        _fail("this scenario kind requires a schedule")
    spec = _require_mapping(spec, "schedule")
    labels = tuple(mode.label for mode in model.modes())
    if "preset" in spec:
        _check_keys(spec, ("preset", "rate"), "schedule")
        if spec["preset"] != "three-pulse":
            _fail(f"unknown schedule preset {spec['preset']!r}")
        rate = _number(spec.get("rate", 1.0), "schedule.rate", strict_min=0.0)
        return gates.three_pulse_schedule(model, rate), "three-pulse"
    _check_keys(spec, ("segments",), "schedule")
    segments = spec.get("segments")
    if not isinstance(segments, list) or not segments:
        _fail("schedule.segments must be a non-empty list")
    return [_parse_segment(seg, i, labels) for i, seg in enumerate(segments)], None


def _parse_output(data: dict, kind: str) -> Dict[str, str]:
    spec = data.get("output", {})
    spec = _require_mapping(spec, "output")
    _check_keys(spec, _OUTPUT_KEYS[kind], "output")
    out = dict(_DEFAULT_OUTPUT[kind])
    for key, value in spec.items():
        if not isinstance(value, str) or not value or Path(value).is_absolute():
            _fail(f"output.{key} must be a relative file name")
        out[key] = value
    return out


def _parse_simulate(data: dict, scenario: Scenario) -> None:
    params = _require_mapping(data.get("parameters"), "parameters")
    experiment = params.get("experiment")
    if experiment == "transmission":
        _check_keys(params, ("experiment", "rate", "durations"), "parameters")
        for unused in ("model", "schedule"):
            if unused in data:
                _fail(f"{unused} is not used by the transmission experiment")
        if "durations" not in params:
            _fail("parameters.durations is required for transmission")
        scenario.parameters = {
            "experiment": experiment,
            "rate": _number(params.get("rate", 1.0), "parameters.rate",
                            strict_min=0.0),
            "durations": _value_list(params["durations"],
                                     "parameters.durations", minimum=0.0),
        }
        return
    if experiment == "schedule-run":
        _check_keys(params, ("experiment", "initial", "samples_per_segment"),
                    "parameters")
        scenario.model = _parse_model(data)
        scenario.schedule, scenario.preset = _parse_schedule(data, scenario.model)
        initial = params.get("initial")
        labels = [mode.label for mode in scenario.model.modes()]
        if not isinstance(initial, list) or len(initial) != len(labels):
            _fail(f"parameters.initial must list {len(labels)} occupations "
                  f"(modes {', '.join(labels)})")
        occ = tuple(_integer(v, f"parameters.initial[{i}]", minimum=0)
                    for i, v in enumerate(initial))
        cap = scenario.model.modes()[2].max_occupation(sum(occ))
        if occ[2] > cap:
            _fail(f"parameters.initial[2] exceeds the collective capacity {cap}")
        scenario.parameters = {
            "experiment": experiment,
            "initial": occ,
            "samples_per_segment": _integer(
                params.get("samples_per_segment", 32),
                "parameters.samples_per_segment", minimum=1),
        }
        return
    _fail("parameters.experiment must be transmission or schedule-run, "
          f"got {experiment!r}")


def _parse_gate(data: dict, scenario: Scenario) -> None:
    scenario.model = _parse_model(data)
    scenario.schedule, scenario.preset = _parse_schedule(data, scenario.model)
    params = data.get("parameters", {})
    params = _require_mapping(params, "parameters")
    _check_keys(params, ("tolerance",), "parameters")
    scenario.parameters = {
        "tolerance": _number(params.get("tolerance", 1e-8),
                             "parameters.tolerance", strict_min=0.0),
    }


def _parse_five_pulse(data: dict, scenario: Scenario) -> None:
    scenario.model = _parse_model(data)
    params = _require_mapping(data.get("parameters"), "parameters")
    _check_keys(params, ("theta", "rate"), "parameters")
    if "theta" not in params:
        _fail("parameters.theta is required")
    scenario.parameters = {
        "theta": _scalar_or_values(params["theta"], "parameters.theta",
                                   minimum=0.0),
        "rate": _number(params.get("rate", 1.0), "parameters.rate",
                        strict_min=0.0),
    }


def _parse_perturb(data: dict, scenario: Scenario) -> None:
    params = _require_mapping(data.get("parameters"), "parameters")
    allowed = ("coupling", "atoms", "delta_1", "delta_2", "delta", "width",
               "raman_factor", "n_1", "n_2", "rule")
    _check_keys(params, allowed, "parameters")
    for key in ("coupling", "atoms", "delta_1", "delta_2", "rule"):
        if key not in params:
            _fail(f"parameters.{key} is required")
    rule_spec = _require_mapping(params["rule"], "parameters.rule")
    _check_keys(rule_spec, ("selector", "width"), "parameters.rule")
    selector = rule_spec.get("selector")
    if selector not in perturbation.WIDTH_SELECTORS:
        known = ", ".join(perturbation.WIDTH_SELECTORS)
        _fail(f"parameters.rule.selector must be one of {known}, got {selector!r}")
    kwargs = {
        "coupling": _number(params["coupling"], "parameters.coupling",
                            allow_zero=False),
        "atoms": _integer(params["atoms"], "parameters.atoms", minimum=2),
        "delta_1": _number(params["delta_1"], "parameters.delta_1",
                           allow_zero=False),
        "delta_2": _number(params["delta_2"], "parameters.delta_2",
                           allow_zero=False),
    }
    if "delta" in params:
        kwargs["delta"] = _number(params["delta"], "parameters.delta",
                                  allow_zero=False)
    if "width" in params:
        kwargs["width"] = _number(params["width"], "parameters.width",
                                  minimum=0.0)
    if "raman_factor" in params:
        kwargs["raman_factor"] = _number(params["raman_factor"],
                                         "parameters.raman_factor",
                                         strict_min=0.0)
    for key in ("n_1", "n_2"):
        if key in params:
            kwargs[key] = _integer(params[key], f"parameters.{key}", minimum=1)
    if kwargs["delta_1"] == kwargs["delta_2"]:
        _fail("parameters.delta_1 and delta_2 must differ")
    try:
        model_params = perturbation.CollisionModelParams(**kwargs)
        rule = perturbation.WidthRule(
            selector, _number(rule_spec.get("width", 0.0),
                              "parameters.rule.width", minimum=0.0))
    except ValueError as exc:
        _fail(str(exc))
    scenario.parameters = {"params": model_params, "rule": rule}


def _parse_rates(data: dict, scenario: Scenario) -> None:
    params = _require_mapping(data.get("parameters"), "parameters")
    allowed = ("density", "omega", "dipole", "detuning", "rabi", "gamma",
               "wavenumber", "t2")
    _check_keys(params, allowed, "parameters")
    for key in allowed:
        if key not in params:
            _fail(f"parameters.{key} is required")
    parsed = {}
    for key in allowed:
        context = f"parameters.{key}"
        if key in ("density", "wavenumber"):
            values = _scalar_or_values(params[key], context, minimum=0.0)
            if any(v <= 0 for v in values):
                _fail(f"{context} values must be positive")
            parsed[key] = values
        else:
            parsed[key] = _number(params[key], context, strict_min=0.0)
    scenario.parameters = parsed


def _parse_sweep(data: dict, scenario: Scenario) -> None:
    params = _require_mapping(data.get("parameters"), "parameters")
    _check_keys(params, ("parameter", "values", "base"), "parameters")
    for key in ("parameter", "values", "base"):
        if key not in params:
            _fail(f"parameters.{key} is required")
    path = params["parameter"]
    if not isinstance(path, str) or not path:
        _fail("parameters.parameter must be a dotted key path")
    base = _require_mapping(params["base"], "parameters.base")
    if base.get("kind") == "sweep":
        _fail("sweep scenarios cannot nest")
    validate_scenario(base)  # fail fast on an invalid base
    cursor = base
    keys = path.split(".")
    for i, key in enumerate(keys[:-1]):
        cursor = cursor.get(key)
        if not isinstance(cursor, dict):
            _fail(f"parameters.parameter {path!r} does not resolve at {key!r}")
    if keys[-1] not in cursor:
        _fail(f"parameters.parameter {path!r} does not resolve: "
              f"missing {keys[-1]!r}")
    values = params["values"]
    if isinstance(values, list):
        if not values:
            _fail("parameters.values must not be empty")
        points = list(values)
    else:
        points = _value_list(values, "parameters.values")
    scenario.parameters = {"parameter": keys, "values": points, "base": base}


_PARSERS = {
    "simulate": _parse_simulate,
    "gate": _parse_gate,
    "five-pulse": _parse_five_pulse,
    "perturb": _parse_perturb,
    "rates": _parse_rates,
    "sweep": _parse_sweep,
}


def validate_scenario(data: dict) -> Scenario:
    """Validate an already-decoded scenario document."""
    data = _require_mapping(data, "scenario")
    kind = data.get("kind")
    if kind not in KINDS:
        hints = difflib.get_close_matches(str(kind), KINDS, n=1)
        hint = f"; did you mean {hints[0]!r}?" if hints else ""
        _fail(f"kind must be one of {', '.join(KINDS)}, got {kind!r}{hint}")
    _check_keys(data, _TOP_KEYS[kind], "scenario")
    scenario = Scenario(kind=kind, data=copy.deepcopy(data))
    _PARSERS[kind](data, scenario)
    scenario.output = _parse_output(data, kind)
    return scenario


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a YAML scenario document."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"invalid YAML: {exc}") from exc
    return validate_scenario(data)


# --------------------------------------------------------------------------
# Runners: each kind has a pure compute step (shared with sweeps) and an
# emit step that writes the artifacts.

def _compute_simulate(scenario: Scenario) -> dict:
    params = scenario.parameters
    if params["experiment"] == "transmission":
        scan = dynamics.transmission_scan(params["rate"], params["durations"])
        survivals = [s for _, s in scan]
        return {"scan": scan, "survival_min": min(survivals),
                "survival_max": max(survivals)}
    basis = enumerate_basis(scenario.model.modes(), sum(params["initial"]))
    trajectory = dynamics.run_schedule(
        scenario.schedule, basis, params["initial"],
        samples_per_segment=params["samples_per_segment"])
    return {"trajectory": trajectory,
            "final_norm": float(trajectory.norms[-1])}


def _emit_simulate(result: dict, scenario: Scenario, out_dir: Path) -> List[Path]:
    if "scan" in result:
        path = out_dir / scenario.output["scan"]
        write_csv(path, ["duration", "survival"],
                  [[t, p] for t, p in result["scan"]])
        return [path]
    path = out_dir / scenario.output["trajectory"]
    result["trajectory"].to_csv(path)
    return [path]


def _compute_gate(scenario: Scenario) -> dict:
    report = gates.extract_gate(scenario.schedule, gates.LogicalEncoding(),
                                scenario.model,
                                tol=scenario.parameters["tolerance"])
    deviation = float(np.max(np.abs(report.matrix - gates.THREE_PULSE_TARGET)))
    return {"report": report, "deviation": deviation}


def _emit_gate(result: dict, scenario: Scenario, out_dir: Path) -> List[Path]:
    payload = result["report"].to_payload()
    if scenario.preset == "three-pulse":
        payload["three_pulse_deviation"] = result["deviation"]
    path = out_dir / scenario.output["report"]
    write_json(path, payload)
    return [path]


def _compute_five_pulse(scenario: Scenario) -> dict:
    params = scenario.parameters
    rows = []
    for theta in params["theta"]:
        leak = gates.five_pulse_leakage(scenario.model, theta, params["rate"])
        rows.append([theta, leak.p_two_photon, leak.p_two_excitation,
                     leak.p_return])
    couplings = gates.stimulated_couplings(scenario.model, params["rate"])
    return {"rows": rows, "couplings": couplings}


def _emit_five_pulse(result: dict, scenario: Scenario,
                     out_dir: Path) -> List[Path]:
    table = out_dir / scenario.output["table"]
    write_csv(table, ["theta", "p_two_photon", "p_two_excitation", "p_return"],
              result["rows"])
    couplings = result["couplings"]
    ratio = (couplings.emission / couplings.absorption
             if couplings.absorption > 0 else None)
    report = out_dir / scenario.output["report"]
    write_json(report, {
        "schema_version": 1,
        "kind": "five_pulse_report",
        "emission_coupling": couplings.emission,
        "absorption_coupling": couplings.absorption,
        "emission_absorption_ratio": ratio,
    })
    return [table, report]


def _compute_perturb(scenario: Scenario) -> dict:
    params = scenario.parameters["params"]
    rule = scenario.parameters["rule"]
    fit = perturbation.cross_fit(params, rule)
    problem = perturbation.build_problem(params, rule)
    result = perturbation.rspt_energy(problem, order=4)
    d_e, d_e_prime = perturbation.franson_formula(params)
    return {"fit": fit, "orders": result.orders,
            "diagnostics": result.diagnostics,
            "franson": (d_e, d_e_prime)}


def _emit_perturb(result: dict, scenario: Scenario, out_dir: Path) -> List[Path]:
    fit = result["fit"]
    d_e, d_e_prime = result["franson"]
    payload = {
        "schema_version": 1,
        "kind": "perturbation_report",
        "cross_coefficient": fit.value,
        "total_coefficient": fit.total_value,
        "single_atom_coefficient": fit.single_atom_value,
        "fit_residual": fit.fit_residual,
        "path_scale": fit.path_scale,
        "relative_magnitude": abs(fit.value) / fit.path_scale,
        "orders": {str(k): v for k, v in result["orders"].items()},
        "diagnostics": result["diagnostics"],
        "franson_delta_e": d_e,
        "franson_delta_e_prime": d_e_prime,
    }
    path = out_dir / scenario.output["report"]
    write_json(path, payload)
    return [path]


def _compute_rates(scenario: Scenario) -> dict:
    params = scenario.parameters
    rows = []
    reports = []
    for density in params["density"]:
        for wavenumber in params["wavenumber"]:
            medium = estimates.MediumParams(
                density=density, omega=params["omega"], dipole=params["dipole"],
                detuning=params["detuning"], rabi=params["rabi"],
                gamma=params["gamma"], wavenumber=wavenumber, t2=params["t2"])
            coop = estimates.cooperative_raman_rate(medium)
            report = estimates.regime_classify(
                density, wavenumber, params["gamma"], params["t2"], coop)
            reports.append(report)
            rows.append([density, wavenumber, report.regime,
                         report.dominant_rate, report.cooperative_rate,
                         report.cooperation_wins])
    return {"rows": rows, "reports": reports}


def _emit_rates(result: dict, scenario: Scenario, out_dir: Path) -> List[Path]:
    table = out_dir / scenario.output["table"]
    write_csv(table, ["density", "wavenumber", "regime", "dominant_rate",
                      "cooperative_rate", "cooperation_wins"], result["rows"])
    written = [table]
    if len(result["reports"]) == 1:
        report = out_dir / scenario.output["report"]
        write_json(report, result["reports"][0].to_payload())
        written.append(report)
    return written


_SWEEP_COLUMNS = {
    "simulate": ("survival_min", "survival_max", "final_norm"),
    "gate": ("deviation", "entangling", "max_leakage", "unitarity_defect"),
    "five-pulse": ("p_two_photon", "p_two_excitation", "p_return"),
    "perturb": ("cross_re", "cross_im", "cross_abs", "path_scale"),
    "rates": ("regime", "cooperative_rate", "dominant_rate",
              "cooperation_wins"),
}


def _sweep_summary(kind: str, result: dict) -> dict:
    if kind == "simulate":
        return {key: result[key] for key in
                ("survival_min", "survival_max", "final_norm")
                if key in result}
    if kind == "gate":
        report = result["report"]
        return {
            "deviation": result["deviation"],
            "entangling": report.entangling,
            "max_leakage": float(np.max(report.leakage)),
            "unitarity_defect": report.unitarity_defect,
        }
    if kind == "five-pulse":
        first = result["rows"][0]
        return {"p_two_photon": first[1], "p_two_excitation": first[2],
                "p_return": first[3]}
    if kind == "perturb":
        fit = result["fit"]
        return {"cross_re": fit.value.real, "cross_im": fit.value.imag,
                "cross_abs": abs(fit.value), "path_scale": fit.path_scale}
    report = result["reports"][0]
    return {"regime": report.regime,
            "cooperative_rate": report.cooperative_rate,
            "dominant_rate": report.dominant_rate,
            "cooperation_wins": report.cooperation_wins}


_COMPUTE = {
    "simulate": _compute_simulate,
    "gate": _compute_gate,
    "five-pulse": _compute_five_pulse,
    "perturb": _compute_perturb,
    "rates": _compute_rates,
}


def _sweep_point(base: dict, keys: List[str], value) -> Tuple[str, dict]:
    """Run one sweep point; returns (status, summary columns)."""
    data = copy.deepcopy(base)
    cursor = data
    for key in keys[:-1]:
        cursor = cursor[key]
    cursor[keys[-1]] = value
    try:
        point = validate_scenario(data)
    except ScenarioError:
        return "validation-error", {}
    try:
        result = _COMPUTE[point.kind](point)
    except (SingularityError, NoDynamicsError, ValueError):
        return "numerical-error", {}
    return "ok", _sweep_summary(point.kind, result)


def _run_sweep(scenario: Scenario, out_dir: Path, parallelism: int) -> int:
    params = scenario.parameters
    base = params["base"]
    keys = params["parameter"]
    values = params["values"]
    columns = _SWEEP_COLUMNS[base["kind"]]
    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        outcomes = list(pool.map(
            lambda value: _sweep_point(base, keys, value), values))
    rows = []
    for index, (value, (status, summary)) in enumerate(zip(values, outcomes)):
        rows.append([index, value, status]
                    + [summary.get(column, "") for column in columns])
    write_csv(out_dir / scenario.output["table"],
              ["index", "value", "status"] + list(columns), rows)
    statuses = [status for status, _ in outcomes]
    if "ok" in statuses:
        return 0
    return 2 if "numerical-error" in statuses else 1


_EMIT = {
    "simulate": _emit_simulate,
    "gate": _emit_gate,
    "five-pulse": _emit_five_pulse,
    "perturb": _emit_perturb,
    "rates": _emit_rates,
}


def run_scenario(scenario: Scenario, out_dir, parallelism: int = 1) -> int:
    """Execute a validated scenario, writing artifacts into out_dir."""
    out_dir = Path(out_dir)
    ensure_dir(out_dir)
    if scenario.kind == "sweep":
        code = _run_sweep(scenario, out_dir, parallelism)
    else:
        result = _COMPUTE[scenario.kind](scenario)
        _EMIT[scenario.kind](result, scenario, out_dir)
        code = 0
    meta = {
        "schema_version": 1,
        "kind": scenario.kind,
        "written_at": datetime.now(timezone.utc).isoformat(),
    }
    write_json(out_dir / "run.meta.json", meta)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="exchangelab",
        description="Numerical laboratory for photon-exchange gate schemes.")
    sub = parser.add_subparsers(dest="command", required=True)
    for command in KINDS:
        cmd = sub.add_parser(command, help=f"run a {command} scenario")
        cmd.add_argument("--scenario", required=True,
                         help="path to the YAML scenario file")
        cmd.add_argument("--out", default=".",
                         help="output directory (default: current)")
        if command == "sweep":
            cmd.add_argument("--parallel", type=int, default=1,
                             help="concurrent sweep points (default 1)")
    args = parser.parse_args(argv)

    try:
        text = Path(args.scenario).read_text()
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return 1
    try:
        scenario = parse_scenario(text)
        if scenario.kind != args.command:
            raise ScenarioError(
                f"scenario kind {scenario.kind!r} does not match "
                f"command {args.command!r}")
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return run_scenario(scenario, args.out,
                            parallelism=getattr(args, "parallel", 1))
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (SingularityError, NoDynamicsError) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
