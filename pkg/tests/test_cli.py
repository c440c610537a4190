"""End-to-end tests of the scenario front end."""

import json
import math
from pathlib import Path
from textwrap import dedent

import pytest
import yaml

from exchangelab.cli import ScenarioError, main, parse_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def _read_csv(path):
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    rows = [line.split(",") for line in lines[1:]]
    return header, rows


# ---------------------------------------------------------------------------
# Parsing and validation
# ---------------------------------------------------------------------------


def test_documented_scenarios_parse_and_roundtrip():
    files = sorted(SCENARIOS.glob("*.yaml"))
    assert len(files) >= 10
    for path in files:
        scenario = parse_scenario(path.read_text())
        assert scenario.kind in ("simulate", "gate", "five-pulse", "perturb",
                                 "rates", "sweep")
        # the normalized document survives a dump/parse cycle
        again = parse_scenario(yaml.safe_dump(scenario.data))
        assert again.kind == scenario.kind
        assert again.data == scenario.data


def test_unknown_key_gets_suggestion():
    text = dedent("""
        kind: simulate
        model: {type: bosonized}
        schedule:
          segments:
            - duration: 1.0
              detunnings: {collective: 0.5}
        parameters:
          experiment: schedule-run
          initial: [1, 0, 0]
    """)
    with pytest.raises(ScenarioError, match="detunings"):
        parse_scenario(text)


def test_negative_duration_is_named():
    text = dedent("""
        kind: simulate
        model: {type: bosonized}
        schedule:
          segments:
            - duration: -2.0
        parameters:
          experiment: schedule-run
          initial: [1, 0, 0]
    """)
    with pytest.raises(ScenarioError, match="duration"):
        parse_scenario(text)


def test_unknown_kind_mentions_valid_kinds():
    with pytest.raises(ScenarioError, match="gate"):
        parse_scenario("kind: gates\n")


def test_transmission_rejects_model_block():
    text = dedent("""
        kind: simulate
        model: {type: bosonized}
        parameters:
          experiment: transmission
          rate: 1.0
          durations: [0.0, 1.0]
    """)
    with pytest.raises(ScenarioError):
        parse_scenario(text)


def test_output_paths_must_be_relative():
    text = dedent("""
        kind: gate
        schedule: {preset: three-pulse, rate: 1.0}
        output: {report: /tmp/gate.json}
    """)
    with pytest.raises(ScenarioError, match="relative"):
        parse_scenario(text)


def test_minimal_gate_scenario_uses_defaults():
    scenario = parse_scenario("kind: gate\nschedule: {preset: three-pulse, rate: 1.0}\n")
    assert scenario.output["report"] == "gate.json"
    assert scenario.model.bosonized
    assert scenario.preset == "three-pulse"


def test_initial_state_must_fit_model():
    text = dedent("""
        kind: simulate
        model: {type: tavis-cummings, atoms: 1}
        schedule:
          segments: [{duration: 1.0}]
        parameters:
          experiment: schedule-run
          initial: [0, 0, 2]
    """)
    with pytest.raises(ScenarioError, match="capacity"):
        parse_scenario(text)


# ---------------------------------------------------------------------------
# Running documented scenarios
# ---------------------------------------------------------------------------


def test_gate_scenario_run(tmp_path):
    code = main(["gate", "--scenario", str(SCENARIOS / "gate_three_pulse.yaml"),
                 "--out", str(tmp_path)])
    assert code == 0
    payload = json.loads((tmp_path / "gate.json").read_text())
    assert payload["entangling"] is False
    assert payload["three_pulse_deviation"] < 1e-12
    diag = [payload["matrix"][i][i] for i in range(4)]
    assert [round(entry[0]) for entry in diag] == [1, -1, 1, -1]
    meta = json.loads((tmp_path / "run.meta.json").read_text())
    assert meta["kind"] == "gate"
    assert "written_at" in meta


def test_finite_gate_scenario_run(tmp_path):
    code = main(["gate", "--scenario", str(SCENARIOS / "gate_finite_atoms.yaml"),
                 "--out", str(tmp_path)])
    assert code == 0
    payload = json.loads((tmp_path / "gate_n8.json").read_text())
    assert payload["three_pulse_deviation"] == pytest.approx(
        1.0 - math.cos(2 * math.pi * math.sqrt(1.0 - 1.0 / 16.0)), rel=1e-6)
    assert max(payload["leakage"]) > 1e-4


def test_transmission_scenario_run(tmp_path):
    code = main(["simulate", "--scenario", str(SCENARIOS / "transmission.yaml"),
                 "--out", str(tmp_path)])
    assert code == 0
    header, rows = _read_csv(tmp_path / "transmission.csv")
    assert header == ["duration", "survival"]
    assert len(rows) == 129
    assert float(rows[0][1]) == pytest.approx(1.0, abs=1e-12)
    survivals = [float(row[1]) for row in rows]
    assert min(survivals) < 1e-9
    assert max(survivals) == pytest.approx(1.0, abs=1e-9)


def test_schedule_run_scenario(tmp_path):
    code = main(["simulate", "--scenario", str(SCENARIOS / "schedule_run.yaml"),
                 "--out", str(tmp_path)])
    assert code == 0
    header, rows = _read_csv(tmp_path / "trajectory.csv")
    assert header == ["time", "state_index", "re", "im", "norm"]
    norms = [float(row[4]) for row in rows]
    assert norms[-1] == pytest.approx(1.0, abs=1e-12)


def test_five_pulse_scenario_run(tmp_path):
    code = main(["five-pulse", "--scenario", str(SCENARIOS / "five_pulse.yaml"),
                 "--out", str(tmp_path)])
    assert code == 0
    header, rows = _read_csv(tmp_path / "five_pulse.csv")
    assert header == ["theta", "p_two_photon", "p_two_excitation", "p_return"]
    assert len(rows) == 65
    peaks = max(float(row[1]) for row in rows)
    assert peaks == pytest.approx(0.5, abs=1e-9)
    report = json.loads((tmp_path / "five_pulse.json").read_text())
    assert report["emission_absorption_ratio"] == pytest.approx(1.0)


def test_perturb_none_scenario_run(tmp_path):
    code = main(["perturb", "--scenario", str(SCENARIOS / "perturb_none.yaml"),
                 "--out", str(tmp_path)])
    assert code == 0
    payload = json.loads((tmp_path / "perturb_none.json").read_text())
    assert payload["relative_magnitude"] < 1e-10
    assert payload["franson_delta_e"] == [0.0, 0.0]
    assert payload["diagnostics"]["basis_size"] > 0


def test_perturb_exchanged_scenario_run(tmp_path):
    code = main(["perturb", "--scenario", str(SCENARIOS / "perturb_exchanged.yaml"),
                 "--out", str(tmp_path)])
    assert code == 0
    payload = json.loads((tmp_path / "perturb_exchanged.json").read_text())
    re, im = payload["cross_coefficient"]
    assert abs(im) > 10 * abs(re)
    assert payload["relative_magnitude"] > 1e-8


def test_rates_scenario_run(tmp_path):
    code = main(["rates", "--scenario", str(SCENARIOS / "rates_high_density.yaml"),
                 "--out", str(tmp_path)])
    assert code == 0
    header, rows = _read_csv(tmp_path / "regime_map.csv")
    assert header == ["density", "wavenumber", "regime", "dominant_rate",
                      "cooperative_rate", "cooperation_wins"]
    assert len(rows) == 1
    assert rows[0][2] == "high-density"
    report = json.loads((tmp_path / "rates.json").read_text())
    assert report["kind"] == "regime_report"


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def test_gate_convergence_sweep(tmp_path):
    code = main(["sweep", "--scenario", str(SCENARIOS / "sweep_gate_atoms.yaml"),
                 "--out", str(tmp_path)])
    assert code == 0
    header, rows = _read_csv(tmp_path / "gate_convergence.csv")
    assert header[:3] == ["index", "value", "status"]
    assert [row[0] for row in rows] == [str(i) for i in range(6)]
    assert all(row[2] == "ok" for row in rows)
    deviations = [float(row[header.index("deviation")]) for row in rows]
    assert all(b < a for a, b in zip(deviations, deviations[1:]))


def test_sweep_parallel_matches_serial(tmp_path):
    serial = tmp_path / "serial"
    parallel = tmp_path / "parallel"
    scenario = str(SCENARIOS / "sweep_perturb_width.yaml")
    assert main(["sweep", "--scenario", scenario, "--out", str(serial)]) == 0
    assert main(["sweep", "--scenario", scenario, "--out", str(parallel),
                 "--parallel", "4"]) == 0
    assert ((serial / "perturb_width.csv").read_bytes()
            == (parallel / "perturb_width.csv").read_bytes())


def test_sweep_single_point_matches_direct_run(tmp_path):
    sweep_yaml = tmp_path / "sweep.yaml"
    sweep_yaml.write_text(dedent("""
        kind: sweep
        parameters:
          parameter: model.atoms
          values: [8]
          base:
            kind: gate
            model: {type: tavis-cummings, atoms: 2}
            schedule: {preset: three-pulse, rate: 1.0}
    """))
    sweep_out = tmp_path / "sweep_out"
    direct_out = tmp_path / "direct_out"
    assert main(["sweep", "--scenario", str(sweep_yaml),
                 "--out", str(sweep_out)]) == 0
    assert main(["gate", "--scenario", str(SCENARIOS / "gate_finite_atoms.yaml"),
                 "--out", str(direct_out)]) == 0
    header, rows = _read_csv(sweep_out / "sweep.csv")
    payload = json.loads((direct_out / "gate_n8.json").read_text())
    sweep_deviation = float(rows[0][header.index("deviation")])
    assert sweep_deviation == payload["three_pulse_deviation"]


def test_sweep_reports_failed_points(tmp_path):
    sweep_yaml = tmp_path / "sweep.yaml"
    sweep_yaml.write_text(dedent("""
        kind: sweep
        parameters:
          parameter: parameters.rule.width
          values: [-0.5, 0.01]
          base:
            kind: perturb
            parameters:
              coupling: 0.05
              atoms: 2
              delta_1: 1.0
              delta_2: 0.9
              rule: {selector: exchanged-photon-ground-states, width: 0.0}
    """))
    out = tmp_path / "out"
    assert main(["sweep", "--scenario", str(sweep_yaml), "--out", str(out)]) == 0
    header, rows = _read_csv(out / "sweep.csv")
    assert rows[0][2] == "validation-error"
    assert rows[0][header.index("cross_abs")] == ""
    assert rows[1][2] == "ok"
    assert float(rows[1][header.index("cross_abs")]) > 0.0


def test_sweep_all_points_failing_numerically_exits_2(tmp_path):
    sweep_yaml = tmp_path / "sweep.yaml"
    sweep_yaml.write_text(dedent("""
        kind: sweep
        parameters:
          parameter: parameters.delta_2
          values: [-1.0]
          base:
            kind: perturb
            parameters:
              coupling: 0.05
              atoms: 2
              delta_1: 1.0
              delta_2: 0.9
              delta: 1.0
              rule: {selector: none}
    """))
    out = tmp_path / "out"
    assert main(["sweep", "--scenario", str(sweep_yaml), "--out", str(out)]) == 2
    _, rows = _read_csv(out / "sweep.csv")
    assert rows[0][2] == "numerical-error"


# ---------------------------------------------------------------------------
# Determinism and exit codes
# ---------------------------------------------------------------------------


def test_payloads_are_byte_identical_across_runs(tmp_path):
    for name in ("gate_three_pulse.yaml", "perturb_exchanged.yaml"):
        first = tmp_path / f"{name}.first"
        second = tmp_path / f"{name}.second"
        command = parse_scenario((SCENARIOS / name).read_text()).kind
        for out in (first, second):
            assert main([command, "--scenario", str(SCENARIOS / name),
                         "--out", str(out)]) == 0
        payloads = [sorted(p.name for p in out.iterdir() if p.name != "run.meta.json")
                    for out in (first, second)]
        assert payloads[0] == payloads[1]
        for file_name in payloads[0]:
            assert ((first / file_name).read_bytes()
                    == (second / file_name).read_bytes())


def test_missing_scenario_file_exits_1(tmp_path, capsys):
    code = main(["gate", "--scenario", str(tmp_path / "nope.yaml"),
                 "--out", str(tmp_path)])
    assert code == 1
    assert "cannot read scenario" in capsys.readouterr().err


def test_invalid_yaml_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("kind: [unclosed\n")
    code = main(["gate", "--scenario", str(bad), "--out", str(tmp_path)])
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_kind_command_mismatch_exits_1(tmp_path, capsys):
    code = main(["simulate", "--scenario",
                 str(SCENARIOS / "gate_three_pulse.yaml"), "--out", str(tmp_path)])
    assert code == 1
    assert "does not match" in capsys.readouterr().err


def test_degenerate_perturbation_exits_2(tmp_path, capsys):
    singular = tmp_path / "singular.yaml"
    singular.write_text(dedent("""
        kind: perturb
        parameters:
          coupling: 0.05
          atoms: 2
          delta_1: 1.0
          delta_2: -1.0
          delta: 1.0
          rule: {selector: none}
    """))
    code = main(["perturb", "--scenario", str(singular), "--out", str(tmp_path)])
    assert code == 2
    assert "numerical failure" in capsys.readouterr().err
