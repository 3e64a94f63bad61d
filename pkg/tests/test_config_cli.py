"""Config ingestion/validation, preflight, exports, CLI exit codes."""

import json
import os

import numpy as np
import pytest

from spoofsim import cli
from spoofsim.config import RunConfig, load_config, preflight
from spoofsim.engine import run
from spoofsim.errors import ConfigError
from spoofsim.reporting import export_csv, load_run_record, render_figures
from spoofsim.scenarios import scenario_s1, scenario_s2


def test_config_round_trip():
    cfg = scenario_s1(horizon=20)
    again = RunConfig(cfg.to_dict())
    assert again.hash() == cfg.hash()
    assert again.to_dict() == cfg.to_dict()


def test_load_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(scenario_s1(horizon=10).to_dict()))
    cfg = load_config(path)
    assert cfg.params.horizon == 10
    bad = tmp_path / "bad.json"
    bad.write_text("{ not json")
    with pytest.raises(ConfigError):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def _tamper(mutate):
    raw = scenario_s1(horizon=10).to_dict()
    mutate(raw)
    with pytest.raises(ConfigError):
        RunConfig(raw)


def test_validation_failures():
    # switching window above the update bound
    def switching(raw):
        raw["graph"] = {"n_nodes": 14, "mu_bar": 3,
                        "switching": [{"start_step": 0,
                                       "edges": raw["graph"]["edges"]}]}
    _tamper(switching)
    # a second spoofer in-neighbor breaks f-locality
    def two_spoofers(raw):
        raw["graph"]["edges"].append([2, 9, 1])
        raw["adversary"]["spoofers"].append(
            {"node": 2, "alpha": 1, "policy": {"name": "silent"}})
    _tamper(two_spoofers)
    # link delay beyond tau_bar
    def late(raw):
        raw["graph"]["edges"][0][2] = 9
    _tamper(late)
    # repeated eigenvalues rejected at load
    def repeated(raw):
        raw["system"] = {"a": [[1.0, 0.0], [0.0, 1.0]], "x0": [1.0, 1.0],
                         "psi": None}
    _tamper(repeated)
    # destabilizing observer gain rejected at load
    def unstable_gain(raw):
        raw["observers"]["gains"]["1"] = [[0.0]]
    _tamper(unstable_gain)
    # schedule that can violate the k_bar bound
    def slow(raw):
        raw["schedule"]["per_node"]["9"] = {"type": "periodic", "period": 5,
                                            "offset": 0}
    _tamper(slow)
    # unknown policy name
    def bad_policy(raw):
        raw["adversary"]["spoofers"][0]["policy"]["name"] = "mystery"
    _tamper(bad_policy)


def test_preflight_sample_network():
    report = preflight(scenario_s1(horizon=10))
    assert report.beta == 1 and report.beta_prime == 1
    by_mode = {m.mode: m for m in report.modes}
    for j in (1, 2):
        m = by_mode[j]
        assert m.robustness == 5
        assert m.threshold_full == 7 and not m.meets_full
        assert m.threshold_no_construction_spoof == 5
        assert m.meets_no_construction_spoof
        assert m.threshold_randomized == 7 and not m.meets_randomized
    assert by_mode[1].regular_sources == (1, 2, 3, 4)
    assert by_mode[1].claimed_sources == (14,)
    assert by_mode[2].regular_sources == (5, 6, 7, 8)


def test_preflight_f_zero_and_empty_sources():
    raw = scenario_s1(horizon=10).to_dict()
    raw["params"]["f"] = 0
    raw.pop("adversary")
    report = preflight(RunConfig(raw))
    for m in report.modes:
        assert m.threshold_full == 1
        assert m.meets_full

    raw2 = scenario_s1(horizon=10).to_dict()
    raw2["observations"] = {k: [[0.0, 0.0]] for k in raw2["observations"]}
    raw2.pop("adversary")
    raw2.pop("observers")
    report2 = preflight(RunConfig(raw2))
    assert any(m.empty_sources for m in report2.modes)
    assert any("fatal" in w for w in report2.warnings)


def test_scenario_psi_reproduces_diagonal():
    for factory in (scenario_s1, scenario_s2):
        cfg = factory(horizon=5)
        diag = cfg.diagonalized()
        a_bar = diag.psi_inv @ cfg.a @ diag.psi
        assert np.max(np.abs(a_bar - np.diag([1.02, 1.0]))) < 1e-12


def test_export_csv_shapes(tmp_path):
    cfg = scenario_s1(horizon=10)
    trace = run(cfg)
    paths = export_csv(trace, tmp_path)
    lines = open(paths["estimates"]).read().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1] == "step,node,mode,estimate_z,true_z,error"
    assert len(lines) == 2 + 2 * 13 * 10     # modes x regular nodes x horizon
    summary = json.load(open(paths["summary"]))
    assert set(summary["modes"]) == {"1", "2"}
    record = load_run_record(paths["run_record"])
    assert record["config_hash"] == cfg.hash()
    assert record["modes"]["1"]["termination_step"] == 4


def test_export_csv_horizon_zero(tmp_path):
    cfg = scenario_s1(horizon=0)
    trace = run(cfg)
    paths = export_csv(trace, tmp_path)
    lines = open(paths["estimates"]).read().splitlines()
    assert len(lines) == 2
    lines = open(paths["events"]).read().splitlines()
    assert len(lines) == 2


def test_render_figures(tmp_path):
    cfg = scenario_s1(horizon=12)
    trace = run(cfg)
    written = render_figures(trace, tmp_path)
    assert len(written) == 2
    for path in written:
        assert os.path.getsize(path) > 1000


def test_cli_exit_codes(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(scenario_s1(horizon=15).to_dict()))
    out = tmp_path / "run"
    assert cli.main(["simulate", "--config", str(cfg_path), "--out", str(out),
                     "--no-figures"]) == 0
    assert (out / "estimates.csv").exists()

    assert cli.main(["check-robustness", "--config", str(cfg_path)]) == 0
    assert cli.main(["build-medag", "--config", str(cfg_path)]) == 0
    assert cli.main(["verify-medag", "--trace", str(out / "run_record.json")]) == 0
    assert cli.main(["motifs", "--trace", str(out / "run_record.json")]) == 0
    assert cli.main(["sweep", "--config", str(cfg_path), "--seeds", "0..1",
                     "--horizon", "10"]) == 0
    capsys.readouterr()

    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    assert cli.main(["simulate", "--config", str(bad), "--out", str(out)]) == 2

    # a scripted policy that exceeds per-step capacity aborts with the
    # ledger exit code
    raw = scenario_s1(horizon=15).to_dict()
    raw["adversary"]["spoofers"][0]["policy"] = {
        "name": "scripted",
        "table": {"0": [
            {"claimed": 14, "kind": "estimate", "mode": 1, "value": 1.0,
             "targets": [9], "delay": 1},
            {"claimed": 1, "kind": "estimate", "mode": 1, "value": 2.0,
             "targets": [9], "delay": 1},
        ]},
        "claimed_source_modes": [1, 2],
    }
    greedy = tmp_path / "greedy.json"
    greedy.write_text(json.dumps(raw))
    assert cli.main(["simulate", "--config", str(greedy), "--out", str(out)]) == 3
    capsys.readouterr()


def test_cli_scenario_command(tmp_path, capsys):
    out = tmp_path / "scen"
    assert cli.main(["scenario", "s2", "--out", str(out), "--horizon", "30",
                     "--no-figures"]) == 0
    assert (out / "config.json").exists()
    captured = capsys.readouterr()
    assert "no-spoof 5: PASS" in captured.out
