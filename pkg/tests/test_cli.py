"""CLI tests: scenario parsing/round-tripping, command outputs, CSV
stability, and exit codes."""

import json

import pytest

from mvsched.cli import (
    CSV_HEADER,
    ScenarioError,
    main,
    parse_scenario,
    scenario_to_json,
)
MINIMAL = {
    "schema": 1,
    "M": 2,
    "N_f": 2,
    "capacity_mbps": 23.5,
    "rate_mbps": 11.75,
    "scheduler": "greedy",
}


def write_scenario(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_parse_minimal_applies_defaults():
    got = parse_scenario(json.dumps(MINIMAL))
    assert got.M == 2
    assert got.T_D == 5
    assert got.K == 1
    assert got.correlation_view == "full"
    assert got.mode == "static"
    assert got.runs == 1


def test_parse_rejects_unknown_key():
    doc = {**MINIMAL, "sneaky": 1}
    with pytest.raises(ScenarioError, match="sneaky"):
        parse_scenario(json.dumps(doc))


def test_parse_rejects_odd_rho_s():
    doc = {**MINIMAL, "rho_s": 3}
    with pytest.raises(ScenarioError, match="rho_s"):
        parse_scenario(json.dumps(doc))


def test_parse_rejects_wrong_types():
    with pytest.raises(ScenarioError, match="M"):
        parse_scenario(json.dumps({**MINIMAL, "M": "four"}))
    with pytest.raises(ScenarioError, match="schema"):
        parse_scenario(json.dumps({**MINIMAL, "schema": 99}))
    with pytest.raises(ScenarioError):
        parse_scenario("{not json")


def test_parse_objects_and_overlap():
    doc = {
        **MINIMAL,
        "rho_s": 2,
        "rho_t": 2,
        "overlap_at_distance": {"-1": 0.93, "1": 0.91},
        "objects": [{"camera": 1, "start": 0.1, "width": 0.2, "speed": 0.05}],
        "weights": [1.0, 2.0],
    }
    got = parse_scenario(json.dumps(doc))
    assert got.overlap_at_distance == {-1: 0.93, 1: 0.91}
    assert got.objects[0].width == 0.2
    assert got.weights == (1.0, 2.0)


def test_parse_rejects_bad_object_entries():
    doc = {**MINIMAL, "objects": [{"camera": 1, "start": 0.1, "width": 0.2}]}
    with pytest.raises(ScenarioError, match="objects"):
        parse_scenario(json.dumps(doc))
    doc2 = {
        **MINIMAL,
        "objects": [
            {"camera": 1, "start": 0.1, "width": 0.2, "speed": 0, "x": 1}
        ],
    }
    with pytest.raises(ScenarioError, match="objects"):
        parse_scenario(json.dumps(doc2))


def test_roundtrip_is_identity():
    doc = {
        **MINIMAL,
        "rho_s": 2,
        "overlap_at_distance": {"1": 0.5},
        "objects": [{"camera": 1, "start": 0.0, "width": 0.1, "speed": 0.02}],
        "mode": "dynamic",
        "runs": 3,
    }
    once = parse_scenario(json.dumps(doc))
    twice = parse_scenario(scenario_to_json(once))
    assert once == twice
    assert scenario_to_json(once) == scenario_to_json(twice)


# ---------------------------------------------------------------------------
# commands


def test_cmd_run_writes_json(tmp_path, capsys):
    path = write_scenario(tmp_path, MINIMAL)
    out = tmp_path / "result.json"
    code = main(["run", "--scenario", str(path), "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["aggregate"]["n_runs"] == 1
    assert len(doc["first_run"]["frames"]) == 4
    assert "mean_psnr_db" in capsys.readouterr().out


def test_cmd_run_seed_and_runs_override(tmp_path):
    path = write_scenario(tmp_path, {**MINIMAL, "mode": "dynamic"})
    out = tmp_path / "r.json"
    main(["run", "--scenario", str(path), "--out", str(out), "--seed", "9", "--runs", "2"])
    doc = json.loads(out.read_text())
    assert doc["scenario"]["seed"] == 9
    assert doc["aggregate"]["n_runs"] == 2


def test_cmd_sweep_csv(tmp_path):
    path = write_scenario(tmp_path, {**MINIMAL, "rho_s": 2})
    out = tmp_path / "sweep.csv"
    code = main(
        ["sweep", "--scenario", str(path), "--out", str(out), "--sweep", "rho_s=0,2"]
    )
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    assert lines[1].startswith("0,greedy,")
    assert lines[2].startswith("2,greedy,")


def test_cmd_sweep_rejects_bad_axis(tmp_path):
    path = write_scenario(tmp_path, MINIMAL)
    assert main(["sweep", "--scenario", str(path), "--sweep", "bogus=1"]) == 2


def test_cmd_compare_variants(tmp_path):
    path = write_scenario(tmp_path, {**MINIMAL, "rho_s": 2, "rho_t": 1})
    out = tmp_path / "compare.csv"
    code = main(["compare", "--scenario", str(path), "--out", str(out)])
    assert code == 0
    lines = out.read_text().strip().split("\n")
    assert lines[0] == CSV_HEADER
    labels = [line.split(",")[0] for line in lines[1:]]
    assert labels == [
        "correlation_known",
        "space_corr_known",
        "time_corr_known",
        "no_corr_known",
        "baseline_rndm",
        "baseline_akyildiz",
    ]


def test_csv_byte_stable_apart_from_runtime(tmp_path):
    path = write_scenario(tmp_path, {**MINIMAL, "rho_s": 2})
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        main(["sweep", "--scenario", str(path), "--out", str(out), "--sweep", "rho_s=0,2"])
        outs.append(out.read_text())

    def strip_runtime(text):
        return [line.rsplit(",", 1)[0] for line in text.strip().split("\n")]

    assert strip_runtime(outs[0]) == strip_runtime(outs[1])


def test_cmd_validate_pass_and_fail(tmp_path, capsys):
    doc = {
        **MINIMAL,
        "M": 2,
        "N_f": 2,
        "rho_s": 2,
        "K": 2,
        "scheduler": "trellis",
        "runs": 3,
    }
    path = write_scenario(tmp_path, doc)
    out = tmp_path / "v.csv"
    code = main(["validate", "--scenario", str(path), "--out", str(out)])
    assert code == 0
    assert "pass" in out.read_text()
    code_fail = main(
        [
            "validate",
            "--scenario",
            str(path),
            "--gap-max-tol",
            "-1",
            "--gap-mean-tol",
            "-1",
        ]
    )
    assert code_fail == 1


def test_missing_scenario_file_is_exit_2(tmp_path):
    assert main(["run", "--scenario", str(tmp_path / "nope.json")]) == 2


def test_parse_error_is_exit_2(tmp_path):
    path = write_scenario(tmp_path, {**MINIMAL, "rho_s": 3})
    assert main(["run", "--scenario", str(path)]) == 2


def test_out_dir_env_var(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MVSCHED_OUT_DIR", str(tmp_path / "outputs"))
    path = write_scenario(tmp_path, {**MINIMAL, "rho_s": 2})
    code = main(["sweep", "--scenario", str(path), "--sweep", "rho_s=0"])
    assert code == 0
    assert (tmp_path / "outputs" / "sweep.csv").exists()
