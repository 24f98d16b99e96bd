import json

import pytest

from funnelstates import ConfigurationError
from funnelstates.cli import main
from funnelstates.runner import (
    ScenarioConfig,
    config_from_dict,
    emit_demo_tables,
    list_suites,
    load_config,
    report_digest,
    run,
    suite_seed,
)


def test_default_config_covers_all_suites():
    config = ScenarioConfig()
    assert len(config.active_suites) == len(list_suites())
    assert config.tower_dims == (2, 2, 4)
    assert config.seed == 42


def test_unknown_suite_rejected():
    with pytest.raises(ConfigurationError):
        ScenarioConfig(suites=("not_a_suite",))


def test_unknown_config_key_rejected():
    with pytest.raises(ConfigurationError):
        config_from_dict({"tower_dims": [2, 2], "nonsense": 1})


def test_seed_range_enforced():
    with pytest.raises(ConfigurationError):
        ScenarioConfig(seed=-1)
    with pytest.raises(ConfigurationError):
        ScenarioConfig(seed=2**64)


def test_suite_seed_is_stable():
    assert suite_seed(42, "lift") == suite_seed(42, "lift")
    assert suite_seed(42, "lift") != suite_seed(42, "fuchs")
    assert suite_seed(42, "lift") != suite_seed(43, "lift")


def test_list_suites_contents():
    infos = list_suites()
    ids = {info["id"] for info in infos}
    assert "lift" in ids and "spectral" in ids
    assert len(infos) >= 14
    for info in infos:
        assert info["claim"] and info["description"]


def test_single_suite_run_passes():
    report = run(ScenarioConfig(suites=("lift",)))
    assert report.passed
    doc = report.to_dict()
    assert doc["schema_version"] == "1"
    assert doc["counts"]["fail"] == 0
    assert [s["suite"] for s in doc["suites"]] == ["lift"]
    for check in doc["suites"][0]["checks"]:
        assert set(check) == {"id", "status", "residual", "residual_17g",
                              "tolerance", "comparator", "witness"}
        float(check["residual_17g"])  # machine-parseable


def test_capacity_failure_surfaces_in_report():
    report = run(ScenarioConfig(tower_dims=(2, 2, 2), suites=("lift", "fuchs")))
    assert not report.passed
    for suite in report.suites:
        assert suite.error is not None
        assert "CapacityError" in suite.error


def test_failed_checks_carry_witnesses():
    # an unreachable override forces a failure
    report = run(ScenarioConfig(suites=("lift",), tolerance_overrides={"lift": 1e-30}))
    failed = [c for s in report.suites for c in s.checks if c.status == "fail"]
    assert failed
    assert all(c.witness is not None for c in failed)


def test_reports_are_deterministic():
    config = ScenarioConfig(suites=("lift", "uhlmann"), sample_counts={"lift": 20, "uhlmann": 30})
    assert report_digest(run(config)) == report_digest(run(config))


def test_demo_tables_have_rows():
    text = emit_demo_tables(ScenarioConfig())
    assert "closed form" in text
    assert "weak" in text and "strong" in text
    assert "completeness" in text
    assert len(text.splitlines()) > 15


# -- CLI -----------------------------------------------------------------


def test_cli_suites_command(capsys):
    assert main(["suites"]) == 0
    out = capsys.readouterr().out
    assert "lift" in out and "spectral" in out


def test_cli_verify_single_suite(tmp_path, capsys):
    out_file = tmp_path / "report.json"
    code = main(["verify", "--suite", "lift", "--out", str(out_file)])
    assert code == 0
    doc = json.loads(out_file.read_text())
    assert doc["counts"]["fail"] == 0
    assert "pass" in capsys.readouterr().out


def test_cli_verify_config_file(tmp_path):
    cfg = tmp_path / "scenario.json"
    cfg.write_text(json.dumps({"tower_dims": [2, 2], "seed": 7, "suites": ["min_projection"]}))
    out_file = tmp_path / "r.json"
    assert main(["verify", "--config", str(cfg), "--out", str(out_file)]) == 0
    doc = json.loads(out_file.read_text())
    assert doc["scenario"]["tower_dims"] == [2, 2]
    assert doc["scenario"]["seed"] == 7


def test_cli_verify_capacity_failure_exit_code(tmp_path):
    cfg = tmp_path / "scenario.json"
    cfg.write_text(json.dumps({"tower_dims": [2, 2, 2], "suites": ["lift"]}))
    assert main(["verify", "--config", str(cfg), "--out", str(tmp_path / "r.json")]) == 1


def test_cli_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "scenario.json"
    cfg.write_text(json.dumps({"suites": ["nope"]}))
    assert main(["verify", "--config", str(cfg)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_cli_out_dir_env(tmp_path, monkeypatch):
    monkeypatch.setenv("FUNNELSTATES_OUT_DIR", str(tmp_path))
    assert main(["verify", "--suite", "min_projection"]) == 0
    assert (tmp_path / "report.json").exists()


def test_cli_demo(capsys):
    assert main(["demo"]) == 0
    assert "survival probability" in capsys.readouterr().out
