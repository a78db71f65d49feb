import json

import pytest

from groupoid_effect.cli import main
from groupoid_effect.runner import SCENARIOS, ScenarioConfig, run_scenario
from groupoid_effect.errors import ConfigurationError


def test_list_scenarios(capsys):
    assert main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    for name in SCENARIOS:
        assert name in out


def test_run_writes_report(tmp_path):
    out = tmp_path / "r.json"
    assert main(["run", "--scenario", "ex1", "--samples", "50", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["scenario"] == "ex1"
    assert [c["name"] for c in data["checks"]] == [m[0] for m in SCENARIOS["ex1"].manifest]


def test_config_file_and_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"scenario": "ex2a", "params": {"k": 2}, "samples": 20,
                               "seed": 4, "format": "text"}))
    assert main(["run", "--config", str(cfg), "--format", "csv"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("scenario,name")


@pytest.mark.parametrize("argv", [
    ["run", "--scenario", "nope"],
    ["run", "--scenario", "ex2a", "--param", "k=three"],
    ["run", "--scenario", "ex2a", "--param", "zz=1"],
    ["run", "--scenario", "ex2b", "--param", "omega=sin:1"],
    ["run", "--scenario", "ex2b", "--param", "phi0=poly:1,1"],
    ["run", "--scenario", "custom", "--param", "point=1,2"],
    ["run", "--scenario", "ex1", "--samples", "0"],
    ["run", "--scenario", "ex1", "--config", "/nonexistent.json"],
    ["run", "--scenario", "ex1", "--out", "/nonexistent/dir/r.json", "--samples", "5"],
])
def test_configuration_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert "groupoid-effect:" in capsys.readouterr().err


def test_bad_tolerance_override_exits_2(monkeypatch):
    monkeypatch.setenv("GE_TOL_OVERRIDE", "map_abs_tol=-1")
    assert main(["run", "--scenario", "ex1", "--samples", "5"]) == 2


def test_failing_check_exits_1(monkeypatch, capsys):
    # tolerances far below rounding error make the residual checks fail honestly
    monkeypatch.setenv("GE_TOL_OVERRIDE", "map_abs_tol=1e-17,fd_abs_tol=1e-16")
    assert main(["run", "--scenario", "ex4", "--samples", "20", "--format", "text"]) == 1
    assert "fail" in capsys.readouterr().out


def test_unknown_params_rejected():
    with pytest.raises(ConfigurationError):
        ScenarioConfig("ex1", {"k": 1})


def test_every_manifest_entry_reported_once():
    for name in ("ex3", "ex4", "custom"):
        r = run_scenario(ScenarioConfig(name, samples=20))
        names = [c.name for c in r.checks]
        assert names == [m[0] for m in SCENARIOS[name].manifest]
        assert len(set(names)) == len(names)


def test_custom_scenario(capsys):
    assert main(["run", "--scenario", "custom", "--param", "group=g", "--param", "point=1,0,0",
                 "--samples", "50", "--format", "text"]) == 0
