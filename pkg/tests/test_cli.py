"""Command-line interface: subcommands, outputs, and exit codes."""

import json

import pytest

from pdopt.cli import main
from pdopt.scenarios import bundled_scenario_path

from test_scenarios import tiny_scenario_dict


@pytest.fixture()
def tiny_path(tmp_path):
    path = tmp_path / "tiny.json"
    path.write_text(json.dumps(tiny_scenario_dict(max_iters=300)))
    return str(path)


def test_run_subcommand(tiny_path, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--scenario", tiny_path, "--algorithm", "all", "--out", str(out)])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "oracle x*" in stdout and "admissible" in stdout
    assert (out / "tiny_pd.csv").exists()
    assert (out / "tiny_dgd_075.csv").exists()
    report = json.loads((out / "tiny_report.json").read_text())
    assert report["algorithm_selector"] == "all"


def test_run_overrides(tiny_path, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", "--scenario", tiny_path, "--out", str(out), "--max-iters", "5", "--alpha", "0.2"])
    assert code == 0
    report = json.loads((out / "tiny_report.json").read_text())
    assert report["scenario"]["max_iters"] == 5
    assert report["scenario"]["alpha"] == 0.2
    assert report["results"][0]["iterations"] == 5


def test_validate_subcommand(tiny_path, capsys):
    code = main(["validate", "--scenario", tiny_path])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "bound_spectral" in stdout and "admissible" in stdout


def test_oracle_subcommand(capsys):
    code = main(["oracle", "--scenario", str(bundled_scenario_path("example52"))])
    assert code == 0
    stdout = capsys.readouterr().out
    assert "x* =" in stdout and "provenance = analytic" in stdout


def test_missing_file_is_scenario_error(tmp_path, capsys):
    code = main(["oracle", "--scenario", str(tmp_path / "nope.json")])
    assert code == 3
    assert "error[scenario]" in capsys.readouterr().err


def test_invalid_scenario_is_scenario_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(tiny_scenario_dict(alpha=-1.0)))
    code = main(["validate", "--scenario", str(path)])
    assert code == 3
    assert "alpha" in capsys.readouterr().err


def test_unknown_algorithm_is_usage_error(tiny_path, tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["run", "--scenario", tiny_path, "--algorithm", "sgd", "--out", str(tmp_path)])
    assert info.value.code == 2


def test_diverging_run_is_numerical_error(tmp_path, capsys):
    code = main(["run", "--scenario", str(bundled_scenario_path("example51")), "--out", str(tmp_path)])
    assert code == 4
    err = capsys.readouterr().err
    assert "error[numerical]" in err and "iteration" in err
