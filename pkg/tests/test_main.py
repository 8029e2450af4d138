import json
import pytest
import tempfile
import pandas as pd
from pathlib import Path
from unittest.mock import patch
from main import EXIT_CONFIG, EXIT_OK, EXIT_PARTIAL, EXIT_SOLVER, main, parse_args


def run(argv):
    with pytest.raises(SystemExit) as excinfo:
        main(argv)
    return excinfo.value.code


def write_config(directory, **fields):
    path = Path(directory) / "run.json"
    path.write_text(json.dumps({"schema_version": 1, **fields}))
    return str(path)


def test_parse_args():
    args = parse_args(["figure", "fig2c", "--quick", "--workers", "2"])
    assert args.command == "figure"
    assert args.name == "fig2c"
    assert args.quick
    assert args.workers == 2
    assert args.format == "csv"


def test_steady_markov(capsys):
    assert run(["steady", "--route", "markov"]) == EXIT_OK
    assert "concurrence = 0" in capsys.readouterr().out


def test_steady_writes_record():
    with tempfile.TemporaryDirectory() as tmpdir:
        out = str(Path(tmpdir) / "point")
        assert run(["steady", "--route", "markov", "--out", out]) == EXIT_OK
        assert Path(out + ".csv").exists()
        assert Path(out + ".manifest.json").exists()


def test_missing_config_is_a_config_error(capsys):
    assert run(["steady", "--config", "missing.json"]) == EXIT_CONFIG
    assert "Configuration error" in capsys.readouterr().out


def test_negative_seed():
    assert run(["steady", "--route", "markov", "--seed", "-1"]) == EXIT_CONFIG


def test_sweep_writes_valid_csv(capsys):
    with tempfile.TemporaryDirectory() as tmpdir:
        config = write_config(tmpdir, route="markov",
                              sweep={"axes": [{"name": "n_th", "values": [0.0, 1.0, 2.0]}]})
        out = str(Path(tmpdir) / "scan")
        assert run(["sweep", "--config", config, "--out", out]) == EXIT_OK
        frame = pd.read_csv(out + ".csv")
        assert len(frame) == 3
        assert "scan.csv is valid" in capsys.readouterr().out


def test_sweep_with_failed_points():
    with tempfile.TemporaryDirectory() as tmpdir:
        config = write_config(tmpdir, route="exact", params={"kappa": 0.5},
                              sweep={"axes": [{"name": "n_th", "values": [0.5, 1000.0]}]})
        out = str(Path(tmpdir) / "scan")
        assert run(["sweep", "--config", config, "--out", out]) == EXIT_PARTIAL


def test_evolve_requires_time_grid():
    assert run(["evolve"]) == EXIT_CONFIG


def test_validate_missing_file():
    assert run(["validate", "--file", "nonexistent.csv"]) == EXIT_SOLVER


@patch("main.run_oracle_suite", return_value=[])
def test_validate_oracle_suite(mock_suite, capsys):
    assert run(["validate"]) == EXIT_OK
    mock_suite.assert_called_once_with(quick=True)
    assert "All oracle checks passed" in capsys.readouterr().out


def test_convert_directory():
    with tempfile.TemporaryDirectory() as tmpdir:
        pd.DataFrame([{"kappa": 0.1, "concurrence": 0.2}]).to_csv(Path(tmpdir) / "scan.csv", index=False)
        assert run(["convert", "--to", "json", "--path", tmpdir]) == EXIT_OK
        assert (Path(tmpdir) / "scan.json").exists()


def test_convert_empty_directory():
    with tempfile.TemporaryDirectory() as tmpdir:
        assert run(["convert", "--to", "csv", "--path", tmpdir]) == EXIT_CONFIG
