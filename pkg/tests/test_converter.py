import json
import math
import pytest
import tempfile
import pandas as pd
from pathlib import Path
from src.converter import ResultConverter
from src.writer import ResultWriter


@pytest.fixture
def results_dir():
    with tempfile.TemporaryDirectory() as tmpdir:
        writer = ResultWriter(tmpdir)
        frame = pd.DataFrame([
            {"route": "cfrac", "kappa": 0.01, "concurrence": 0.25, "error": None},
            {"route": "cfrac", "kappa": 0.1, "concurrence": math.nan, "error": "ConvergenceError: n_max"},
        ])
        path = writer.save_data(frame, "scan")
        writer.write_manifest(path, {"timestamp": "2024-01-01T00:00:00"})
        yield Path(tmpdir)


def test_result_files_skip_manifests(results_dir):
    converter = ResultConverter(str(results_dir))
    files = converter.result_files()
    assert [f.name for f in files] == ["scan.csv"]


def test_missing_directory():
    converter = ResultConverter("does_not_exist")
    results = converter.convert_files("json")
    assert results["success"] == []
    assert "does not exist" in results["errors"][0]


def test_csv_to_json(results_dir):
    converter = ResultConverter(str(results_dir))
    results = converter.convert_files("json")
    assert len(results["success"]) == 1
    assert results["errors"] == []

    with open(results_dir / "scan.json") as f:
        data = json.load(f)
    assert data[0]["kappa"] == 0.01
    assert data[0]["error"] == ""
    assert data[1]["concurrence"] is None


def test_json_back_to_csv(results_dir):
    converter = ResultConverter(str(results_dir))
    converter.convert_files("json")
    (results_dir / "scan.csv").unlink()

    success, message = converter.convert_file(results_dir / "scan.json", "csv")
    assert success, message
    df = pd.read_csv(results_dir / "scan.csv")
    assert "kappa [rate]" in df.columns
    assert df["kappa [rate]"].tolist() == [0.01, 0.1]


def test_single_file_path(results_dir):
    converter = ResultConverter()
    results = converter.convert_files("json", str(results_dir / "scan.csv"))
    assert len(results["success"]) == 1


def test_convert_invalid_json():
    with tempfile.TemporaryDirectory() as tmpdir:
        bad = Path(tmpdir) / "bad.json"
        bad.write_text(json.dumps({"not": "a list"}))
        success, message = ResultConverter(tmpdir).convert_file(bad, "csv")
        assert not success
        assert "bad.json" in message


def test_empty_directory():
    with tempfile.TemporaryDirectory() as tmpdir:
        results = ResultConverter(tmpdir).convert_files("csv")
        assert "No files found" in results["errors"][0]
