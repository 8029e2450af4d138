import pytest
import os
import json
import math
import tempfile
import pandas as pd
from pathlib import Path
from src import __version__
from src.params import ModelParams
from src.sweep import ResultRecord
from src.writer import ResultWriter, column_from_header, frame_to_records, header_for, unlabeled


@pytest.fixture
def writer():
    return ResultWriter()


@pytest.fixture
def sample_data():
    return pd.DataFrame([
        {"route": "exact", "kappa": 0.01, "t": 0.0, "concurrence": 0.123456789012345678},
        {"route": "exact", "kappa": 0.02, "t": 1.5, "concurrence": math.nan},
    ])


@pytest.fixture
def sample_records():
    return [
        ResultRecord(index=0, route="markov", seed=7, params=ModelParams(n_th=1.0),
                     populations={"rho_00": 4 / 9, "rho_T": 2 / 9, "rho_S": 2 / 9, "rho_11": 1 / 9},
                     concurrence=0.0),
        ResultRecord(index=1, route="exact", seed=8, params=ModelParams(n_th=500.0),
                     error="CutoffError: exact simulations are limited"),
    ]


def test_writer_initialization():
    """Test writer initialization with default and custom settings."""
    writer = ResultWriter()
    assert writer.base_dir == Path("output")
    assert writer.output_format == "csv"

    custom_writer = ResultWriter("custom_dir", "JSON")
    assert custom_writer.base_dir == Path("custom_dir")
    assert custom_writer.output_format == "json"

    with pytest.raises(ValueError, match="Output format"):
        ResultWriter(output_format="xlsx")


def test_headers_carry_units():
    assert header_for("kappa") == "kappa [rate]"
    assert header_for("t") == "t [1/rate]"
    assert header_for("rho_S") == "rho_S [1]"
    assert header_for("k0z1") == "k0z1 [rad]"
    assert header_for("route") == "route"
    assert column_from_header("t [1/rate]") == "t"
    assert column_from_header("route") == "route"


def test_create_output_dir(writer):
    """Test creation of output directory."""
    with tempfile.TemporaryDirectory() as tmpdir:
        writer.base_dir = Path(tmpdir)
        bundle_dir = writer.create_output_dir("fig2c")
        assert os.path.exists(bundle_dir)
        assert str(bundle_dir).endswith("fig2c")


def test_save_csv(writer, sample_data):
    """Test saving data to CSV with unit headers and full precision."""
    with tempfile.TemporaryDirectory() as tmpdir:
        writer.base_dir = Path(tmpdir)
        filepath = writer.save_data(sample_data, "scan")

        assert filepath.endswith("scan.csv")
        df = pd.read_csv(filepath)
        assert list(df.columns) == ["route", "kappa [rate]", "t [1/rate]", "concurrence [1]"]
        assert df["concurrence [1]"].iloc[0] == 0.123456789012345678
        assert math.isnan(df["concurrence [1]"].iloc[1])


def test_save_json(sample_data):
    """Test saving data to JSON with bare keys and null for NaN."""
    with tempfile.TemporaryDirectory() as tmpdir:
        writer = ResultWriter(tmpdir, "json")
        filepath = writer.save_data(sample_data, "scan.csv")

        assert filepath.endswith("scan.json")
        with open(filepath) as f:
            data = json.load(f)
        assert data[0]["kappa"] == 0.01
        assert data[1]["concurrence"] is None


def test_save_to_nested_path(writer, sample_data):
    with tempfile.TemporaryDirectory() as tmpdir:
        filepath = writer.save_data(sample_data, str(Path(tmpdir) / "nested" / "scan"))
        assert os.path.exists(filepath)
        assert Path(filepath).parent.name == "nested"


def test_save_records_with_manifest(sample_records):
    with tempfile.TemporaryDirectory() as tmpdir:
        writer = ResultWriter(tmpdir)
        filepath = writer.save_records(sample_records, "points", manifest={"timestamp": "2024-01-01T00:00:00"})

        df = unlabeled(pd.read_csv(filepath, keep_default_na=False, na_values=["nan"]))
        assert len(df) == 2
        assert df["error"].iloc[0] == ""
        assert df["error"].iloc[1].startswith("CutoffError")
        assert "timestamp" not in df.columns

        with open(Path(filepath).with_suffix(".manifest.json")) as f:
            manifest = json.load(f)
        assert manifest["engine_version"] == __version__
        assert manifest["results"] == "points.csv"
        assert manifest["timestamp"] == "2024-01-01T00:00:00"


def test_save_bundle(sample_data):
    with tempfile.TemporaryDirectory() as tmpdir:
        writer = ResultWriter(tmpdir)
        paths = writer.save_bundle("fig3a", {"lines": sample_data, "inset": sample_data}, {"quick": True})
        assert set(paths) == {"lines", "inset", "manifest"}
        assert Path(paths["lines"]).parent.name == "fig3a"
        with open(paths["manifest"]) as f:
            manifest = json.load(f)
        assert manifest["panels"] == ["inset", "lines"]
        assert manifest["quick"] is True


def test_frame_to_records(sample_data):
    records = frame_to_records(sample_data)
    assert records[1]["concurrence"] is None
    assert records[0]["route"] == "exact"


def test_save_error_handling(writer):
    """Test error handling when saving files."""
    with tempfile.TemporaryDirectory() as tmpdir:
        writer.base_dir = Path(tmpdir)

        with pytest.raises(AttributeError):
            writer.save_data(None, "scan")

        with pytest.raises(AttributeError):
            writer.save_data({"kappa": [0.1]}, "scan")
