import math
import pandas as pd
import pytest
import tempfile
from pathlib import Path
from src.config import ROUTES, RunConfig, SweepAxis, TimeGrid
from src.exceptions import ConfigError
from src.params import ModelParams
from src.sweep import (
    RECORD_COLUMNS,
    ROUTE_SOLVERS,
    ResultRecord,
    SweepSpec,
    point_seed,
    records_to_frame,
    run_evolution,
    run_steady,
    run_sweep,
    solve_point,
    steady_horizon,
)
from src.writer import ResultWriter


def test_every_route_has_a_solver():
    assert set(ROUTE_SOLVERS) == set(ROUTES)


def test_point_seed_is_deterministic():
    assert point_seed(42, 3) == point_seed(42, 3)
    assert point_seed(42, 3) != point_seed(42, 4)
    assert 0 <= point_seed(0, 0) < 2 ** 63


def test_grid_is_row_major():
    spec = SweepSpec.build("markov", ModelParams(), [
        SweepAxis(name="n_th", scale="list", points=(1.0, 2.0)),
        SweepAxis(name="kappa", scale="linear", start=0.1, stop=0.3, num=3),
    ])
    grid = spec.grid()
    assert spec.shape() == (2, 3)
    assert len(grid) == 6
    assert grid[0] == {"n_th": 1.0, "kappa": 0.1}
    assert grid[1]["kappa"] == pytest.approx(0.2)
    assert grid[3] == {"n_th": 2.0, "kappa": 0.1}


def test_spec_validation():
    spec = SweepSpec.build("markov", ModelParams(), [], workers=0)
    with pytest.raises(ConfigError, match="workers"):
        spec.validate()
    with pytest.raises(ConfigError, match="unknown route"):
        SweepSpec.build("fast", ModelParams(), []).validate()


def test_solve_point_markov():
    record = solve_point("markov", ModelParams(n_th=1.0))
    assert record.ok
    assert record.populations["rho_00"] == pytest.approx(4 / 9)
    assert record.concurrence == 0.0


def test_solve_point_unknown_route():
    with pytest.raises(ConfigError):
        solve_point("fast", ModelParams())


@pytest.mark.parametrize("route", ["quasistatic", "closed-form", "three-level", "bourret"])
def test_analytic_routes_normalize(route):
    record = solve_point(route, ModelParams(kappa=0.01, n_th=10.0))
    assert sum(record.populations.values()) == pytest.approx(1.0, abs=1e-6)
    assert 0.0 <= record.concurrence <= 1.0


def test_exact_route_diagnostics(symmetric_params):
    record = solve_point("exact", symmetric_params)
    assert record.diagnostics["cutoff"] >= 2
    assert record.diagnostics["residual"] < 1e-8


def test_run_steady_uses_point_zero_seed():
    config = RunConfig(route="markov", params=ModelParams(n_th=2.0), seed=5)
    record = run_steady(config)
    assert record.index == 0
    assert record.seed == point_seed(5, 0)
    assert record.timestamp is not None


def test_record_row_order():
    record = ResultRecord(index=0, route="exact", seed=1, params=ModelParams(), error="CutoffError: too big")
    row = record.to_row()
    assert tuple(row) == RECORD_COLUMNS
    assert math.isnan(row["concurrence"])
    assert not record.ok
    assert "timestamp" not in row


def test_sweep_collects_failures():
    spec = SweepSpec.build("exact", ModelParams(kappa=0.5), [
        SweepAxis(name="n_th", scale="list", points=(0.5, 1000.0)),
    ])
    result = run_sweep(spec)
    assert [record.index for record in result.records] == [0, 1]
    assert result.records[0].ok
    assert len(result.failed) == 1
    assert result.failed[0].error.startswith("CutoffError")
    assert result.path is None


def test_sweep_writes_results_and_manifest():
    with tempfile.TemporaryDirectory() as tmpdir:
        spec = SweepSpec.build("markov", ModelParams(), [
            SweepAxis(name="n_th", scale="linear", start=0.0, stop=2.0, num=3),
        ], master_seed=11)
        spec.output = "markov_scan"
        result = run_sweep(spec, writer=ResultWriter(base_dir=tmpdir))
        path = Path(result.path)
        assert path.exists()
        assert path.with_suffix(".manifest.json").exists()
        frame = pd.read_csv(path)
        assert len(frame) == 3
        assert "n_th [1]" in frame.columns
        assert list(frame["seed"]) == [point_seed(11, k) for k in range(3)]


def test_sweep_is_independent_of_workers():
    axes = [SweepAxis(name="n_th", scale="list", points=(0.5, 1.0, 2.0, 4.0))]
    serial = run_sweep(SweepSpec.build("cfrac", ModelParams(kappa=0.1), axes))
    parallel = run_sweep(SweepSpec.build("cfrac", ModelParams(kappa=0.1), axes, workers=2))
    columns = ["index", "seed", "rho_S", "concurrence"]
    pd.testing.assert_frame_equal(serial.to_frame()[columns], parallel.to_frame()[columns])


def test_phi_axis_recomputes_occupation():
    config = RunConfig(route="closed-form", params=ModelParams(kappa=0.01), phi=0.1,
                       axes=(SweepAxis(name="kappa", scale="list", points=(0.01, 0.1)),))
    result = run_sweep(SweepSpec.from_config(config))
    occupations = [record.params.n_th for record in result.records]
    assert occupations == pytest.approx([20.0, 2.0])


def test_steady_horizon():
    assert steady_horizon(ModelParams(kappa=0.01)) == pytest.approx(1000.0)
    assert steady_horizon(ModelParams(kappa=5.0)) == pytest.approx(10.0)


def test_run_evolution():
    config = RunConfig(route="exact", params=ModelParams(kappa=0.5, n_th=0.5), t_grid=TimeGrid(0.0, 1.0, 3))
    frame = run_evolution(config)
    assert len(frame) == 3
    assert frame["rho_00"].iloc[0] == pytest.approx(1.0)
    with pytest.raises(ConfigError, match="t_grid"):
        run_evolution(RunConfig(route="exact"))
    with pytest.raises(ConfigError, match="supports routes"):
        run_evolution(RunConfig(route="markov", t_grid=TimeGrid(0.0, 1.0, 3)))


def test_records_to_frame_empty():
    frame = records_to_frame([])
    assert list(frame.columns) == list(RECORD_COLUMNS)
    assert frame.empty
