import numpy as np
import pytest
from src.exceptions import ParameterError, StepSizeError
from src.operators import build_full_liouvillian, build_phase_space_model
from src.params import ModelParams
from src.solvers import steady_state
from src.stochastic import (
    OBSERVABLES,
    check_time_step,
    coherent_drive_trace,
    default_time_step,
    ensemble_average,
    integration_grid,
    phase_diffusion_rate,
    phase_diffusion_steady,
    sample_ou_path,
    sample_ou_paths,
    single_qubit_params,
    trajectory_rng,
)


@pytest.fixture
def params():
    return ModelParams(kappa=0.1, n_th=2.0)


def test_trajectory_rng_is_keyed():
    first = trajectory_rng(7, 3).standard_normal(4)
    again = trajectory_rng(7, 3).standard_normal(4)
    other = trajectory_rng(7, 4).standard_normal(4)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other)
    with pytest.raises(ParameterError):
        trajectory_rng(-1, 0)


def test_ou_path_reproducible(params):
    t_grid = np.linspace(0.0, 10.0, 11)
    path = sample_ou_path(params, t_grid, seed=5, index=2)
    assert np.array_equal(path.alpha, sample_ou_path(params, t_grid, seed=5, index=2).alpha)
    assert list(path.to_frame().columns) == ['t', 'alpha_re', 'alpha_im']


def test_ou_stationary_intensity(params):
    t_grid = np.array([0.0, 5.0, 50.0])
    alphas = sample_ou_paths(params, t_grid, master_seed=1, indices=range(4000))
    intensity = np.mean(np.abs(alphas) ** 2, axis=0)
    assert np.allclose(intensity, params.n_th / 2, rtol=0.1)


def test_ou_autocorrelation(params):
    t_grid = np.array([0.0, 10.0])
    alphas = sample_ou_paths(params, t_grid, master_seed=2, indices=range(4000))
    correlation = np.mean(np.conj(alphas[:, 0]) * alphas[:, 1]).real / (params.n_th / 2)
    assert correlation == pytest.approx(np.exp(-params.kappa * 10.0), abs=0.06)


def test_ou_path_needs_bandwidth():
    with pytest.raises(ParameterError, match="kappa > 0"):
        sample_ou_path(ModelParams(kappa=0.0, n_th=1.0), [0.0, 1.0], seed=0)


def test_integration_grid_refines_steps():
    fine, positions = integration_grid([0.0, 1.0, 2.0], 0.3)
    assert np.max(np.diff(fine)) <= 0.3
    assert np.array_equal(fine[positions], [0.0, 1.0, 2.0])


def test_time_step_guard(params):
    model = build_phase_space_model(params)
    step = default_time_step(model, horizon=10.0, n_traj=100)
    assert step <= 0.02
    check_time_step(model, step, max_amplitude=1.0)
    with pytest.raises(StepSizeError):
        check_time_step(model, 1.0, max_amplitude=1.0)


def test_ensemble_shapes_and_normalization(params):
    t_grid = np.array([0.0, 1.0, 2.0])
    ensemble = ensemble_average(params, 100, t_grid, master_seed=3)
    assert ensemble.observables.shape == (3, len(OBSERVABLES))
    assert np.allclose(ensemble.populations().sum(axis=1), 1.0, atol=1e-8)
    assert ensemble.populations()[0] == pytest.approx([1.0, 0.0, 0.0, 0.0])
    frame = ensemble.to_frame()
    assert {'t', 'rho_S', 'se_rho_S', 'p1', 'concurrence'} <= set(frame.columns)


def test_ensemble_independent_of_worker_count(params):
    t_grid = np.array([0.0, 1.0])
    serial = ensemble_average(params, 120, t_grid, master_seed=9, chunk_size=40)
    parallel = ensemble_average(params, 120, t_grid, master_seed=9, chunk_size=40, workers=2)
    assert np.allclose(serial.observables, parallel.observables, rtol=0, atol=1e-12)
    assert np.allclose(serial.states, parallel.states, rtol=0, atol=1e-12)


def test_ensemble_rejects_small_sample(params):
    with pytest.raises(ParameterError, match="n_traj"):
        ensemble_average(params, 10, [0.0, 1.0], master_seed=0)


@pytest.mark.slow
def test_ensemble_converges_to_exact_steady_state():
    params = ModelParams(kappa=0.01, n_th=5.0)
    exact = steady_state(build_full_liouvillian(params)).qubits.triplet_singlet().populations()
    ensemble = ensemble_average(params, 2000, np.array([0.0, 500.0]), master_seed=7)
    errors = ensemble.standard_errors[-1, :4]
    assert np.all(np.abs(ensemble.populations()[-1] - exact) <= 3 * np.maximum(errors, 1e-12))


@pytest.mark.slow
def test_halving_time_step_stays_within_sampling_error(params):
    t_grid = np.array([0.0, 20.0, 40.0])
    coarse = ensemble_average(params, 1000, t_grid, master_seed=3)
    fine = ensemble_average(params, 1000, t_grid, master_seed=4, dt=coarse.dt / 2)
    combined = np.sqrt(coarse.standard_errors[1:, :4] ** 2 + fine.standard_errors[1:, :4] ** 2)
    difference = np.abs(coarse.populations()[1:] - fine.populations()[1:])
    assert np.all(difference <= 3 * np.maximum(combined, 1e-12))


def test_single_qubit_params(params):
    assert single_qubit_params(params).gamma2 == 0.0


def test_coherent_drive_trace(params):
    frame = coherent_drive_trace(params, np.linspace(0.0, 5.0, 6))
    assert list(frame.columns) == ['t', 'p1']
    assert frame['p1'].iloc[0] == pytest.approx(0.0)
    assert frame['p1'].between(-1e-9, 1 + 1e-9).all()


def test_phase_diffusion_rate(params):
    assert phase_diffusion_rate(params) == pytest.approx(params.kappa / 4)
    with pytest.raises(ParameterError, match="radius"):
        phase_diffusion_rate(params, r0=0.0)


def test_phase_diffusion_steady(params):
    state = phase_diffusion_steady(params)
    assert 0.0 <= state.concurrence() <= 1.0
    with pytest.raises(ParameterError):
        phase_diffusion_steady(params.replace(n_th=0.0))
