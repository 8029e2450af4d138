import numpy as np
import pytest
from scipy.stats import unitary_group
from src.analytic import markov_steady, x_state_concurrence
from src.exceptions import DegenerateSteadyStateError, DimensionMismatchError, InvalidStateError
from src.operators import (
    KET_00,
    KET_11,
    KET_S,
    KET_T,
    Superoperator,
    build_full_liouvillian,
    build_markov_liouvillian,
    random_density_matrices,
)
from src.params import ModelParams
from src.solvers import QubitState, concurrence, evolve, evolve_observables, partial_trace_cavity, steady_state
from src.sweep import initial_full_state


def projector(ket):
    return np.outer(ket, ket.conj())


def test_bell_states_are_maximally_entangled():
    assert concurrence(projector(KET_S)) == pytest.approx(1.0)
    assert concurrence(projector(KET_T)) == pytest.approx(1.0)


def test_product_and_mixed_states_are_separable():
    assert concurrence(projector(KET_00)) == pytest.approx(0.0)
    assert concurrence(np.eye(4) / 4) == pytest.approx(0.0)


def test_werner_state_concurrence():
    p = 0.8
    rho = p * projector(KET_S) + (1 - p) * np.eye(4) / 4
    assert concurrence(rho) == pytest.approx((3 * p - 1) / 2)


def test_general_concurrence_matches_x_state_form():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        weights = np.sort(rng.dirichlet(np.ones(4)))[::-1]
        rho_S = weights[0]
        rho_00, rho_T, rho_11 = rng.permutation(weights[1:])
        rho = (rho_00 * projector(KET_00) + rho_T * projector(KET_T)
               + rho_S * projector(KET_S) + rho_11 * projector(KET_11))
        expected = x_state_concurrence(rho_00, rho_T, rho_S, rho_11)
        assert abs(concurrence(rho) - expected) <= 1e-12


def test_concurrence_is_local_unitary_invariant():
    rng = np.random.default_rng(11)
    for rho in random_density_matrices(4, 200, rng):
        local = np.kron(unitary_group.rvs(2, random_state=rng), unitary_group.rvs(2, random_state=rng))
        rotated = local @ rho @ local.conj().T
        rotated = 0.5 * (rotated + rotated.conj().T)
        assert abs(concurrence(rotated) - concurrence(rho)) <= 1e-10


def test_triplet_singlet_view():
    rho = 0.5 * projector(KET_S) + 0.5 * projector(KET_00)
    view = QubitState(rho).triplet_singlet()
    assert view.rho_S == pytest.approx(0.5)
    assert view.rho_00 == pytest.approx(0.5)
    assert view.rho_T == pytest.approx(0.0)
    assert view.chi_0S == pytest.approx(0.0)
    assert sum(view.populations()) == pytest.approx(1.0)


def test_three_by_three_state_is_embedded():
    state = QubitState(np.diag([0.5, 0.25, 0.25]))
    assert state.entries.shape == (4, 4)
    assert state.populations()[3] == 0.0


@pytest.mark.parametrize("entries, message", [
    (np.diag([0.5, 0.5, 0.5, 0.5]), "trace"),
    (np.diag([1.5, -0.5, 0.0, 0.0]), "negative eigenvalue"),
    (np.array([[0.5, 1.0, 0, 0], [0, 0.5, 0, 0], [0, 0, 0, 0], [0, 0, 0, 0]]), "Hermitian"),
])
def test_invalid_states_raise(entries, message):
    with pytest.raises(InvalidStateError, match=message):
        QubitState(entries)


def test_wrong_shape_raises():
    with pytest.raises(DimensionMismatchError):
        QubitState(np.eye(2) / 2)


def test_partial_trace_of_product():
    qubits = projector(KET_S)
    cavity = np.diag([0.7, 0.3])
    reduced = partial_trace_cavity(np.kron(qubits, cavity), 2)
    assert np.allclose(reduced.entries, qubits)
    with pytest.raises(DimensionMismatchError):
        partial_trace_cavity(np.kron(qubits, cavity), 3)


def test_markov_liouvillian_reaches_thermal_product():
    result = steady_state(build_markov_liouvillian(ModelParams(n_th=1.0)))
    view = result.qubits.triplet_singlet()
    assert np.allclose(view.populations(), [4 / 9, 2 / 9, 2 / 9, 1 / 9], atol=1e-10)
    assert result.concurrence == pytest.approx(0.0, abs=1e-10)


def test_zero_temperature_steady_state_is_ground():
    result = steady_state(build_full_liouvillian(ModelParams(kappa=0.1, n_th=0.0)))
    assert result.qubits.populations()[0] == pytest.approx(1.0)
    assert result.cavity_occupation == pytest.approx(0.0, abs=1e-12)


def test_full_steady_state_diagnostics(symmetric_params):
    result = steady_state(build_full_liouvillian(symmetric_params))
    assert result.residual <= 1e-8 * result.scale
    assert result.cavity_occupation == pytest.approx(symmetric_params.n_th / 2, rel=1e-6)
    assert result.tail < 1e-8
    assert 0.0 <= result.concurrence <= 1.0
    assert result.sector_size < result.rho.size


def test_markov_limit_is_separable(markov_params):
    result = steady_state(build_full_liouvillian(markov_params))
    assert result.concurrence < 1e-8
    assert result.qubits.trace_distance(markov_steady(1.0).to_state()) < 0.02


def test_entanglement_in_narrow_band_regime():
    result = steady_state(build_full_liouvillian(ModelParams(kappa=0.01, n_th=4.0)))
    assert result.concurrence > 0.05


def test_degenerate_generator_raises():
    with pytest.raises(DegenerateSteadyStateError):
        steady_state(Superoperator.hamiltonian(np.diag([0.0, 1.0, 2.0, 3.0]).astype(complex)))


def test_evolution_relaxes_to_steady_state():
    params = ModelParams(kappa=0.5, n_th=1.0)
    L = build_full_liouvillian(params)
    steady = steady_state(L)
    rho0 = initial_full_state(params, L.dims[2])
    states = evolve(L, rho0, np.array([0.0, 5.0, 100.0]))
    assert states.shape == (3, L.dim, L.dim)
    assert np.allclose(np.trace(states, axis1=1, axis2=2), 1.0, atol=1e-8)
    assert np.max(np.abs(states[-1] - steady.rho)) < 1e-3


def test_evolve_observables_columns():
    params = ModelParams(kappa=0.5, n_th=0.5)
    L = build_full_liouvillian(params)
    frame = evolve_observables(L, initial_full_state(params, L.dims[2]), np.linspace(0.0, 2.0, 5))
    assert list(frame.columns) == ['t', 'rho_00', 'rho_T', 'rho_S', 'rho_11', 'chi_ST', 'chi_0S', 'chi_0T',
                                   'concurrence']
    assert frame['rho_00'].iloc[0] == pytest.approx(1.0)


def test_evolve_rejects_bad_grid():
    L = build_markov_liouvillian(ModelParams(n_th=1.0))
    with pytest.raises(ValueError, match="strictly increasing"):
        evolve(L, projector(KET_00), [0.0, 0.0])
