import numpy as np
import pytest
from src.exceptions import CutoffError, DimensionMismatchError, ParameterError
from src.operators import (
    KET_S,
    KET_T,
    Operator,
    Superoperator,
    build_full_liouvillian,
    build_markov_liouvillian,
    build_phase_space_model,
    build_qubit_liouvillian,
    build_regrouped_liouvillian,
    destroy,
    local_operators,
    random_density_matrices,
    thermal_state,
    unvec,
    vec,
)
from src.params import ModelParams


@pytest.fixture
def rng():
    return np.random.default_rng(11)


def test_vec_is_column_stacking():
    rho = np.array([[1, 2], [3, 4]], dtype=complex)
    assert np.array_equal(vec(rho), np.array([1, 3, 2, 4]))
    assert np.array_equal(unvec(vec(rho), 2), rho)


def test_destroy_matrix_elements():
    a = destroy(4)
    assert a[0, 1] == pytest.approx(1.0)
    assert a[2, 3] == pytest.approx(np.sqrt(3))
    number = a.conj().T @ a
    assert np.allclose(np.diag(number).real, [0, 1, 2, 3])


def test_triplet_singlet_kets_are_orthonormal():
    assert abs(np.vdot(KET_T, KET_S)) < 1e-15
    assert np.linalg.norm(KET_S) == pytest.approx(1.0)


def test_operator_rejects_non_square():
    with pytest.raises(DimensionMismatchError, match="square"):
        Operator(np.zeros((2, 3)))


def test_operator_hermitian_flag_is_checked():
    with pytest.raises(ParameterError):
        Operator(np.array([[0, 1], [0, 0]]), hermitian=True)


def test_dense_entries_match_apply(rng):
    ops = local_operators()
    L = build_qubit_liouvillian(ModelParams(delta1=0.3, gamma_phi=0.1))
    for rho in random_density_matrices(ops.dim, 3, rng):
        assert np.allclose(L.entries @ vec(rho), vec(L.apply(rho)))


def test_block_matches_dense_restriction():
    L = build_full_liouvillian(ModelParams(kappa=0.2, n_th=0.5, fock_cutoff=3), tail_tolerance=None)
    indices = L.sector_indices()
    assert np.allclose(L.block(indices), L.entries[np.ix_(indices, indices)])


@pytest.mark.parametrize("params", [
    ModelParams(kappa=0.1, n_th=1.0, fock_cutoff=4),
    ModelParams(kappa=0.1, n_th=1.0, gamma2=0.5, delta1=0.2, gamma_phi=0.05, p_loss=0.3, fock_cutoff=4),
])
def test_full_liouvillian_preserves_trace_and_hermiticity(params, rng):
    L = build_full_liouvillian(params, tail_tolerance=None)
    for rho in random_density_matrices(L.dim, 3, rng):
        assert L.trace_defect(rho) < 1e-12
        assert L.hermiticity_defect(rho) < 1e-12


def test_regrouped_equals_full(rng):
    params = ModelParams(kappa=0.1, n_th=1.0, delta1=0.1, delta2=-0.2, gamma_phi=0.02, p_loss=0.2, fock_cutoff=4)
    full = build_full_liouvillian(params, tail_tolerance=None)
    regrouped = build_regrouped_liouvillian(params, tail_tolerance=None)
    for rho in random_density_matrices(full.dim, 2, rng):
        assert np.allclose(full.apply(rho), regrouped.apply(rho), atol=1e-12)


def test_regrouped_needs_symmetric_gamma():
    with pytest.raises(ParameterError, match="symmetric"):
        build_regrouped_liouvillian(ModelParams(gamma2=0.5, fock_cutoff=3), tail_tolerance=None)


def test_markov_liouvillian_is_qubit_only():
    L = build_markov_liouvillian(ModelParams(n_th=1.0))
    assert L.dim == 4
    assert L.dims == (2, 2)


def test_cutoff_too_small_raises():
    with pytest.raises(CutoffError, match="thermal tail"):
        build_full_liouvillian(ModelParams(n_th=4.0, fock_cutoff=3))


def test_thermal_state_mean():
    rho = thermal_state(1.0, 60)
    assert np.trace(rho).real == pytest.approx(1.0)
    assert np.diag(rho).real @ np.arange(60) == pytest.approx(1.0, rel=1e-6)


def test_phase_space_model_drive():
    params = ModelParams(kappa=0.04, n_th=3.0)
    model = build_phase_space_model(params)
    assert model.mean_intensity == pytest.approx(1.5)
    assert model.drive_strength == pytest.approx(np.sqrt(0.04))
    plus, minus = model.drive_superoperators()
    assert plus.shape == (16, 16)
    assert np.allclose(minus, Superoperator.hamiltonian(model.v_minus).entries)


def test_conditional_liouvillian_has_no_charges():
    model = build_phase_space_model(ModelParams(kappa=0.1, n_th=1.0))
    L = model.conditional_liouvillian(0.5 + 0.2j)
    assert L.charges is None
    assert L.sector_indices().size == 16


def test_phase_space_model_needs_kappa():
    with pytest.raises(ParameterError, match="kappa > 0"):
        build_phase_space_model(ModelParams(kappa=0.0))


def test_three_level_space():
    ops = local_operators(three_level=True)
    assert ops.dim == 3
    with pytest.raises(ParameterError):
        local_operators(fock_cutoff=3, three_level=True)
