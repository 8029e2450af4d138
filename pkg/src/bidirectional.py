"""
Thermal Link - Bidirectional Waveguide Module

Mirror-terminated waveguide: position-dependent exchange and collective
decay between the source cavity (z = 0) and both qubits.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.integrate

from src.cfrac import CfracSolution, mcf_steady
from src.exceptions import ParameterError
from src.operators import (
    KET_00,
    KET_S,
    PhaseSpaceModel,
    Superoperator,
    bare_qubit_hamiltonian,
    check_cutoff,
    dephasing_liouvillian,
    local_operators,
)
from src.params import DEFAULT_TAIL_TOLERANCE, ModelParams

logger = logging.getLogger(__name__)

# sin/cos at multiples of pi leave rounding residue of order 1e-16
COUPLING_FLOOR = 1e-12
BACKACTION_NEGLECTED = 'backaction-neglected'


def _snap(matrix: np.ndarray, scale: float) -> np.ndarray:
    matrix = matrix.copy()
    matrix[np.abs(matrix) < COUPLING_FLOOR * max(scale, 1.0)] = 0.0
    return matrix


@dataclass(frozen=True)
class BidirectionalCouplings:
    """
    Coherent (J) and dissipative (Gamma) couplings, index order (cavity, qubit1, qubit2).

    J_jl = sqrt(g_j g_l)(sin(k(z_j + z_l)) + sin(k|z_j - z_l|))/4,
    Gamma_jl = sqrt(g_j g_l)(cos(k(z_j + z_l)) + cos(k(z_j - z_l)))/2,
    with g = (kappa, gamma1, gamma2) and z_0 = 0.
    """
    exchange: np.ndarray
    dissipation: np.ndarray
    rates: Tuple[float, float, float]
    phases: Tuple[float, float, float]

    @classmethod
    def from_params(cls, params: ModelParams) -> 'BidirectionalCouplings':
        """
        Raises:
            ParameterError: If the qubit positions are not set
        """
        if params.positions is None:
            raise ParameterError("bidirectional couplings need k0z1 and k0z2")
        rates = (params.kappa, params.gamma1, params.gamma2)
        phases = (0.0,) + tuple(params.positions)
        root = np.sqrt(np.outer(rates, rates))
        z = np.array(phases)
        total = z[:, None] + z[None, :]
        gap = np.abs(z[:, None] - z[None, :])
        exchange = root * (np.sin(total) + np.sin(gap)) / 4
        dissipation = root * (np.cos(total) + np.cos(gap)) / 2
        scale = float(max(rates))
        return cls(_snap(exchange, scale), _snap(dissipation, scale), rates, phases)

    @property
    def qubit_exchange(self) -> float:
        """J_12"""
        return float(self.exchange[1, 2])

    @property
    def lamb_shifts(self) -> Tuple[float, float]:
        """J_ii = gamma_i sin(2 k z_i)/4"""
        return float(self.exchange[1, 1]), float(self.exchange[2, 2])

    @property
    def collective_amplitudes(self) -> np.ndarray:
        """sqrt(g_j) cos(k z_j), so Gamma = outer(c, c)."""
        return np.sqrt(np.array(self.rates)) * np.cos(np.array(self.phases))

    def shifted_detunings(self, params: ModelParams) -> Tuple[float, float]:
        """Delta'_i = Delta_i + J_ii"""
        shift1, shift2 = self.lamb_shifts
        return params.delta1 + shift1, params.delta2 + shift2


def _shifted_params(params: ModelParams, couplings: BidirectionalCouplings) -> ModelParams:
    delta1, delta2 = couplings.shifted_detunings(params)
    return params.replace(delta1=delta1, delta2=delta2)


def _coupled_terms(jumps, couplings: BidirectionalCouplings, indices, layout: dict) -> Tuple[np.ndarray, Superoperator]:
    """Exchange Hamiltonian sum J_jl c_j^+ c_l (off-diagonal) and sum Gamma_jl D[c_j, c_l]."""
    dim = jumps[0].shape[0]
    hamiltonian = np.zeros((dim, dim), dtype=complex)
    liouvillian = Superoperator.zero(dim, **layout)
    for j, first in zip(indices, jumps):
        for l, second in zip(indices, jumps):
            if j != l and couplings.exchange[j, l] != 0.0:
                hamiltonian += couplings.exchange[j, l] * first.conj().T @ second
            if couplings.dissipation[j, l] != 0.0:
                liouvillian += Superoperator.cross_dissipator(first, second, couplings.dissipation[j, l], **layout)
    return hamiltonian, liouvillian


def build_bidirectional_liouvillian(params: ModelParams, tail_tolerance: Optional[float] = DEFAULT_TAIL_TOLERANCE,
                                    include_imperfections: bool = True) -> Superoperator:
    """
    Exact master equation of cavity and qubits in front of a mirror.

    -i[H_1' + H_2' + sum_{j!=l} J_jl c_j^+ c_l, rho] + sum Gamma_jl D[c_j, c_l]
    + kappa(n+1) D[a] + kappa n D[a^+], where H_i' carries Delta_i + J_ii and
    Gamma_00 = kappa supplies the cavity out-coupling.

    Args:
        params: Parameters with k0z1, k0z2 set
        tail_tolerance: Allowed thermal population above the Fock cutoff
        include_imperfections: Add pure dephasing

    Returns:
        Superoperator on qubit1 x qubit2 x cavity
    """
    couplings = BidirectionalCouplings.from_params(params)
    ops = local_operators(check_cutoff(params, tail_tolerance))
    layout = ops.layout()
    a = ops.cavity.entries
    jumps = (a, ops.sm1.entries, ops.sm2.entries)

    exchange, collective = _coupled_terms(jumps, couplings, (0, 1, 2), layout)
    hamiltonian = bare_qubit_hamiltonian(ops, _shifted_params(params, couplings)) + exchange
    liouvillian = Superoperator.hamiltonian(hamiltonian, **layout) + collective
    liouvillian += Superoperator.dissipator(a, params.kappa * (params.n_th + 1), **layout)
    liouvillian += Superoperator.dissipator(a.conj().T, params.kappa * params.n_th, **layout)
    if include_imperfections and params.gamma_phi > 0:
        liouvillian += dephasing_liouvillian(ops, params.gamma_phi)
    logger.debug("bidirectional J=%s Gamma=%s", couplings.exchange.tolist(), couplings.dissipation.tolist())
    return liouvillian


def build_bidirectional_phase_space_model(params: ModelParams, three_level: bool = False,
                                          include_imperfections: bool = True) -> PhaseSpaceModel:
    """
    Qubit block of the mirror geometry with the cavity replaced by alpha.

    The drive is V- = sum_j (J_0j + i Gamma_0j/2) sigma_j^-; derivative terms
    describing backaction on the cavity are dropped, which the provenance
    field records.
    """
    if params.kappa <= 0:
        raise ParameterError("phase-space routes need kappa > 0")
    couplings = BidirectionalCouplings.from_params(params)
    ops = local_operators(three_level=three_level)
    layout = ops.layout()
    jumps = (ops.sm1.entries, ops.sm2.entries)

    exchange, collective = _coupled_terms(jumps, couplings, (1, 2), layout)
    hamiltonian = bare_qubit_hamiltonian(ops, _shifted_params(params, couplings)) + exchange
    liouvillian = Superoperator.hamiltonian(hamiltonian, **layout) + collective
    if include_imperfections and params.gamma_phi > 0:
        liouvillian += dephasing_liouvillian(ops, params.gamma_phi)

    drive = sum((couplings.exchange[0, j] + 0.5j * couplings.dissipation[0, j]) * jump
                for j, jump in zip((1, 2), jumps))
    return PhaseSpaceModel(
        qubit_liouvillian=liouvillian,
        v_minus=np.asarray(drive, dtype=complex),
        kappa=params.kappa,
        n_th=params.n_th,
        decay_scale=max(params.gamma1, params.gamma2),
        provenance=BACKACTION_NEGLECTED,
    )


def bidirectional_phase_space_steady(params: ModelParams, n_max: Optional[int] = None,
                                     three_level: bool = False) -> CfracSolution:
    """Matrix continued fraction on the backaction-neglected mirror model."""
    model = build_bidirectional_phase_space_model(params, three_level=three_level)
    return mcf_steady(params, n_max=n_max, model=model)


def bidirectional_dark_state(alpha0: complex, delta_a: float, params: ModelParams) -> np.ndarray:
    """
    (i delta_a |00> + sqrt(2 kappa gamma) alpha0 |S>) / norm.

    Raises:
        ParameterError: If delta_a = alpha0 = 0
    """
    ket = 1j * delta_a * KET_00 + math.sqrt(2 * params.kappa * params.gamma) * alpha0 * KET_S
    norm = np.linalg.norm(ket)
    if norm == 0:
        raise ParameterError("dark state undefined for delta_a = 0 and alpha0 = 0")
    return ket / norm


def bidirectional_average_populations(delta_a: float, params: ModelParams) -> np.ndarray:
    """
    Dark-state populations averaged over a thermal amplitude.

    |alpha0|^2 is exponential with mean n_th/2 and the phase is uniform, so
    coherences vanish and rho_S = <2 kappa gamma u / (delta_a^2 + 2 kappa gamma u)>.

    Returns:
        (rho_00, rho_T, rho_S, rho_11)
    """
    coupling = 2 * params.kappa * params.gamma
    mean = params.n_th / 2
    if mean == 0:
        return np.array([1.0, 0.0, 0.0, 0.0])
    if delta_a == 0:
        return np.array([0.0, 0.0, 1.0, 0.0])

    def ground_weight(t):
        return math.exp(-t) * delta_a ** 2 / (delta_a ** 2 + coupling * mean * t)

    ground, _ = scipy.integrate.quad(ground_weight, 0.0, np.inf, epsabs=1e-13, epsrel=1e-12)
    return np.array([ground, 0.0, 1.0 - ground, 0.0])
