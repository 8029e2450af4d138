"""
Thermal Link - Solvers Module

Steady states, time evolution, reduced two-qubit states and concurrence.
"""
import logging
import warnings
from dataclasses import dataclass, asdict
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd
import scipy.linalg
from scipy.integrate import solve_ivp

from src.exceptions import (
    ConvergenceError,
    CutoffError,
    DegenerateSteadyStateError,
    DimensionMismatchError,
    InvalidStateError,
)
from src.operators import KET_00, KET_11, KET_S, KET_T, Superoperator, unvec, vec
from src.params import DEFAULT_TAIL_TOLERANCE

logger = logging.getLogger(__name__)

SPIN_FLIP = np.array([
    [0, 0, 0, -1],
    [0, 0, 1, 0],
    [0, 1, 0, 0],
    [-1, 0, 0, 0],
], dtype=complex)

RESIDUAL_TOLERANCE = 1e-8


@dataclass(frozen=True)
class TripletSingletView:
    """
    Populations and real coherences in the {|00>, |T>, |S>, |11>} basis.

    chi_ab = 2 Re <a|rho|b>.
    """
    rho_00: float
    rho_T: float
    rho_S: float
    rho_11: float
    chi_ST: float
    chi_0S: float
    chi_0T: float

    def populations(self) -> np.ndarray:
        return np.array([self.rho_00, self.rho_T, self.rho_S, self.rho_11])

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


class QubitState:
    """
    Two-qubit density matrix (qubit1 x qubit2, index 2*q1 + q2).

    A 3x3 matrix on {|00>, |01>, |10>} is embedded with an empty |11> level.
    """

    HERMITICITY_TOLERANCE = 1e-10
    TRACE_TOLERANCE = 1e-10
    NEGATIVITY_TOLERANCE = 1e-9

    def __init__(self, entries, validate: bool = True):
        entries = np.asarray(entries, dtype=complex)
        if entries.shape == (3, 3):
            padded = np.zeros((4, 4), dtype=complex)
            padded[:3, :3] = entries
            entries = padded
        if entries.shape != (4, 4):
            raise DimensionMismatchError(f"two-qubit state must be 4x4, got {entries.shape}")
        self.entries = entries
        if validate:
            self.validate()

    def validate(self) -> bool:
        """
        Returns:
            True if Hermitian, unit trace and positive within tolerance

        Raises:
            InvalidStateError: Otherwise
        """
        if not np.all(np.isfinite(self.entries)):
            raise InvalidStateError("state contains non-finite entries")
        defect = np.max(np.abs(self.entries - self.entries.conj().T))
        if defect > self.HERMITICITY_TOLERANCE:
            raise InvalidStateError(f"state is not Hermitian (defect {defect:.3e})")
        trace = np.trace(self.entries)
        if abs(trace - 1.0) > self.TRACE_TOLERANCE:
            raise InvalidStateError(f"state trace is {trace.real:.12f}, expected 1")
        smallest = self.eigenvalues().min()
        if smallest < -self.NEGATIVITY_TOLERANCE:
            raise InvalidStateError(f"state has negative eigenvalue {smallest:.3e}")
        return True

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.entries + self.entries.conj().T))

    def clipped(self) -> np.ndarray:
        """
        Hermitian part with eigenvalues in [-1e-9, 0) set to zero.
        """
        values, vectors = np.linalg.eigh(0.5 * (self.entries + self.entries.conj().T))
        if values.min() < -self.NEGATIVITY_TOLERANCE:
            raise InvalidStateError(f"state has negative eigenvalue {values.min():.3e}")
        if values.min() < 0:
            logger.debug("clipping eigenvalue %.3e", values.min())
        values = np.clip(values, 0.0, None)
        return (vectors * values) @ vectors.conj().T

    def populations(self) -> np.ndarray:
        """Computational-basis populations (00, 01, 10, 11)."""
        return np.real(np.diag(self.entries)).copy()

    def expectation(self, ket: np.ndarray) -> float:
        return float(np.real(ket.conj() @ self.entries @ ket))

    def fidelity(self, ket: np.ndarray) -> float:
        """<psi|rho|psi> for a normalized pure state."""
        return self.expectation(ket / np.linalg.norm(ket))

    def trace_distance(self, other: Union['QubitState', np.ndarray]) -> float:
        other_entries = other.entries if isinstance(other, QubitState) else np.asarray(other)
        difference = self.entries - other_entries
        return float(0.5 * np.sum(np.abs(np.linalg.eigvalsh(0.5 * (difference + difference.conj().T)))))

    def triplet_singlet(self) -> TripletSingletView:
        return triplet_singlet_transform(self)

    def concurrence(self) -> float:
        return concurrence(self)

    def __repr__(self) -> str:
        view = triplet_singlet_transform(self)
        return (f"QubitState(rho_00={view.rho_00:.6g}, rho_T={view.rho_T:.6g}, "
                f"rho_S={view.rho_S:.6g}, rho_11={view.rho_11:.6g})")


def triplet_singlet_transform(state: QubitState) -> TripletSingletView:
    """
    Express a two-qubit state in the triplet-singlet basis.

    Args:
        state: Valid two-qubit state

    Returns:
        TripletSingletView with populations and coherences

    Raises:
        InvalidStateError: If the state is not Hermitian or not unit trace
    """
    state.validate()
    rho = state.entries

    def element(bra, ket):
        return bra.conj() @ rho @ ket

    return TripletSingletView(
        rho_00=float(np.real(element(KET_00, KET_00))),
        rho_T=float(np.real(element(KET_T, KET_T))),
        rho_S=float(np.real(element(KET_S, KET_S))),
        rho_11=float(np.real(element(KET_11, KET_11))),
        chi_ST=float(2 * np.real(element(KET_S, KET_T))),
        chi_0S=float(2 * np.real(element(KET_00, KET_S))),
        chi_0T=float(2 * np.real(element(KET_00, KET_T))),
    )


def concurrence(state: Union[QubitState, np.ndarray]) -> float:
    """
    Two-qubit concurrence from the spin-flipped matrix.

    C = max(0, l1 - l2 - l3 - l4) with l_i the decreasing singular values of
    sqrt(rho) Y conj(sqrt(rho)), Y = sigma_y x sigma_y.

    Args:
        state: QubitState or 4x4 density matrix

    Returns:
        Concurrence in [0, 1]

    Raises:
        InvalidStateError: If the state is not a valid density matrix
    """
    if not isinstance(state, QubitState):
        state = QubitState(state)
    rho = state.clipped()
    values, vectors = np.linalg.eigh(rho)
    root = (vectors * np.sqrt(np.clip(values, 0.0, None))) @ vectors.conj().T
    singular = scipy.linalg.svdvals(root @ SPIN_FLIP @ root.conj())
    value = singular[0] - singular[1] - singular[2] - singular[3]
    return float(min(1.0, max(0.0, value)))


def partial_trace_cavity(rho_full: np.ndarray, fock_cutoff: int) -> QubitState:
    """
    Trace out the trailing cavity factor.

    Args:
        rho_full: Density matrix on qubit1 x qubit2 x cavity
        fock_cutoff: Number of cavity levels

    Returns:
        Reduced QubitState

    Raises:
        DimensionMismatchError: If the shape is not (4N, 4N)
    """
    rho_full = np.asarray(rho_full)
    size = 4 * fock_cutoff
    if rho_full.shape != (size, size):
        raise DimensionMismatchError(
            f"expected a {size}x{size} matrix for cutoff {fock_cutoff}, got {rho_full.shape}"
        )
    reshaped = rho_full.reshape(4, fock_cutoff, 4, fock_cutoff)
    return QubitState(np.einsum('injn->ij', reshaped))


def cavity_distribution(rho_full: np.ndarray, fock_cutoff: int) -> np.ndarray:
    """Photon-number distribution of the cavity marginal."""
    reshaped = np.asarray(rho_full).reshape(4, fock_cutoff, 4, fock_cutoff)
    return np.real(np.einsum('anan->n', reshaped))


def reduce_to_qubits(rho: np.ndarray, dims) -> QubitState:
    """Reduced qubit state for any layout produced by the operators module."""
    if dims is not None and len(dims) == 3:
        return partial_trace_cavity(rho, dims[2])
    return QubitState(rho)


@dataclass
class SteadyStateResult:
    """
    Stationary state of a Liouvillian with solver diagnostics.
    """
    rho: np.ndarray
    qubits: QubitState
    concurrence: float
    residual: float
    scale: float
    sector_size: int
    cutoff: Optional[int] = None
    cavity_occupation: Optional[float] = None
    tail: Optional[float] = None


def bordered_solve(matrix: np.ndarray, trace_positions: np.ndarray) -> np.ndarray:
    """
    Solve {M x = 0, sum_k x[trace_positions[k]] = 1} by replacing one row.
    """
    anchor = trace_positions[0]
    bordered = matrix.copy()
    bordered[anchor, :] = 0.0
    bordered[anchor, trace_positions] = 1.0
    rhs = np.zeros(matrix.shape[0], dtype=complex)
    rhs[anchor] = 1.0
    with warnings.catch_warnings():
        warnings.simplefilter('error', scipy.linalg.LinAlgWarning)
        try:
            return scipy.linalg.solve(bordered, rhs)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
            raise DegenerateSteadyStateError(
                f"stationary state is not unique (bordered system singular: {exc})"
            ) from exc


def steady_state(L: Superoperator, tail_tolerance: Optional[float] = DEFAULT_TAIL_TOLERANCE) -> SteadyStateResult:
    """
    Stationary state of a trace-preserving Liouvillian.

    The solve is restricted to the zero excitation-difference sector when the
    Liouvillian carries charges; one population equation is replaced by the
    trace condition.

    Args:
        L: Trace-preserving Liouvillian
        tail_tolerance: Post-hoc bound on cavity population above the cutoff,
            None to skip

    Returns:
        SteadyStateResult

    Raises:
        DegenerateSteadyStateError: If the null space is not one-dimensional
        ConvergenceError: If the residual exceeds 1e-8 relative to max|L|
        CutoffError: If the cavity tail check fails
    """
    indices = L.sector_indices()
    matrix = L.block(indices)
    scale = float(np.max(np.abs(matrix)))
    if scale == 0.0:
        raise DegenerateSteadyStateError("Liouvillian vanishes, every state is stationary")
    rows, cols = indices % L.dim, indices // L.dim
    trace_positions = np.flatnonzero(rows == cols)
    logger.debug("steady state: dim=%d, sector size=%d", L.dim, indices.size)

    solution = bordered_solve(matrix, trace_positions)
    residual = float(np.max(np.abs(matrix @ solution)))
    if residual > RESIDUAL_TOLERANCE * scale:
        raise ConvergenceError(f"steady-state residual {residual:.3e} exceeds {RESIDUAL_TOLERANCE:.0e} * {scale:.3e}")

    # Scatter the sector back and symmetrize
    flat = np.zeros(L.dim * L.dim, dtype=complex)
    flat[indices] = solution
    rho = unvec(flat, L.dim)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real

    result = SteadyStateResult(rho=rho, qubits=None, concurrence=0.0, residual=residual,
                               scale=scale, sector_size=int(indices.size))
    # Cavity tail check on full (qubit, qubit, cavity) states only
    if L.dims is not None and len(L.dims) == 3:
        levels = L.dims[2]
        distribution = cavity_distribution(rho, levels)
        occupation = float(np.arange(levels) @ distribution)
        tail = float(distribution[-1] * occupation)
        result.cutoff, result.cavity_occupation, result.tail = levels, occupation, tail
        if tail_tolerance is not None and tail > tail_tolerance:
            raise CutoffError(f"cavity population above cutoff {levels} estimated at {tail:.3e}")
    result.qubits = reduce_to_qubits(rho, L.dims)
    result.concurrence = concurrence(result.qubits)
    return result


def evolve(L: Superoperator, rho0: np.ndarray, t_grid, rtol: float = 1e-8, atol: float = 1e-10) -> np.ndarray:
    """
    Integrate d rho/dt = L rho with an adaptive Runge-Kutta pair.

    Args:
        L: Liouvillian
        rho0: Initial density matrix
        t_grid: Strictly increasing output times; the first is the start time
        rtol: Relative tolerance
        atol: Absolute tolerance

    Returns:
        Array of shape (len(t_grid), D, D)

    Raises:
        ConvergenceError: On step-size underflow or trace drift above 1e-8
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be a non-empty, strictly increasing 1-D sequence")
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (L.dim, L.dim):
        raise DimensionMismatchError(f"initial state must be {L.dim}x{L.dim}, got {rho0.shape}")
    if abs(np.trace(rho0) - 1.0) > QubitState.TRACE_TOLERANCE:
        raise InvalidStateError("initial state must have unit trace")
    if t_grid.size == 1:
        return rho0[None, :, :].copy()

    def rhs(_t, y):
        return vec(L.apply(unvec(y, L.dim)))

    solution = solve_ivp(rhs, (t_grid[0], t_grid[-1]), vec(rho0), method='RK45',
                         t_eval=t_grid, rtol=rtol, atol=atol)
    if solution.status < 0:
        raise ConvergenceError(f"time integration failed: {solution.message}")
    states = np.stack([unvec(solution.y[:, k], L.dim) for k in range(t_grid.size)])
    drift = np.max(np.abs(np.trace(states, axis1=1, axis2=2) - 1.0))
    if drift > 1e-8:
        raise ConvergenceError(f"trace drifted by {drift:.3e} during integration")
    return states


def evolve_observables(L: Superoperator, rho0: np.ndarray, t_grid) -> pd.DataFrame:
    """
    Time traces of triplet-singlet populations and concurrence.
    """
    states = evolve(L, rho0, t_grid)
    rows = []
    for t, rho in zip(np.asarray(t_grid, dtype=float), states):
        qubits = reduce_to_qubits(0.5 * (rho + rho.conj().T), L.dims)
        view = qubits.triplet_singlet()
        rows.append({'t': t, **view.to_dict(), 'concurrence': concurrence(qubits)})
    return pd.DataFrame(rows)
