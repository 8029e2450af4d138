"""
Thermal Link - Operators Module

Hilbert-space operators, column-stacked superoperators and the Liouvillians
of the cascaded thermal link.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.exceptions import CutoffError, DimensionMismatchError, ParameterError
from src.params import DEFAULT_TAIL_TOLERANCE, ModelParams

logger = logging.getLogger(__name__)

# Two-qubit index = 2*q1 + q2, qubit level 0 is the ground state.
KET_00 = np.array([1, 0, 0, 0], dtype=complex)
KET_01 = np.array([0, 1, 0, 0], dtype=complex)
KET_10 = np.array([0, 0, 1, 0], dtype=complex)
KET_11 = np.array([0, 0, 0, 1], dtype=complex)
KET_T = (KET_01 + KET_10) / np.sqrt(2)
KET_S = (KET_01 - KET_10) / np.sqrt(2)

THREE_LEVEL_PROJECTOR = np.eye(4)[:3]

Term = Tuple[Optional[np.ndarray], Optional[np.ndarray]]


def vec(rho: np.ndarray) -> np.ndarray:
    """Column-stack a square matrix."""
    return np.asarray(rho).reshape(-1, order='F')


def unvec(vector: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of vec."""
    return np.asarray(vector).reshape((dim, dim), order='F')


def destroy(levels: int) -> np.ndarray:
    """Truncated annihilation operator sum_n sqrt(n)|n-1><n|."""
    return np.diag(np.sqrt(np.arange(1, levels)), k=1).astype(complex)


def sigma_minus() -> np.ndarray:
    return np.array([[0, 1], [0, 0]], dtype=complex)


def sigma_z() -> np.ndarray:
    return np.diag([-1.0, 1.0]).astype(complex)


def embed(local: np.ndarray, site: int, dims: Sequence[int]) -> np.ndarray:
    """
    Place a local operator on one tensor factor, identity elsewhere.

    Args:
        local: Operator acting on factor `site`
        site: Factor index in tensor order qubit1, qubit2, cavity
        dims: Dimension of every factor

    Returns:
        Operator on the full product space
    """
    if local.shape != (dims[site], dims[site]):
        raise DimensionMismatchError(
            f"local operator of shape {local.shape} does not fit factor {site} of dims {tuple(dims)}"
        )
    result = np.ones((1, 1), dtype=complex)
    for index, dim in enumerate(dims):
        factor = local if index == site else np.eye(dim, dtype=complex)
        result = np.kron(result, factor)
    return result


def thermal_state(mean_occupation: float, levels: int) -> np.ndarray:
    """
    Truncated, renormalized thermal state with the given mean occupation.
    """
    if mean_occupation == 0:
        weights = np.zeros(levels)
        weights[0] = 1.0
    else:
        ratio = mean_occupation / (mean_occupation + 1.0)
        weights = ratio ** np.arange(levels)
    return np.diag(weights / weights.sum()).astype(complex)


def thermal_tail(mean_occupation: float, levels: int) -> float:
    """Thermal population above a cutoff of `levels` states."""
    if mean_occupation == 0:
        return 0.0
    return (mean_occupation / (mean_occupation + 1.0)) ** levels


class Operator:
    """
    Dense square operator with an optional, verified Hermiticity flag.
    """

    HERMITICITY_TOLERANCE = 1e-12

    def __init__(self, entries, hermitian: bool = False, tolerance: float = HERMITICITY_TOLERANCE):
        entries = np.asarray(entries, dtype=complex)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionMismatchError(f"operator must be square, got shape {entries.shape}")
        self.entries = entries
        self.hermitian = hermitian
        if hermitian and not self.is_hermitian(tolerance):
            raise ParameterError(
                f"operator flagged Hermitian deviates by {self.hermiticity_defect():.3e}"
            )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dag(self) -> 'Operator':
        return Operator(self.entries.conj().T, hermitian=self.hermitian)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.conj().T)))

    def is_hermitian(self, tolerance: float = HERMITICITY_TOLERANCE) -> bool:
        return self.hermiticity_defect() <= tolerance

    def __matmul__(self, other: 'Operator') -> 'Operator':
        return Operator(self.entries @ other.entries)

    def __add__(self, other: 'Operator') -> 'Operator':
        return Operator(self.entries + other.entries, hermitian=self.hermitian and other.hermitian)

    def __sub__(self, other: 'Operator') -> 'Operator':
        return Operator(self.entries - other.entries, hermitian=self.hermitian and other.hermitian)

    def __mul__(self, scalar: complex) -> 'Operator':
        return Operator(scalar * self.entries, hermitian=self.hermitian and np.isreal(scalar))

    __rmul__ = __mul__

    def __neg__(self) -> 'Operator':
        return Operator(-self.entries, hermitian=self.hermitian)

    def __repr__(self) -> str:
        return f"Operator(dim={self.dim}, hermitian={self.hermitian})"


class Superoperator:
    """
    Linear map on density matrices stored as a sum of sandwiches rho -> A rho B.

    A missing factor (None) stands for the identity. The dense column-stacked
    matrix sum_k kron(B_k^T, A_k) is only formed on request, either fully
    (`entries`) or restricted to a subset of Liouville indices (`block`).
    """

    def __init__(self, dim: int, terms: Iterable[Term] = (), charges: Optional[np.ndarray] = None,
                 dims: Optional[Tuple[int, ...]] = None):
        self.dim = int(dim)
        self.terms: Tuple[Term, ...] = tuple(terms)
        for left, right in self.terms:
            for factor in (left, right):
                if factor is not None and factor.shape != (self.dim, self.dim):
                    raise DimensionMismatchError(
                        f"term factor of shape {factor.shape} does not match dimension {self.dim}"
                    )
        self.charges = None if charges is None else np.asarray(charges)
        self.dims = dims

    @classmethod
    def zero(cls, dim: int, **kwargs) -> 'Superoperator':
        return cls(dim, (), **kwargs)

    @classmethod
    def hamiltonian(cls, hamiltonian: np.ndarray, **kwargs) -> 'Superoperator':
        """-i[H, rho]"""
        return cls(hamiltonian.shape[0], [(-1j * hamiltonian, None), (None, 1j * hamiltonian)], **kwargs)

    @classmethod
    def dissipator(cls, jump: np.ndarray, rate: float = 1.0, **kwargs) -> 'Superoperator':
        """rate * (A rho A^+ - {A^+ A, rho}/2)"""
        return cls.cross_dissipator(jump, jump, rate, **kwargs)

    @classmethod
    def cross_dissipator(cls, first: np.ndarray, second: np.ndarray, rate: float = 1.0,
                         **kwargs) -> 'Superoperator':
        """rate * (c_j rho c_l^+ - {c_l^+ c_j, rho}/2)"""
        product = second.conj().T @ first
        terms = [(rate * first, second.conj().T), (-0.5 * rate * product, None), (None, -0.5 * rate * product)]
        return cls(first.shape[0], terms, **kwargs)

    @classmethod
    def cascade(cls, source: np.ndarray, target: np.ndarray, rate: float, **kwargs) -> 'Superoperator':
        """
        Unidirectional coupling rate * ([c_s rho, c_t^+] + [c_t, rho c_s^+]).
        """
        terms = [
            (rate * source, target.conj().T),
            (-rate * (target.conj().T @ source), None),
            (rate * target, source.conj().T),
            (None, -rate * (source.conj().T @ target)),
        ]
        return cls(source.shape[0], terms, **kwargs)

    def _merge_metadata(self, other: 'Superoperator'):
        if other.dim != self.dim:
            raise DimensionMismatchError(f"cannot combine dimensions {self.dim} and {other.dim}")
        charges = self.charges if self.charges is not None else other.charges
        if self.charges is not None and other.charges is not None and not np.array_equal(self.charges, other.charges):
            charges = None
        return charges, self.dims or other.dims

    def __add__(self, other: 'Superoperator') -> 'Superoperator':
        charges, dims = self._merge_metadata(other)
        return Superoperator(self.dim, self.terms + other.terms, charges=charges, dims=dims)

    def __mul__(self, scalar: complex) -> 'Superoperator':
        scaled = []
        for left, right in self.terms:
            if left is not None:
                scaled.append((scalar * left, right))
            elif right is not None:
                scaled.append((None, scalar * right))
            else:
                scaled.append((scalar * np.eye(self.dim, dtype=complex), None))
        return Superoperator(self.dim, scaled, charges=self.charges, dims=self.dims)

    __rmul__ = __mul__

    def with_layout(self, charges: Optional[np.ndarray], dims: Optional[Tuple[int, ...]]) -> 'Superoperator':
        return Superoperator(self.dim, self.terms, charges=charges, dims=dims)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """
        Evaluate the map on a D x D matrix.
        """
        rho = np.asarray(rho)
        if rho.shape != (self.dim, self.dim):
            raise DimensionMismatchError(f"expected a {self.dim}x{self.dim} matrix, got {rho.shape}")
        result = np.zeros((self.dim, self.dim), dtype=complex)
        for left, right in self.terms:
            product = rho if left is None else left @ rho
            result += product if right is None else product @ right
        return result

    def _factor(self, factor: Optional[np.ndarray], transpose: bool) -> np.ndarray:
        if factor is None:
            return np.eye(self.dim, dtype=complex)
        return factor.T if transpose else factor

    @cached_property
    def entries(self) -> np.ndarray:
        """Dense D^2 x D^2 matrix acting on vec(rho)."""
        size = self.dim * self.dim
        matrix = np.zeros((size, size), dtype=complex)
        for left, right in self.terms:
            matrix += np.kron(self._factor(right, True), self._factor(left, False))
        return matrix

    def block(self, indices: np.ndarray) -> np.ndarray:
        """
        Restriction of `entries` to the rows and columns in `indices`.

        Uses kron(X, Y)[k, l] = X[k // D, l // D] * Y[k % D, l % D] so that the
        full matrix is never formed.
        """
        indices = np.asarray(indices)
        rows, cols = indices % self.dim, indices // self.dim
        row_grid = np.ix_(rows, rows)
        col_grid = np.ix_(cols, cols)
        same_row = rows[:, None] == rows[None, :]
        same_col = cols[:, None] == cols[None, :]
        result = np.zeros((indices.size, indices.size), dtype=complex)
        for left, right in self.terms:
            right_part = same_col if right is None else right.T[col_grid]
            left_part = same_row if left is None else left[row_grid]
            result += right_part * left_part
        return result

    def sector_indices(self) -> np.ndarray:
        """
        Liouville indices of operators |i><j| with equal excitation charge.

        Every Liouvillian built here conserves the ket-bra excitation
        difference, so stationary states live in this sector. Without charges
        the whole space is returned.
        """
        size = self.dim * self.dim
        if self.charges is None:
            return np.arange(size)
        flat = np.arange(size)
        rows, cols = flat % self.dim, flat // self.dim
        return flat[self.charges[rows] == self.charges[cols]]

    def trace_defect(self, rho: np.ndarray) -> float:
        """|Tr(L rho)| / ||rho||"""
        norm = np.linalg.norm(rho)
        return float(abs(np.trace(self.apply(rho))) / (norm if norm > 0 else 1.0))

    def hermiticity_defect(self, rho: np.ndarray) -> float:
        """max |L(rho)^+ - L(rho^+)|"""
        return float(np.max(np.abs(self.apply(rho).conj().T - self.apply(rho.conj().T))))

    def __repr__(self) -> str:
        return f"Superoperator(dim={self.dim}, terms={len(self.terms)}, dims={self.dims})"


@dataclass(frozen=True)
class LocalOperators:
    """
    Jump and level operators of the network on one Hilbert space.

    `cavity` is None on the qubit-only space.
    """
    sm1: Operator
    sm2: Operator
    sz1: Operator
    sz2: Operator
    cavity: Optional[Operator]
    charges: np.ndarray
    dims: Optional[Tuple[int, ...]]

    @property
    def dim(self) -> int:
        return self.sm1.dim

    @property
    def collective_lowering(self) -> np.ndarray:
        """S- = sigma1- + sigma2-"""
        return self.sm1.entries + self.sm2.entries

    @property
    def collective_z(self) -> np.ndarray:
        """S^z = sigma1^z + sigma2^z"""
        return self.sz1.entries + self.sz2.entries

    def layout(self) -> dict:
        return {'charges': self.charges, 'dims': self.dims}


def local_operators(fock_cutoff: Optional[int] = None, three_level: bool = False) -> LocalOperators:
    """
    Build sigma_i^-, sigma_i^z and (optionally) the cavity annihilator.

    Args:
        fock_cutoff: Number of cavity levels; None for the qubit-only space
        three_level: Project the qubit-only space onto {|00>, |01>, |10>}

    Returns:
        LocalOperators on qubit1 x qubit2 (x cavity)
    """
    if fock_cutoff is None:
        dims = (2, 2)
        charges = np.array([0, 1, 1, 2])
        sm1, sm2 = embed(sigma_minus(), 0, dims), embed(sigma_minus(), 1, dims)
        sz1, sz2 = embed(sigma_z(), 0, dims), embed(sigma_z(), 1, dims)
        if three_level:
            project = lambda op: THREE_LEVEL_PROJECTOR @ op @ THREE_LEVEL_PROJECTOR.T
            sm1, sm2, sz1, sz2 = (project(op) for op in (sm1, sm2, sz1, sz2))
            return LocalOperators(Operator(sm1), Operator(sm2), Operator(sz1, hermitian=True),
                                  Operator(sz2, hermitian=True), None, charges[:3], None)
        return LocalOperators(Operator(sm1), Operator(sm2), Operator(sz1, hermitian=True),
                              Operator(sz2, hermitian=True), None, charges, dims)
    if three_level:
        raise ParameterError("three-level projection is defined on the qubit-only space")
    dims = (2, 2, int(fock_cutoff))
    q1, q2, n = np.meshgrid(np.arange(2), np.arange(2), np.arange(dims[2]), indexing='ij')
    charges = (q1 + q2 + n).reshape(-1)
    return LocalOperators(
        sm1=Operator(embed(sigma_minus(), 0, dims)),
        sm2=Operator(embed(sigma_minus(), 1, dims)),
        sz1=Operator(embed(sigma_z(), 0, dims), hermitian=True),
        sz2=Operator(embed(sigma_z(), 1, dims), hermitian=True),
        cavity=Operator(embed(destroy(dims[2]), 2, dims)),
        charges=charges,
        dims=dims,
    )


def loss_transmission(params: ModelParams, include_imperfections: bool = True) -> float:
    """Amplitude transmission sqrt(1 - p_loss) of the link into qubit 2."""
    if not include_imperfections:
        return 1.0
    return float(np.sqrt(1.0 - params.p_loss))


def cascaded_hamiltonian(ops: LocalOperators, gamma: float) -> np.ndarray:
    """H_casc = i(gamma/2)(sigma1+ sigma2- - sigma1- sigma2+)"""
    sm1, sm2 = ops.sm1.entries, ops.sm2.entries
    return 0.5j * gamma * (sm1.conj().T @ sm2 - sm1 @ sm2.conj().T)


def bare_qubit_hamiltonian(ops: LocalOperators, params: ModelParams) -> np.ndarray:
    """H_1 + H_2 with H_i = Delta_i sigma_i^z / 2"""
    return 0.5 * (params.delta1 * ops.sz1.entries + params.delta2 * ops.sz2.entries)


def qubit_local_liouvillian(ops: LocalOperators, params: ModelParams,
                            include_imperfections: bool = True) -> Superoperator:
    """
    L_1 + L_2: detuning, individual decay and pure dephasing of each qubit.
    """
    layout = ops.layout()
    liouvillian = Superoperator.hamiltonian(bare_qubit_hamiltonian(ops, params), **layout)
    liouvillian += Superoperator.dissipator(ops.sm1.entries, params.gamma1, **layout)
    liouvillian += Superoperator.dissipator(ops.sm2.entries, params.gamma2, **layout)
    if include_imperfections and params.gamma_phi > 0:
        liouvillian += dephasing_liouvillian(ops, params.gamma_phi)
    return liouvillian


def dephasing_liouvillian(ops: LocalOperators, gamma_phi: float) -> Superoperator:
    """(gamma_phi/2) sum_i D[sigma_i^z]"""
    layout = ops.layout()
    return (Superoperator.dissipator(ops.sz1.entries, gamma_phi / 2, **layout)
            + Superoperator.dissipator(ops.sz2.entries, gamma_phi / 2, **layout))


def thermal_liouvillian(ops: LocalOperators, params: ModelParams) -> Superoperator:
    """
    Hot reservoir plus waveguide out-coupling of the filter cavity:
    kappa(n+1)D[a] + kappa n D[a^+] + kappa D[a], stationary <a^+a> = n_th/2.
    """
    if ops.cavity is None:
        raise DimensionMismatchError("thermal Liouvillian needs a cavity factor")
    a = ops.cavity.entries
    layout = ops.layout()
    kappa, n_th = params.kappa, params.n_th
    liouvillian = Superoperator.dissipator(a, kappa * (n_th + 1), **layout)
    liouvillian += Superoperator.dissipator(a.conj().T, kappa * n_th, **layout)
    liouvillian += Superoperator.dissipator(a, kappa, **layout)
    return liouvillian


def check_cutoff(params: ModelParams, tail_tolerance: Optional[float]) -> int:
    params.check_exact_reach()
    levels = params.cutoff(tail_tolerance or DEFAULT_TAIL_TOLERANCE)
    if tail_tolerance is not None:
        tail = thermal_tail(params.n_th / 2, levels)
        if tail > tail_tolerance:
            raise CutoffError(
                f"Fock cutoff {levels} leaves thermal tail {tail:.3e} above tolerance {tail_tolerance:.1e}"
            )
    logger.debug("Fock cutoff %d for n_th=%g", levels, params.n_th)
    return levels


def build_full_liouvillian(params: ModelParams, tail_tolerance: Optional[float] = DEFAULT_TAIL_TOLERANCE,
                           include_imperfections: bool = True) -> Superoperator:
    """
    Cascaded master equation of source cavity and both qubits.

    L = L_th + L_1 + L_2 + L_casc on qubit1 x qubit2 x cavity, with optional
    dephasing and the loss-attenuated link into qubit 2.

    Args:
        params: Model parameters
        tail_tolerance: Allowed thermal population above the cutoff, None to skip the check
        include_imperfections: Apply gamma_phi and p_loss

    Returns:
        Superoperator carrying excitation charges for sector solves

    Raises:
        CutoffError: If the cutoff is too small or n_th exceeds exact reach
    """
    ops = local_operators(check_cutoff(params, tail_tolerance))
    layout = ops.layout()
    a, sm1, sm2 = ops.cavity.entries, ops.sm1.entries, ops.sm2.entries
    eta = loss_transmission(params, include_imperfections)

    liouvillian = thermal_liouvillian(ops, params)
    liouvillian += qubit_local_liouvillian(ops, params, include_imperfections)
    # Cavity -> each qubit, then qubit 1 -> qubit 2
    liouvillian += Superoperator.cascade(a, sm1, np.sqrt(params.kappa * params.gamma1), **layout)
    liouvillian += Superoperator.cascade(a, sm2, eta * np.sqrt(params.kappa * params.gamma2), **layout)
    liouvillian += Superoperator.cascade(sm1, sm2, eta * np.sqrt(params.gamma1 * params.gamma2), **layout)
    return liouvillian


def build_regrouped_liouvillian(params: ModelParams, tail_tolerance: Optional[float] = DEFAULT_TAIL_TOLERANCE,
                                include_imperfections: bool = True) -> Superoperator:
    """
    Triplet-singlet form L_th + L_q + L_drive of the cascaded equation.

    L_q = -i[H_1 + H_2 + H_casc, .] + gamma D[S-] and
    L_drive = sqrt(kappa gamma)([a rho, S+] + [S-, rho a^+]). Loss enters as
    a correction to the qubit-2 links so the result equals the full builder.

    Raises:
        AsymmetricCouplingError: If gamma1 != gamma2
    """
    gamma = params.gamma
    ops = local_operators(check_cutoff(params, tail_tolerance))
    layout = ops.layout()
    a, sm1, sm2 = ops.cavity.entries, ops.sm1.entries, ops.sm2.entries
    collective = ops.collective_lowering

    hamiltonian = bare_qubit_hamiltonian(ops, params) + cascaded_hamiltonian(ops, gamma)
    liouvillian = thermal_liouvillian(ops, params)
    liouvillian += Superoperator.hamiltonian(hamiltonian, **layout)
    liouvillian += Superoperator.dissipator(collective, gamma, **layout)
    if include_imperfections and params.gamma_phi > 0:
        liouvillian += dephasing_liouvillian(ops, params.gamma_phi)
    liouvillian += Superoperator.cascade(a, collective, np.sqrt(params.kappa * gamma), **layout)

    eta = loss_transmission(params, include_imperfections)
    if eta != 1.0:
        liouvillian += Superoperator.cascade(a, sm2, (eta - 1.0) * np.sqrt(params.kappa * gamma), **layout)
        liouvillian += Superoperator.cascade(sm1, sm2, (eta - 1.0) * gamma, **layout)
    return liouvillian


def build_markov_liouvillian(params: ModelParams) -> Superoperator:
    """
    Qubit-only Markov limit -i[H_q, .] + gamma(n+1)D[S-] + gamma n D[S+].

    Raises:
        AsymmetricCouplingError: If gamma1 != gamma2
    """
    gamma = params.gamma
    ops = local_operators()
    layout = ops.layout()
    collective = ops.collective_lowering
    hamiltonian = bare_qubit_hamiltonian(ops, params) + cascaded_hamiltonian(ops, gamma)
    liouvillian = Superoperator.hamiltonian(hamiltonian, **layout)
    liouvillian += Superoperator.dissipator(collective, gamma * (params.n_th + 1), **layout)
    liouvillian += Superoperator.dissipator(collective.conj().T, gamma * params.n_th, **layout)
    if params.gamma_phi > 0:
        liouvillian += dephasing_liouvillian(ops, params.gamma_phi)
    return liouvillian


def build_qubit_liouvillian(params: ModelParams, three_level: bool = False,
                            include_imperfections: bool = True) -> Superoperator:
    """
    Qubit part L_q of the cascaded equation for arbitrary gamma_i.

    Sum of the local terms and the qubit1 -> qubit2 cascade; for symmetric,
    lossless parameters this equals -i[H_q, .] + gamma D[S-].
    """
    ops = local_operators(three_level=three_level)
    eta = loss_transmission(params, include_imperfections)
    liouvillian = qubit_local_liouvillian(ops, params, include_imperfections)
    liouvillian += Superoperator.cascade(ops.sm1.entries, ops.sm2.entries,
                                         eta * np.sqrt(params.gamma1 * params.gamma2), **ops.layout())
    return liouvillian


@dataclass(frozen=True)
class PhaseSpaceModel:
    """
    Qubit Liouvillian and linear drive of the P-function representation.

    For a classical amplitude alpha the qubits see H_d = alpha V+ + alpha* V-,
    so -i[H_d, mu] = alpha L+ mu + alpha* L- mu.
    """
    qubit_liouvillian: Superoperator
    v_minus: np.ndarray
    kappa: float
    n_th: float
    decay_scale: float
    provenance: str = 'unidirectional'

    @property
    def dim(self) -> int:
        return self.qubit_liouvillian.dim

    @property
    def v_plus(self) -> np.ndarray:
        return self.v_minus.conj().T

    @property
    def mean_intensity(self) -> float:
        """<|alpha|^2> = n_th/2"""
        return self.n_th / 2

    @property
    def drive_strength(self) -> float:
        """Largest drive matrix element per unit |alpha|."""
        return float(np.max(np.abs(self.v_minus)))

    def drive_hamiltonian(self, alpha: complex) -> np.ndarray:
        return alpha * self.v_plus + np.conj(alpha) * self.v_minus

    def conditional_liouvillian(self, alpha: complex) -> Superoperator:
        """
        Qubit Liouvillian for a fixed classical amplitude.

        The drive does not conserve excitations, so the result carries no charges.
        """
        drive = Superoperator.hamiltonian(self.drive_hamiltonian(alpha))
        return (self.qubit_liouvillian + drive).with_layout(None, self.qubit_liouvillian.dims)

    def drive_superoperators(self) -> Tuple[np.ndarray, np.ndarray]:
        """Dense L+ and L- (coefficients of alpha and alpha*)."""
        plus = Superoperator.hamiltonian(self.v_plus).entries
        minus = Superoperator.hamiltonian(self.v_minus).entries
        return plus, minus


def build_phase_space_model(params: ModelParams, three_level: bool = False,
                            include_imperfections: bool = True) -> PhaseSpaceModel:
    """
    Unidirectional phase-space model: L_q and V- = i sqrt(kappa) J-.

    J- = sqrt(gamma1) sigma1- + eta sqrt(gamma2) sigma2- with the loss
    transmission eta, so L+ mu = sqrt(kappa)[mu, J+] and
    L- mu = -sqrt(kappa)[mu, J-].
    """
    if params.kappa <= 0:
        raise ParameterError("phase-space routes need kappa > 0")
    ops = local_operators(three_level=three_level)
    eta = loss_transmission(params, include_imperfections)
    lowering = np.sqrt(params.gamma1) * ops.sm1.entries + eta * np.sqrt(params.gamma2) * ops.sm2.entries
    return PhaseSpaceModel(
        qubit_liouvillian=build_qubit_liouvillian(params, three_level, include_imperfections),
        v_minus=1j * np.sqrt(params.kappa) * lowering,
        kappa=params.kappa,
        n_th=params.n_th,
        decay_scale=max(params.gamma1, params.gamma2),
    )


def random_density_matrices(dim: int, count: int, rng: np.random.Generator) -> List[np.ndarray]:
    """Random full-rank density matrices for property checks."""
    matrices = []
    for _ in range(count):
        g = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        rho = g @ g.conj().T
        matrices.append(rho / np.trace(rho))
    return matrices


def build_conditional_liouvillian(model: PhaseSpaceModel, alpha: complex) -> Superoperator:
    """L_q - i[alpha V+ + alpha* V-, .] for a frozen amplitude."""
    return model.conditional_liouvillian(alpha)


def drive_superoperators(model: PhaseSpaceModel) -> Tuple[np.ndarray, np.ndarray]:
    """(L+, L-) of a phase-space model."""
    return model.drive_superoperators()
