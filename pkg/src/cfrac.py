"""
Thermal Link - Continued Fraction Module

Steady states at arbitrary occupation from the Laguerre-mode hierarchy of the
operator-valued P-function: the full matrix continued fraction, its depth-0
(Bourret) closure, the three-level scalar reduction and its closed forms.
"""
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.optimize

from src.analytic import scaled_exp1, upsilon
from src.exceptions import ConvergenceError, ParameterError, SingularBlockError
from src.operators import KET_00, KET_11, KET_S, KET_T, PhaseSpaceModel, build_phase_space_model, unvec
from src.params import ModelParams
from src.solvers import QubitState, TripletSingletView, bordered_solve

logger = logging.getLogger(__name__)

CONVERGENCE_TOLERANCE = 1e-8
CONVERGENCE_STEP = 8
N_MAX_CEILING = 10000
SCALAR_TOLERANCE = 1e-12
SCALAR_START_DEPTH = 64
SCALAR_DEPTH_CEILING = 1 << 23
TINY_DENOMINATOR = 1e-300


@dataclass
class ModeCoefficients:
    """
    Blocks sigma^n = (mu^{n,0}, mu^{n,1}, mu^{n,-1}) for n = 0..n_max.

    `blocks[n]` has shape (3, d, d).
    """
    n_max: int
    blocks: List[np.ndarray]

    def norms(self) -> np.ndarray:
        return np.array([np.max(np.abs(block)) for block in self.blocks])

    def tail_ratio(self) -> float:
        """max|sigma^n_max| / max|sigma^0|"""
        norms = self.norms()
        return float(norms[-1] / norms[0])


@dataclass
class CfracSolution:
    """
    Reduced qubit state mu^{0,0} from the mode hierarchy.
    """
    state: QubitState
    n_max: int
    converged: bool
    populations: TripletSingletView
    concurrence: float
    shift: float = 0.0
    provenance: str = 'unidirectional'
    modes: Optional[ModeCoefficients] = None

    def to_dict(self) -> dict:
        record = self.populations.to_dict()
        record.update({
            'concurrence': self.concurrence,
            'n_max': self.n_max,
            'converged': self.converged,
            'shift': self.shift,
            'provenance': self.provenance,
        })
        return record


def _solution_from_block(mu: np.ndarray, n_max: int, converged: bool, shift: float,
                         provenance: str, modes: Optional[ModeCoefficients] = None) -> CfracSolution:
    mu = 0.5 * (mu + mu.conj().T)
    mu = mu / np.trace(mu).real
    state = QubitState(mu)
    return CfracSolution(
        state=state,
        n_max=n_max,
        converged=converged,
        populations=state.triplet_singlet(),
        concurrence=state.concurrence(),
        shift=shift,
        provenance=provenance,
        modes=modes,
    )


class ModeHierarchy:
    """
    Three-term block recurrence A_n sigma^n + B_n sigma^{n-1} + C_n sigma^{n+1} = 0.

    The m = +-2 modes are eliminated through the resolvents
    R_n(x) = [kappa(2n + x) - L_q]^{-1}, which leaves 3 d^2 square blocks.
    """

    def __init__(self, model: PhaseSpaceModel):
        if model.kappa <= 0:
            raise ParameterError("the mode hierarchy needs kappa > 0")
        self.model = model
        self.kappa = model.kappa
        self.nu = model.mean_intensity
        self.liouvillian = model.qubit_liouvillian.entries
        self.plus, self.minus = model.drive_superoperators()
        self.size = self.liouvillian.shape[0]
        self.identity = np.eye(self.size, dtype=complex)
        self.zero = np.zeros((self.size, self.size), dtype=complex)

    def resolvent(self, n: int, shift: int) -> np.ndarray:
        shifted = self.kappa * (2 * n + shift) * self.identity - self.liouvillian
        return scipy.linalg.inv(shifted)

    def _s(self, k: float) -> float:
        return math.sqrt(self.nu * k)

    def eliminated(self, n: int, shift: int) -> Tuple[np.ndarray, np.ndarray]:
        if self.nu == 0.0 or (shift == 0 and n == 0):
            return self.zero, self.zero
        resolvent = self.resolvent(n, shift)
        return (self.nu * self.plus @ resolvent @ self.minus,
                self.nu * self.minus @ resolvent @ self.plus)

    def blocks(self, n: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """A_n, B_n, C_n"""
        lq, lp, lm, z, eye = self.liouvillian, self.plus, self.minus, self.zero, self.identity
        p2p, p2m = self.eliminated(n, 2)
        p0p, p0m = self.eliminated(n, 0)
        s_up, s_here = self._s(n + 1), self._s(n)
        side = lq - self.kappa * (2 * n + 1) * eye
        up = math.sqrt((n + 1) * (n + 2))
        down = math.sqrt(n * (n + 1))

        a = np.block([
            [lq - 2 * n * self.kappa * eye, s_up * lp, s_up * lm],
            [s_up * lm, side + (n + 2) * p2p + n * p0p, z],
            [s_up * lp, z, side + (n + 2) * p2m + n * p0m],
        ])
        b = np.block([
            [z, -s_here * lp, -s_here * lm],
            [z, -down * p0p, z],
            [z, z, -down * p0m],
        ])
        c = np.block([
            [z, z, z],
            [-s_up * lm, -up * p2p, z],
            [-s_up * lp, z, -up * p2m],
        ])
        return a, b, c

    def _factor(self, matrix: np.ndarray, n: int):
        with warnings.catch_warnings():
            warnings.simplefilter('error', scipy.linalg.LinAlgWarning)
            try:
                return scipy.linalg.lu_factor(matrix)
            except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as exc:
                raise SingularBlockError(f"singular hierarchy block at n={n}: {exc}", depth=n) from exc

    def solve(self, n_max: int, keep_modes: bool = False) -> Tuple[np.ndarray, Optional[ModeCoefficients]]:
        """
        Backward recursion S_n = -(A_n + C_n S_{n+1})^{-1} B_n from S_{n_max+1} = 0.

        Returns:
            (sigma^0 reshaped to (3, d, d), optional mode coefficients)
        """
        ratio = None
        ratios = []
        worst_condition = 0.0
        track_condition = logger.isEnabledFor(logging.DEBUG)
        for n in range(n_max, 0, -1):
            a, b, c = self.blocks(n)
            matrix = a if ratio is None else a + c @ ratio
            if track_condition:
                worst_condition = max(worst_condition, float(np.linalg.cond(matrix)))
            ratio = -scipy.linalg.lu_solve(self._factor(matrix, n), b)
            if keep_modes:
                ratios.append(ratio)

        # Zeroth mode closes the fraction; its qubit block carries the trace
        a0, _, c0 = self.blocks(0)
        matrix = a0 if ratio is None else a0 + c0 @ ratio
        dim = self.model.dim
        trace_positions = np.arange(dim) * (dim + 1)
        sigma = bordered_solve(matrix, trace_positions)
        if track_condition:
            logger.debug("hierarchy n_max=%d: worst block condition %.3e", n_max, worst_condition)

        modes = None
        if keep_modes:
            blocks = [sigma]
            for step in reversed(ratios):
                blocks.append(step @ blocks[-1])
            shaped = [np.stack([unvec(part, dim) for part in np.split(block, 3)]) for block in blocks]
            modes = ModeCoefficients(n_max=n_max, blocks=shaped)
        return np.stack([unvec(part, dim) for part in np.split(sigma, 3)]), modes


def default_n_max(n_th: float) -> int:
    """ceil(sqrt(n_th)) + 8, at least 4."""
    return max(4, math.ceil(math.sqrt(n_th)) + CONVERGENCE_STEP)


def _normalized_populations(mu: np.ndarray) -> np.ndarray:
    mu = 0.5 * (mu + mu.conj().T)
    mu = mu / np.trace(mu).real
    state = QubitState(mu, validate=False)
    return np.array([state.expectation(ket) for ket in (KET_00, KET_T, KET_S, KET_11)])


def mcf_steady(params: ModelParams, n_max: Optional[int] = None, three_level: bool = False,
               model: Optional[PhaseSpaceModel] = None, keep_modes: bool = False,
               tolerance: float = CONVERGENCE_TOLERANCE, n_max_ceiling: int = N_MAX_CEILING) -> CfracSolution:
    """
    Steady state from the matrix continued fraction of the mode hierarchy.

    Starting from n_max (default ceil(sqrt(n_th)) + 8) the truncation grows by
    half until sigma^0 populations move less than `tolerance` between n_max and
    n_max + 8.

    Args:
        params: Model parameters (kappa > 0)
        n_max: Initial truncation order (>= 4)
        three_level: Project out |11> before vectorization
        model: Phase-space model to use instead of the unidirectional one
        keep_modes: Store every sigma^n of the accepted truncation
        tolerance: Population shift accepted as converged
        n_max_ceiling: Largest truncation attempted

    Returns:
        CfracSolution

    Raises:
        ConvergenceError: If n_max_ceiling is reached
        SingularBlockError: If a block cannot be factorized
    """
    if model is None:
        model = build_phase_space_model(params, three_level=three_level)
    hierarchy = ModeHierarchy(model)
    order = default_n_max(params.n_th) if n_max is None else int(n_max)
    if order < 4:
        raise ParameterError(f"n_max must be >= 4, got {order}")

    while order <= n_max_ceiling:
        sigma, _ = hierarchy.solve(order)
        refined, modes = hierarchy.solve(order + CONVERGENCE_STEP, keep_modes)
        shift = float(np.max(np.abs(_normalized_populations(sigma[0]) - _normalized_populations(refined[0]))))
        logger.debug("n_max=%d: population shift %.3e", order, shift)
        if shift < tolerance:
            return _solution_from_block(refined[0], order + CONVERGENCE_STEP, True, shift,
                                        model.provenance, modes)
        order = math.ceil(1.5 * order)
    raise ConvergenceError(f"matrix continued fraction not converged below n_max={n_max_ceiling}")


def bourret_closure_steady(params: ModelParams, model: Optional[PhaseSpaceModel] = None) -> CfracSolution:
    """
    Depth-0 closure: only n = 0 and |m| <= 1 are kept.

    Solves L_q rho + nu L+ R L- rho + nu L- R L+ rho = 0 with
    R = [kappa - L_q]^{-1}, the Bourret steady state.
    """
    if model is None:
        model = build_phase_space_model(params)
    hierarchy = ModeHierarchy(model)
    resolvent = hierarchy.resolvent(0, 1)
    matrix = hierarchy.liouvillian + hierarchy.nu * (
        hierarchy.plus @ resolvent @ hierarchy.minus + hierarchy.minus @ resolvent @ hierarchy.plus
    )
    dim = model.dim
    rho = unvec(bordered_solve(matrix, np.arange(dim) * (dim + 1)), dim)
    return _solution_from_block(rho, 0, True, 0.0, model.provenance)


def scalar_cf_eval(a: Callable[[int], float], b: Callable[[int], float], c: Callable[[int], float],
                   y0: float, y1: float, depth: int) -> Tuple[float, float, float]:
    """
    X_0 of a_n X_n = b_n X_{n-1} + c_n X_{n+1} + Y_n with Y_n = 0 for n >= 2.

    Backward recursion D_n = a_n - c_n b_{n+1} / D_{n+1} with D_depth = a_depth,
    then F1 = 1/(a_0 - c_0 b_1/D_1), F2 = c_0/D_1 and X_0 = F1 (Y_0 + F2 Y_1).

    Returns:
        (X_0, F1, F2)

    Raises:
        SingularBlockError: If some |D_n| underflows
    """
    if depth < 1:
        raise ParameterError(f"depth must be >= 1, got {depth}")
    denominator = a(depth)
    for n in range(depth - 1, 0, -1):
        if abs(denominator) < TINY_DENOMINATOR:
            raise SingularBlockError(f"vanishing continued-fraction denominator at n={n + 1}", depth=n + 1)
        denominator = a(n) - c(n) * b(n + 1) / denominator
    if abs(denominator) < TINY_DENOMINATOR:
        raise SingularBlockError("vanishing continued-fraction denominator at n=1", depth=1)
    head = a(0) - c(0) * b(1) / denominator
    if abs(head) < TINY_DENOMINATOR:
        raise SingularBlockError("vanishing continued-fraction denominator at n=0", depth=0)
    f1 = 1.0 / head
    f2 = c(0) / denominator
    return f1 * (y0 + f2 * y1), f1, f2


def _recurrence(gamma_prime: float, x: float):
    return (lambda n: gamma_prime + x * (2 * n + 1),
            lambda n: x * n,
            lambda n: x * (n + 1))


def _converged_scalar_cf(gamma_prime: float, x: float, y0: float, y1: float,
                         depth: int = SCALAR_START_DEPTH) -> Tuple[float, float, float, int]:
    a, b, c = _recurrence(gamma_prime, x)
    previous = scalar_cf_eval(a, b, c, y0, y1, depth)
    while depth < SCALAR_DEPTH_CEILING:
        depth *= 2
        current = scalar_cf_eval(a, b, c, y0, y1, depth)
        change = max(abs(p - q) / max(abs(q), 1e-300) for p, q in zip(previous[1:], current[1:]))
        if change < SCALAR_TOLERANCE:
            return current + (depth,)
        previous = current
    raise ConvergenceError(f"scalar continued fraction not stable at depth {SCALAR_DEPTH_CEILING}")


def continued_fraction_factors(gamma_prime: float, x: float, depth: Optional[int] = None) -> Tuple[float, float]:
    """
    F1, F2 of the three-level recurrence evaluated numerically.

    With `depth` the recursion is cut there; otherwise the depth doubles until
    both factors are stable to 1e-12.
    """
    if gamma_prime <= 0 or x <= 0:
        raise ParameterError("gamma' and x must be > 0")
    if depth is not None:
        _, f1, f2 = scalar_cf_eval(*_recurrence(gamma_prime, x), 0.0, 0.0, depth)
        return f1, f2
    _, f1, f2, _ = _converged_scalar_cf(gamma_prime, x, 0.0, 0.0)
    return f1, f2


def closed_form_factors(gamma_prime: float, x: float) -> Tuple[float, float]:
    """
    F1 = e^w Gamma(0, w)/x and F2 = 1 + w - e^{-w}/Gamma(0, w), w = gamma'/x.
    """
    if gamma_prime <= 0 or x <= 0:
        raise ParameterError("gamma' and x must be > 0")
    w = gamma_prime / x
    scaled = scaled_exp1(w)
    return scaled / x, 1.0 + w - 1.0 / scaled


@dataclass(frozen=True)
class ThreeLevelResult:
    """
    Singlet and triplet populations of the |11>-free reduction.
    """
    rho_S: float
    rho_T: float
    concurrence: float
    depth: int = 0

    @property
    def rho_00(self) -> float:
        return 1.0 - self.rho_S - self.rho_T

    def populations(self) -> np.ndarray:
        return np.array([self.rho_00, self.rho_T, self.rho_S, 0.0])

    def to_dict(self) -> dict:
        return {'rho_00': self.rho_00, 'rho_T': self.rho_T, 'rho_S': self.rho_S, 'rho_11': 0.0,
                'concurrence': self.concurrence, 'depth': self.depth}


def _three_level_inputs(params: ModelParams) -> Tuple[float, float, float, float]:
    gamma = params.gamma
    if gamma <= 0 or params.kappa <= 0:
        raise ParameterError("three-level results need gamma > 0 and kappa > 0")
    phi, kappa = params.phi, params.kappa
    return gamma, kappa, phi, gamma ** 2 + 24 * kappa * phi


def three_level_cf_steady(params: ModelParams, n_max: int = SCALAR_START_DEPTH) -> ThreeLevelResult:
    """
    Singlet and triplet populations from the two scalar three-term recurrences.

    Both share a_n = gamma' + x(2n + 1), b_n = x n, c_n = x(n + 1) with
    gamma' = gamma^2 + 24 kappa Phi and x = 8 Phi gamma; they differ in the
    sources Y_0, Y_1. The depth starts at n_max and doubles until stable.
    """
    gamma, kappa, phi, gamma_prime = _three_level_inputs(params)
    if phi == 0:
        return ThreeLevelResult(rho_S=0.0, rho_T=0.0, concurrence=0.0)
    x = 8 * phi * gamma
    singlet_sources = (8 * phi * (gamma + kappa),
                       -8 * phi * (gamma + 3 * kappa + 48 * phi * kappa ** 2 / gamma ** 2))
    triplet_sources = (8 * phi * kappa, 192 * phi ** 2 * kappa ** 2 / gamma ** 2)
    rho_S, _, _, depth_s = _converged_scalar_cf(gamma_prime, x, *singlet_sources, depth=n_max)
    rho_T, _, _, depth_t = _converged_scalar_cf(gamma_prime, x, *triplet_sources, depth=n_max)
    logger.debug("three-level recurrences stable at depths %d, %d", depth_s, depth_t)
    return ThreeLevelResult(rho_S=rho_S, rho_T=rho_T, concurrence=max(0.0, rho_S - rho_T),
                            depth=max(depth_s, depth_t))


def effective_flux(params: ModelParams) -> float:
    """Phi_eff = Phi gamma^2 / (gamma^2 + 24 kappa Phi)"""
    gamma, _, phi, gamma_prime = _three_level_inputs(params)
    return phi * gamma ** 2 / gamma_prime


def closed_form_populations(params: ModelParams, order: str = 'refined') -> Tuple[float, float]:
    """
    (rho_S, rho_T) of the three-level reduction in closed form.

    order='lowest' gives rho_S = 1 - U(1 + 16 kappa Phi/gamma^2) and
    rho_T = (8 kappa Phi/gamma^2) U with U = Upsilon(Phi_eff/gamma);
    order='refined' replaces U by U(1 + 3 kappa/gamma) - 3 kappa/gamma.
    """
    gamma, kappa, phi, _ = _three_level_inputs(params)
    if phi == 0:
        return 0.0, 0.0
    weight = upsilon(effective_flux(params) / gamma)
    if order == 'refined':
        weight = weight * (1 + 3 * kappa / gamma) - 3 * kappa / gamma
    elif order != 'lowest':
        raise ParameterError(f"order must be 'lowest' or 'refined', got {order!r}")
    ratio = kappa * phi / gamma ** 2
    return 1.0 - weight * (1 + 16 * ratio), 8 * ratio * weight


def closed_form_concurrence(params: ModelParams) -> float:
    """C = 1 - Upsilon(Phi_eff/gamma)(1 + 24 kappa Phi/gamma^2), clipped at 0."""
    gamma, kappa, phi, _ = _three_level_inputs(params)
    if phi == 0:
        return 0.0
    weight = upsilon(effective_flux(params) / gamma)
    return max(0.0, 1.0 - weight * (1 + 24 * kappa * phi / gamma ** 2))


@dataclass(frozen=True)
class OptimalOccupation:
    n_star: float
    concurrence_star: float
    n_star_numeric: float
    concurrence_numeric: float

    def to_dict(self) -> dict:
        return {'n_star': self.n_star, 'concurrence_star': self.concurrence_star,
                'n_star_numeric': self.n_star_numeric, 'concurrence_numeric': self.concurrence_numeric}


def optimal_occupation(params: ModelParams, decades: float = 4.0) -> OptimalOccupation:
    """
    Occupation of maximal closed-form concurrence.

    The analytic estimate n* = gamma^2/(12 kappa^2) with C(n*) = 1 - 2 Upsilon(gamma/(48 kappa))
    is reported next to a bounded maximization of the closed form in log n_th.
    """
    gamma, kappa, _, _ = _three_level_inputs(params)
    n_star = gamma ** 2 / (12 * kappa ** 2)
    c_star = 1.0 - 2.0 * upsilon(gamma / (48 * kappa))

    def negative_concurrence(log_n):
        return -closed_form_concurrence(params.replace(n_th=float(math.exp(log_n))))

    center = math.log(n_star)
    width = decades * math.log(10)
    found = scipy.optimize.minimize_scalar(negative_concurrence, bounds=(center - width, center + width),
                                           method='bounded', options={'xatol': 1e-6})
    logger.debug("n* analytic %.4g, numeric %.4g", n_star, math.exp(found.x))
    return OptimalOccupation(n_star=n_star, concurrence_star=c_star,
                             n_star_numeric=float(math.exp(found.x)), concurrence_numeric=float(-found.fun))


def saturated_effective_flux(params: ModelParams) -> float:
    """Large-flux limit gamma^2/(24 kappa) of Phi_eff."""
    return params.gamma ** 2 / (24 * params.kappa)

