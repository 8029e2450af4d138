"""
Thermal Link - Stochastic Module

Exact Ornstein-Uhlenbeck paths of the filtered thermal amplitude, conditional
qubit propagation, seeded ensemble averages and the phase-diffusion model.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.exceptions import ParameterError, StepSizeError
from src.operators import (
    KET_00,
    KET_11,
    KET_S,
    KET_T,
    PhaseSpaceModel,
    Superoperator,
    build_phase_space_model,
    local_operators,
    unvec,
    vec,
)
from src.params import ModelParams
from src.solvers import QubitState, SteadyStateResult, concurrence, evolve, steady_state

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 256
MIN_TRAJECTORIES = 100
STEP_SAFETY = 0.05
AMPLITUDE_MARGIN = 20.0
OBSERVABLES = ('rho_00', 'rho_T', 'rho_S', 'rho_11', 'p1')


def trajectory_rng(master_seed: int, index: int) -> np.random.Generator:
    """
    Counter-based generator for one trajectory.

    Philox keyed by (master_seed, index), so every trajectory draws the same
    numbers whichever worker runs it.
    """
    if master_seed < 0 or index < 0:
        raise ParameterError("seeds and trajectory indices must be >= 0")
    key = np.array([master_seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass
class OUPath:
    """
    Complex amplitude alpha(t_k) of one trajectory.
    """
    seed: int
    index: int
    t_grid: np.ndarray
    alpha: np.ndarray

    @property
    def max_amplitude(self) -> float:
        return float(np.max(np.abs(self.alpha))) if self.alpha.size else 0.0

    @classmethod
    def constant(cls, alpha: complex, t_grid) -> 'OUPath':
        """Frozen amplitude, for quasistatic references."""
        t_grid = np.asarray(t_grid, dtype=float)
        return cls(seed=0, index=0, t_grid=t_grid, alpha=np.full(t_grid.size, alpha, dtype=complex))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'t': self.t_grid, 'alpha_re': self.alpha.real, 'alpha_im': self.alpha.imag})


def _check_grid(t_grid) -> np.ndarray:
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size == 0 or np.any(np.diff(t_grid) <= 0):
        raise ParameterError("t_grid must be a non-empty, strictly increasing 1-D sequence")
    return t_grid


def _ou_path(kappa: float, mean_intensity: float, t_grid: np.ndarray, master_seed: int, index: int) -> np.ndarray:
    rng = trajectory_rng(master_seed, index)
    noise = rng.standard_normal((t_grid.size, 2))
    decay = np.exp(-kappa * np.diff(t_grid))
    spread = np.sqrt(0.5 * mean_intensity * (1.0 - decay ** 2))
    alpha = np.empty(t_grid.size, dtype=complex)
    alpha[0] = math.sqrt(0.5 * mean_intensity) * (noise[0, 0] + 1j * noise[0, 1])
    for k in range(1, t_grid.size):
        kick = spread[k - 1] * (noise[k, 0] + 1j * noise[k, 1])
        alpha[k] = alpha[k - 1] * decay[k - 1] + kick
    return alpha


def sample_ou_path(params: ModelParams, t_grid, seed: int, index: int = 0) -> OUPath:
    """
    Exact discretization of d alpha = -kappa alpha dt + sqrt(kappa n_th) dW.

    alpha(t + dt) = alpha(t) e^{-kappa dt} + xi with complex Gaussian xi,
    <|xi|^2> = (n_th/2)(1 - e^{-2 kappa dt}); alpha(t_0) is drawn from the
    stationary law with <|alpha|^2> = n_th/2.

    Args:
        params: Model parameters (kappa > 0)
        t_grid: Strictly increasing sample times
        seed: Master seed
        index: Trajectory index

    Returns:
        OUPath

    Raises:
        ParameterError: If kappa <= 0
    """
    if params.kappa <= 0:
        raise ParameterError("OU paths need kappa > 0")
    t_grid = _check_grid(t_grid)
    alpha = _ou_path(params.kappa, params.n_th / 2, t_grid, seed, index)
    return OUPath(seed=seed, index=index, t_grid=t_grid, alpha=alpha)


def sample_ou_paths(params: ModelParams, t_grid, master_seed: int, indices: Sequence[int]) -> np.ndarray:
    """Amplitudes of several trajectories, shape (len(indices), len(t_grid))."""
    if params.kappa <= 0:
        raise ParameterError("OU paths need kappa > 0")
    t_grid = _check_grid(t_grid)
    return np.stack([_ou_path(params.kappa, params.n_th / 2, t_grid, master_seed, int(i)) for i in indices])


def amplitude_bound(mean_intensity: float, samples: int) -> float:
    """|alpha| that a stationary path exceeds with probability ~e^-20 over `samples` draws."""
    if mean_intensity == 0:
        return 0.0
    return math.sqrt(mean_intensity * (math.log(max(samples, 1)) + AMPLITUDE_MARGIN))


def default_time_step(model: PhaseSpaceModel, horizon: float, n_traj: int) -> float:
    """
    min(0.02/gamma, 0.1/kappa, 0.05/(drive |alpha|_bound)).
    """
    step = min(0.02 / model.decay_scale, 0.1 / model.kappa)
    steps = max(1, math.ceil(horizon / step))
    bound = amplitude_bound(model.mean_intensity, n_traj * steps)
    if bound > 0 and model.drive_strength > 0:
        step = min(step, STEP_SAFETY / (model.drive_strength * bound))
    return step


def check_time_step(model: PhaseSpaceModel, dt: float, max_amplitude: float):
    """
    Raises:
        StepSizeError: If dt > 0.05 / max(gamma, drive |alpha|_max)
    """
    limit = STEP_SAFETY / max(model.decay_scale, model.drive_strength * max_amplitude)
    if dt > limit * (1 + 1e-12):
        raise StepSizeError(f"time step {dt:.4g} exceeds {limit:.4g} for |alpha|max={max_amplitude:.4g}")


def integration_grid(t_grid, dt: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Refine output times so that no step exceeds dt.

    Returns:
        (fine grid, positions of the output times in it)
    """
    t_grid = _check_grid(t_grid)
    pieces = [t_grid[:1]]
    positions = [0]
    for start, stop in zip(t_grid[:-1], t_grid[1:]):
        count = max(1, math.ceil((stop - start) / dt - 1e-9))
        pieces.append(np.linspace(start, stop, count + 1)[1:])
        positions.append(positions[-1] + count)
    return np.concatenate(pieces), np.array(positions)


def _observable_basis(dim: int) -> np.ndarray:
    kets = np.stack([KET_00, KET_T, KET_S, KET_11])[:, :dim]
    return kets


def _observables(states: np.ndarray, dim: int) -> np.ndarray:
    """Triplet-singlet populations and <sigma1+ sigma1-> of vectorized states (..., d^2)."""
    matrices = np.swapaxes(states.reshape(states.shape[:-1] + (dim, dim)), -1, -2)
    kets = _observable_basis(dim)
    populations = np.real(np.einsum('ki,...ij,kj->...k', kets.conj(), matrices, kets))
    diagonal = np.real(np.diagonal(matrices, axis1=-2, axis2=-1))
    excited = diagonal[..., 2:].sum(axis=-1)
    return np.concatenate([populations, excited[..., None]], axis=-1)


def _rk4_batch(model: PhaseSpaceModel, alphas: np.ndarray, fine_times: np.ndarray, rho0: np.ndarray,
               positions: np.ndarray) -> np.ndarray:
    """
    Fourth-order Runge-Kutta for a batch of conditional equations.

    Row-vector form mu' = mu (L0 + alpha L+ + alpha* L-)^T with alpha held at
    its value at the start of every step.

    Returns:
        Vectorized states at `positions`, shape (n, len(positions), d^2)
    """
    base = model.qubit_liouvillian.entries.T
    plus, minus = (matrix.T for matrix in model.drive_superoperators())
    count = alphas.shape[0]
    state = np.tile(vec(rho0), (count, 1))
    out = np.empty((count, positions.size, state.shape[1]), dtype=complex)
    recorded = 0
    if positions[0] == 0:
        out[:, 0] = state
        recorded = 1

    for k, step in enumerate(np.diff(fine_times)):
        a = alphas[:, k][:, None]
        b = np.conj(a)

        def derivative(mu):
            return mu @ base + a * (mu @ plus) + b * (mu @ minus)

        k1 = derivative(state)
        k2 = derivative(state + 0.5 * step * k1)
        k3 = derivative(state + 0.5 * step * k2)
        k4 = derivative(state + step * k3)
        state = state + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if recorded < positions.size and positions[recorded] == k + 1:
            out[:, recorded] = state
            recorded += 1
    return out


def propagate_conditional(path: OUPath, params: ModelParams, model: Optional[PhaseSpaceModel] = None,
                          rho0: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Integrate mu' = L_q mu - i[alpha(t) V+ + alpha*(t) V-, mu] along one path.

    alpha is held piecewise constant on the path's grid, which is also the
    integration grid.

    Args:
        path: Amplitude samples
        params: Model parameters
        model: Phase-space model, built from params when omitted
        rho0: Initial qubit state, |00><00| by default

    Returns:
        Array of shape (len(path.t_grid), d, d)

    Raises:
        StepSizeError: If a step exceeds 0.05/max(gamma, drive |alpha|max)
    """
    if model is None:
        model = build_phase_space_model(params)
    dim = model.dim
    rho0 = _initial_state(dim, rho0)
    steps = np.diff(path.t_grid)
    if steps.size:
        check_time_step(model, float(np.max(steps)), path.max_amplitude)
    positions = np.arange(path.t_grid.size)
    states = _rk4_batch(model, path.alpha[None, :], path.t_grid, rho0, positions)[0]
    return np.stack([unvec(row, dim) for row in states])


def _initial_state(dim: int, rho0: Optional[np.ndarray]) -> np.ndarray:
    if rho0 is None:
        rho0 = np.zeros((dim, dim), dtype=complex)
        rho0[0, 0] = 1.0
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (dim, dim):
        raise ParameterError(f"initial state must be {dim}x{dim}, got {rho0.shape}")
    return rho0


@dataclass
class ChunkResult:
    """Sums over one chunk of trajectories."""
    start: int
    count: int
    state_sum: np.ndarray
    observable_sum: np.ndarray
    observable_sq_sum: np.ndarray
    max_amplitude: float


def run_chunk(model: PhaseSpaceModel, fine_times: np.ndarray, positions: np.ndarray, master_seed: int,
              start: int, stop: int, rho0: np.ndarray) -> ChunkResult:
    """
    Propagate trajectories start..stop-1 and sum their outputs in index order.

    Runs inside pool workers; arguments must pickle.
    """
    alphas = np.stack([
        _ou_path(model.kappa, model.mean_intensity, fine_times, master_seed, index)
        for index in range(start, stop)
    ])
    max_amplitude = float(np.max(np.abs(alphas)))
    check_time_step(model, float(np.max(np.diff(fine_times))), max_amplitude)
    states = _rk4_batch(model, alphas, fine_times, rho0, positions)
    observables = _observables(states, model.dim)
    return ChunkResult(
        start=start,
        count=stop - start,
        state_sum=states.sum(axis=0),
        observable_sum=observables.sum(axis=0),
        observable_sq_sum=(observables ** 2).sum(axis=0),
        max_amplitude=max_amplitude,
    )


def _run_chunk_star(arguments):
    return run_chunk(*arguments)


@dataclass
class TrajectoryEnsemble:
    """
    Ensemble-averaged qubit state on the output grid with Monte-Carlo errors.

    `observables` and `standard_errors` have columns OBSERVABLES.
    """
    n_traj: int
    t_grid: np.ndarray
    states: np.ndarray
    observables: np.ndarray
    standard_errors: np.ndarray
    master_seed: int
    dt: float
    provenance: str = 'unidirectional'

    def state_at(self, k: int) -> QubitState:
        return QubitState(self.states[k])

    def final_state(self) -> QubitState:
        return self.state_at(len(self.t_grid) - 1)

    def populations(self) -> np.ndarray:
        """(rho_00, rho_T, rho_S, rho_11) per output time."""
        return self.observables[:, :4]

    def concurrences(self) -> np.ndarray:
        return np.array([concurrence(self.state_at(k)) for k in range(len(self.t_grid))])

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({'t': self.t_grid})
        for column, name in enumerate(OBSERVABLES):
            frame[name] = self.observables[:, column]
            frame[f'se_{name}'] = self.standard_errors[:, column]
        frame['concurrence'] = self.concurrences()
        return frame


def _chunks(n_traj: int, chunk_size: int) -> List[Tuple[int, int]]:
    return [(start, min(start + chunk_size, n_traj)) for start in range(0, n_traj, chunk_size)]


def ensemble_average(params: ModelParams, n_traj: int, t_grid, master_seed: int, dt: Optional[float] = None,
                     workers: int = 1, chunk_size: int = DEFAULT_CHUNK_SIZE,
                     model: Optional[PhaseSpaceModel] = None, rho0: Optional[np.ndarray] = None) -> TrajectoryEnsemble:
    """
    Average conditional qubit states over independent OU trajectories.

    Trajectories are split into fixed chunks of `chunk_size` indices and the
    chunk sums are reduced in chunk order, so the result does not depend on
    `workers`.

    Args:
        params: Model parameters (kappa > 0)
        n_traj: Number of trajectories (>= 100)
        t_grid: Output times; the first is the start time
        master_seed: Seed from which every trajectory key is derived
        dt: Integration step, default_time_step when omitted
        workers: Process count; 1 runs in-process
        chunk_size: Trajectories per work unit
        model: Phase-space model, built from params when omitted
        rho0: Initial qubit state, |00><00| by default

    Returns:
        TrajectoryEnsemble
    """
    if n_traj < MIN_TRAJECTORIES:
        raise ParameterError(f"n_traj must be >= {MIN_TRAJECTORIES}, got {n_traj}")
    if chunk_size < 1 or workers < 1:
        raise ParameterError("chunk_size and workers must be >= 1")
    if model is None:
        model = build_phase_space_model(params)
    if model.kappa <= 0:
        raise ParameterError("ensembles need kappa > 0")
    t_grid = _check_grid(t_grid)
    rho0 = _initial_state(model.dim, rho0)
    if dt is None:
        dt = default_time_step(model, float(t_grid[-1] - t_grid[0]), n_traj)
    fine_times, positions = integration_grid(t_grid, dt)
    logger.debug("ensemble: %d trajectories, dt=%.4g, %d steps", n_traj, dt, fine_times.size - 1)

    tasks = [(model, fine_times, positions, master_seed, start, stop, rho0)
             for start, stop in _chunks(n_traj, chunk_size)]
    if workers == 1 or len(tasks) == 1:
        results = [run_chunk(*task) for task in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_chunk_star, tasks))

    # Reduce in chunk order
    state_sum = np.zeros_like(results[0].state_sum)
    observable_sum = np.zeros_like(results[0].observable_sum)
    observable_sq_sum = np.zeros_like(results[0].observable_sq_sum)
    for result in sorted(results, key=lambda r: r.start):
        state_sum = state_sum + result.state_sum
        observable_sum = observable_sum + result.observable_sum
        observable_sq_sum = observable_sq_sum + result.observable_sq_sum

    # Monte-Carlo standard errors per output time
    mean = observable_sum / n_traj
    variance = np.clip((observable_sq_sum - n_traj * mean ** 2) / (n_traj - 1), 0.0, None)
    dim = model.dim
    states = np.stack([unvec(row, dim) for row in state_sum / n_traj])
    states = 0.5 * (states + np.conj(np.transpose(states, (0, 2, 1))))
    return TrajectoryEnsemble(
        n_traj=n_traj,
        t_grid=t_grid,
        states=states,
        observables=mean,
        standard_errors=np.sqrt(variance / n_traj),
        master_seed=master_seed,
        dt=dt,
        provenance=model.provenance,
    )


def single_qubit_params(params: ModelParams) -> ModelParams:
    """Switch off qubit 2 (gamma2 = 0)."""
    return params.replace(gamma2=0.0)


def coherent_drive_trace(params: ModelParams, t_grid) -> pd.DataFrame:
    """
    Qubit-1 excitation under a constant real amplitude sqrt(n_th/2).

    Single-qubit reference: the drive matrix element is sqrt(gamma Phi) and
    qubit 2 is decoupled.
    """
    model = build_phase_space_model(single_qubit_params(params))
    liouvillian = model.conditional_liouvillian(math.sqrt(params.n_th / 2))
    states = evolve(liouvillian, _initial_state(model.dim, None), t_grid)
    excited = np.real(states[:, 2, 2] + states[:, 3, 3])
    return pd.DataFrame({'t': np.asarray(t_grid, dtype=float), 'p1': excited})


def phase_diffusion_rate(params: ModelParams, r0: Optional[float] = None) -> float:
    """kappa n_th / (8 r0^2); kappa/4 at the default radius."""
    r0 = default_radius(params) if r0 is None else r0
    if r0 <= 0:
        raise ParameterError(f"drive radius must be > 0, got {r0}")
    return params.kappa * params.n_th / (8 * r0 ** 2)


def default_radius(params: ModelParams) -> float:
    return math.sqrt(params.n_th / 2)


def build_phase_diffusion_liouvillian(params: ModelParams, r0: Optional[float] = None) -> Superoperator:
    """
    Fixed real drive amplitude r0 plus collective dephasing rate * D[S^z].
    """
    rate = phase_diffusion_rate(params, r0)
    r0 = default_radius(params) if r0 is None else r0
    model = build_phase_space_model(params)
    ops = local_operators()
    dephasing = Superoperator.dissipator(ops.collective_z, rate)
    return model.conditional_liouvillian(r0) + dephasing


def phase_diffusion_steady(params: ModelParams, r0: Optional[float] = None) -> QubitState:
    """
    Steady state of the phase-diffusion master equation.

    Raises:
        ParameterError: If r0 <= 0 (including the default at n_th = 0)
    """
    result: SteadyStateResult = steady_state(build_phase_diffusion_liouvillian(params, r0))
    return result.qubits
