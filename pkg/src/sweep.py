"""
Thermal Link - Sweep Module

Route dispatch, single steady-state runs and seeded parallel parameter sweeps.
"""
import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from datetime import datetime, timezone
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src import __version__
from src.analytic import AnalyticPrediction, bourret_steady, markov_steady, quasistatic_steady
from src.bidirectional import bidirectional_phase_space_steady, build_bidirectional_liouvillian
from src.cfrac import (
    closed_form_concurrence,
    closed_form_populations,
    mcf_steady,
    three_level_cf_steady,
)
from src.config import DEFAULT_N_TRAJ, ROUTES, RunConfig, SweepAxis, TimeGrid
from src.exceptions import ConfigError, ThermalLinkError
from src.operators import build_full_liouvillian, thermal_state
from src.params import DEFAULT_TAIL_TOLERANCE, ModelParams
from src.solvers import SteadyStateResult, TripletSingletView, evolve_observables, steady_state
from src.stochastic import DEFAULT_CHUNK_SIZE, ensemble_average, phase_diffusion_steady

logger = logging.getLogger(__name__)

PARAM_COLUMNS = tuple(f.name for f in fields(ModelParams)) + ('phi',)
POPULATION_COLUMNS = ('rho_00', 'rho_T', 'rho_S', 'rho_11')
COHERENCE_COLUMNS = ('chi_ST', 'chi_0S', 'chi_0T')
DIAGNOSTIC_COLUMNS = ('residual', 'cutoff', 'n_max', 'converged', 'mc_error', 'n_traj', 'provenance')
RECORD_COLUMNS = (('index', 'route', 'seed') + PARAM_COLUMNS + POPULATION_COLUMNS + COHERENCE_COLUMNS
                  + ('concurrence',) + DIAGNOSTIC_COLUMNS + ('engine_version', 'error'))

STEADY_HORIZON_RELAXATIONS = 10.0


def point_seed(master_seed: int, index: int) -> int:
    """Per-point seed derived from (master seed, flat grid index)."""
    sequence = np.random.SeedSequence([int(master_seed), int(index)])
    return int(sequence.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass
class ResultRecord:
    """
    One solved grid point, re-runnable from its own fields.
    """
    index: int
    route: str
    seed: int
    params: ModelParams
    populations: Dict[str, float] = field(default_factory=dict)
    coherences: Dict[str, float] = field(default_factory=dict)
    concurrence: float = math.nan
    diagnostics: Dict[str, object] = field(default_factory=dict)
    engine_version: str = __version__
    timestamp: Optional[str] = None
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_row(self) -> Dict[str, object]:
        """Flat record in canonical column order; the timestamp stays out."""
        row = {'index': self.index, 'route': self.route, 'seed': self.seed}
        row.update(self.params.to_dict())
        row['phi'] = self.params.phi
        for name in POPULATION_COLUMNS:
            row[name] = self.populations.get(name, math.nan)
        for name in COHERENCE_COLUMNS:
            row[name] = self.coherences.get(name, math.nan)
        row['concurrence'] = self.concurrence
        for name in DIAGNOSTIC_COLUMNS:
            row[name] = self.diagnostics.get(name)
        row['engine_version'] = self.engine_version
        row['error'] = self.error
        return {name: row[name] for name in RECORD_COLUMNS}


def records_to_frame(records: List[ResultRecord]) -> pd.DataFrame:
    return pd.DataFrame([record.to_row() for record in records], columns=list(RECORD_COLUMNS))


def _from_view(view: TripletSingletView, concurrence: float) -> Tuple[Dict, Dict, float]:
    data = view.to_dict()
    return ({name: data[name] for name in POPULATION_COLUMNS},
            {name: data[name] for name in COHERENCE_COLUMNS},
            concurrence)


def _from_prediction(prediction: AnalyticPrediction) -> Tuple[Dict, Dict, float]:
    populations = {name: getattr(prediction, name) for name in POPULATION_COLUMNS}
    return populations, {name: 0.0 for name in COHERENCE_COLUMNS}, prediction.concurrence


def _from_steady(result: SteadyStateResult) -> Tuple[Dict, Dict, float, Dict]:
    diagnostics = {'residual': result.residual, 'cutoff': result.cutoff}
    return (*_from_view(result.qubits.triplet_singlet(), result.concurrence), diagnostics)


def _tail(options: Dict) -> float:
    return options.get('tail_tolerance', DEFAULT_TAIL_TOLERANCE)


def _solve_exact(params, options, seed, context):
    return _from_steady(steady_state(build_full_liouvillian(params, _tail(options)), _tail(options)))


def _solve_bidirectional_exact(params, options, seed, context):
    return _from_steady(steady_state(build_bidirectional_liouvillian(params, _tail(options)), _tail(options)))


def _solve_markov(params, options, seed, context):
    return (*_from_prediction(markov_steady(params.n_th)), {})


def _solve_cfrac(params, options, seed, context):
    solution = mcf_steady(params, n_max=options.get('n_max'), three_level=options.get('three_level', False))
    diagnostics = {'n_max': solution.n_max, 'converged': solution.converged, 'provenance': solution.provenance}
    return (*_from_view(solution.populations, solution.concurrence), diagnostics)


def _solve_bidirectional(params, options, seed, context):
    solution = bidirectional_phase_space_steady(params, n_max=options.get('n_max'),
                                                three_level=options.get('three_level', False))
    diagnostics = {'n_max': solution.n_max, 'converged': solution.converged, 'provenance': solution.provenance}
    return (*_from_view(solution.populations, solution.concurrence), diagnostics)


def _solve_bourret(params, options, seed, context):
    return (*_from_prediction(bourret_steady(params, order=options.get('order', 'full'))), {})


def _solve_quasistatic(params, options, seed, context):
    return (*_from_prediction(quasistatic_steady(params.phi / params.gamma)), {})


def _solve_phase_diffusion(params, options, seed, context):
    state = phase_diffusion_steady(params, r0=options.get('r0'))
    return (*_from_view(state.triplet_singlet(), state.concurrence()), {})


def _solve_closed_form(params, options, seed, context):
    rho_S, rho_T = closed_form_populations(params, order=options.get('order', 'refined'))
    populations = {'rho_00': 1.0 - rho_S - rho_T, 'rho_T': rho_T, 'rho_S': rho_S, 'rho_11': 0.0}
    return populations, {name: 0.0 for name in COHERENCE_COLUMNS}, closed_form_concurrence(params), {}


def _solve_three_level(params, options, seed, context):
    result = three_level_cf_steady(params)
    populations = dict(zip(POPULATION_COLUMNS, result.populations()))
    return (populations, {name: 0.0 for name in COHERENCE_COLUMNS}, result.concurrence,
            {'n_max': result.depth})


def steady_horizon(params: ModelParams) -> float:
    """Ten of the slower of 1/kappa and 1/gamma."""
    slowest = min(params.kappa, max(params.gamma1, params.gamma2))
    return STEADY_HORIZON_RELAXATIONS / slowest


def _solve_stochastic(params, options, seed, context):
    t_grid = context.get('t_grid')
    if t_grid is None:
        t_grid = np.array([0.0, steady_horizon(params)])
    ensemble = ensemble_average(params, context.get('n_traj') or DEFAULT_N_TRAJ, t_grid, seed, dt=options.get('dt'),
                                chunk_size=options.get('chunk_size', DEFAULT_CHUNK_SIZE))
    final = ensemble.final_state()
    errors = ensemble.standard_errors[-1, :len(POPULATION_COLUMNS)]
    diagnostics = {'mc_error': float(np.max(errors)), 'n_traj': ensemble.n_traj,
                   'provenance': ensemble.provenance}
    return (*_from_view(final.triplet_singlet(), final.concurrence()), diagnostics)


ROUTE_SOLVERS: Dict[str, Callable] = {
    'exact': _solve_exact,
    'stochastic': _solve_stochastic,
    'bourret': _solve_bourret,
    'cfrac': _solve_cfrac,
    'quasistatic': _solve_quasistatic,
    'markov': _solve_markov,
    'phase-diffusion': _solve_phase_diffusion,
    'bidirectional': _solve_bidirectional,
    'bidirectional-exact': _solve_bidirectional_exact,
    'closed-form': _solve_closed_form,
    'three-level': _solve_three_level,
}


def solve_point(route: str, params: ModelParams, index: int = 0, seed: int = 0,
                options: Optional[Dict] = None, context: Optional[Dict] = None) -> ResultRecord:
    """
    Solve one parameter point on the named route.

    Raises:
        ConfigError: If the route is unknown
        ThermalLinkError: Whatever the route raises
    """
    if route not in ROUTE_SOLVERS:
        raise ConfigError(f"unknown route {route!r}")
    populations, coherences, value, diagnostics = ROUTE_SOLVERS[route](params, options or {}, seed, context or {})
    return ResultRecord(index=index, route=route, seed=seed, params=params,
                        populations={k: float(v) for k, v in populations.items()},
                        coherences={k: float(v) for k, v in coherences.items()},
                        concurrence=float(value), diagnostics=diagnostics)


def _run_context(config: RunConfig) -> Dict:
    return {
        'n_traj': config.n_traj,
        't_grid': None if config.t_grid is None else config.t_grid.values(),
    }


def run_steady(config: RunConfig) -> ResultRecord:
    """
    Single steady-state solve of the configured route at grid index 0.

    Errors of the route are raised unchanged.
    """
    record = solve_point(config.route, config.point_params(), index=0, seed=point_seed(config.seed, 0),
                         options=config.options, context=_run_context(config))
    record.timestamp = datetime.now(timezone.utc).isoformat()
    return record


@dataclass
class SweepSpec:
    """
    Route, axes and fixed parameters of a sweep.
    """
    route: str
    config: RunConfig
    axes: Tuple[SweepAxis, ...] = ()
    output: Optional[str] = None
    master_seed: int = 0
    workers: int = 1

    @classmethod
    def from_config(cls, config: RunConfig, workers: Optional[int] = None) -> 'SweepSpec':
        return cls(route=config.route, config=config, axes=config.axes, output=config.output,
                   master_seed=config.seed, workers=config.workers if workers is None else workers)

    @classmethod
    def build(cls, route: str, params: ModelParams, axes: Tuple[SweepAxis, ...], options: Optional[Dict] = None,
              master_seed: int = 0, workers: int = 1, n_traj: int = 1000,
              t_grid: Optional[TimeGrid] = None, phi: Optional[float] = None) -> 'SweepSpec':
        config = RunConfig(route=route, params=params, phi=phi, axes=tuple(axes), seed=master_seed,
                           workers=workers, n_traj=n_traj, t_grid=t_grid, options=dict(options or {}))
        return cls.from_config(config)

    def validate(self) -> bool:
        """
        Raises:
            ConfigError: On an unknown route, bad axes or a worker count below 1
        """
        if self.route not in ROUTES:
            raise ConfigError(f"unknown route {self.route!r}")
        for axis in self.axes:
            axis.validate()
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return True

    def shape(self) -> Tuple[int, ...]:
        return tuple(len(axis.values()) for axis in self.axes)

    def grid(self) -> List[Dict[str, float]]:
        """Axis overrides per point, row-major (last axis fastest)."""
        names = [axis.name for axis in self.axes]
        return [dict(zip(names, (float(v) for v in point)))
                for point in itertools.product(*(axis.values() for axis in self.axes))]


def _solve_task(task: Tuple) -> ResultRecord:
    """Pool worker entry; engine errors become failed records."""
    route, config, index, overrides, seed = task
    try:
        params = config.point_params(**overrides)
    except ThermalLinkError as e:
        return ResultRecord(index=index, route=route, seed=seed, params=config.params,
                            error=f"{type(e).__name__}: {e}")
    try:
        return solve_point(route, params, index=index, seed=seed, options=config.options,
                           context=_run_context(config))
    except (ThermalLinkError, np.linalg.LinAlgError) as e:
        return ResultRecord(index=index, route=route, seed=seed, params=params,
                            error=f"{type(e).__name__}: {e}")


@dataclass
class SweepResult:
    records: List[ResultRecord]
    path: Optional[str] = None

    @property
    def failed(self) -> List[ResultRecord]:
        return [record for record in self.records if not record.ok]

    def to_frame(self) -> pd.DataFrame:
        return records_to_frame(self.records)


def run_sweep(spec: SweepSpec, writer=None) -> SweepResult:
    """
    Solve every grid point and, when spec.output is set, write the results.

    Points are partitioned statically across `spec.workers` processes and
    collected in grid order; each point's seed depends only on the master
    seed and its flat index.

    Args:
        spec: Sweep specification
        writer: ResultWriter to use for the output file

    Returns:
        SweepResult with one record per grid point
    """
    spec.validate()
    timestamp = datetime.now(timezone.utc).isoformat()
    grid = spec.grid()
    tasks = [(spec.route, spec.config, index, overrides, point_seed(spec.master_seed, index))
             for index, overrides in enumerate(grid)]
    logger.debug("sweep: route=%s, %d points, %d workers", spec.route, len(tasks), spec.workers)

    # Static partition; pool.map keeps grid order
    if spec.workers == 1 or len(tasks) <= 1:
        records = [_solve_task(task) for task in tasks]
    else:
        chunksize = max(1, math.ceil(len(tasks) / spec.workers))
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            records = list(pool.map(_solve_task, tasks, chunksize=chunksize))

    for record in records:
        record.timestamp = timestamp
        if not record.ok:
            logger.warning("point %d failed: %s", record.index, record.error)

    result = SweepResult(records=records)
    if spec.output:
        if writer is None:
            from src.writer import ResultWriter
            writer = ResultWriter()
        result.path = writer.save_records(records, spec.output, manifest={
            'config': spec.config.to_dict(),
            'timestamp': timestamp,
            'failed_points': len(result.failed),
        })
    return result


def initial_full_state(params: ModelParams, levels: int) -> np.ndarray:
    """|00><00| for the qubits and the source's stationary thermal state at n_th/2."""
    ground = np.zeros((4, 4), dtype=complex)
    ground[0, 0] = 1.0
    return np.kron(ground, thermal_state(params.n_th / 2, levels))


def run_evolution(config: RunConfig) -> pd.DataFrame:
    """
    Exact time traces from |00> with the cavity in its stationary state.

    The route selects the unidirectional (exact) or mirror (bidirectional-exact)
    Liouvillian.

    Raises:
        ConfigError: If the config has no t_grid or names another route
    """
    if config.t_grid is None:
        raise ConfigError("evolve needs a t_grid")
    builders = {'exact': build_full_liouvillian, 'bidirectional-exact': build_bidirectional_liouvillian}
    if config.route not in builders:
        raise ConfigError(f"evolve supports routes {', '.join(builders)}, got {config.route!r}")
    params = config.point_params()
    liouvillian = builders[config.route](params, _tail(config.options))
    rho0 = initial_full_state(params, liouvillian.dims[2])
    return evolve_observables(liouvillian, rho0, config.t_grid.values())


def run_trajectory(config: RunConfig, workers: int = 1) -> pd.DataFrame:
    """
    Ensemble-averaged time traces with Monte-Carlo errors.

    Raises:
        ConfigError: If the config has no t_grid
    """
    if config.t_grid is None:
        raise ConfigError("trajectory needs a t_grid")
    params = config.point_params()
    ensemble = ensemble_average(params, config.n_traj, config.t_grid.values(), config.seed,
                                dt=config.options.get('dt'), workers=workers,
                                chunk_size=config.options.get('chunk_size', DEFAULT_CHUNK_SIZE))
    return ensemble.to_frame()
