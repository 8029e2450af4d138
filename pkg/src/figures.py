"""
Thermal Link - Figure Data Module

Reproducible data bundles behind each published plot: the route, parameters
and grid of every panel, emitted as tables.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.analytic import bourret_concurrence, kappa_max, quasistatic_steady
from src.cfrac import closed_form_concurrence, optimal_occupation
from src.config import SweepAxis
from src.exceptions import UnknownFigureError
from src.params import ModelParams
from src.stochastic import coherent_drive_trace, ensemble_average, single_qubit_params
from src.sweep import SweepSpec, run_sweep

logger = logging.getLogger(__name__)

# kappa/(2 pi) = 10 kHz against gamma/(2 pi) = 10 MHz
ROOM_TEMPERATURE_KAPPA = 1e-3
ROOM_TEMPERATURE_OCCUPATION = 1220.0
NODE_POSITIONS = (2 * math.pi, 4 * math.pi)
BIDIRECTIONAL_DELTA_A = 0.5


@dataclass
class FigureContext:
    quick: bool = False
    workers: int = 1
    seed: int = 0
    failed: int = 0

    def pick(self, full, quick):
        return quick if self.quick else full


@dataclass
class FigureBundle:
    """
    Panels of one figure with their parameters.
    """
    name: str
    panels: Dict[str, pd.DataFrame]
    metadata: Dict
    failed: int = 0
    paths: Dict[str, str] = field(default_factory=dict)


def _axis(name: str, values: Sequence[float]) -> SweepAxis:
    return SweepAxis(name=name, scale='list', points=tuple(float(v) for v in values), num=len(values))


def _log_axis(name: str, start: float, stop: float, num: int) -> SweepAxis:
    return SweepAxis(name=name, scale='log', start=start, stop=stop, num=num)


def _linear_axis(name: str, start: float, stop: float, num: int) -> SweepAxis:
    return SweepAxis(name=name, scale='linear', start=start, stop=stop, num=num)


def _sweep(context: FigureContext, route: str, params: ModelParams, axes: Sequence[SweepAxis],
           options: Optional[Dict] = None) -> pd.DataFrame:
    spec = SweepSpec.build(route, params, tuple(axes), options=options, master_seed=context.seed,
                           workers=context.workers)
    result = run_sweep(spec)
    context.failed += len(result.failed)
    return result.to_frame()


def _ensemble_traces(context: FigureContext, params: ModelParams, t_grid: np.ndarray,
                     n_traj: int, label: Dict) -> pd.DataFrame:
    ensemble = ensemble_average(params, n_traj, t_grid, context.seed, workers=context.workers)
    frame = ensemble.to_frame()
    for name, value in label.items():
        frame.insert(0, name, value)
    return frame


def _fig2c(context: FigureContext) -> Tuple[Dict[str, pd.DataFrame], Dict]:
    axes = (_log_axis('kappa', 1e-3, 1.0, context.pick(16, 4)),
            _linear_axis('n_th', 0.0, 10.0, context.pick(11, 3)))
    grid = _sweep(context, 'exact', ModelParams(), axes)
    occupations = np.arange(1, 11, dtype=float)
    boundary = pd.DataFrame({'n_th': occupations,
                             'kappa_max': [kappa_max(ModelParams(n_th=n)) for n in occupations]})
    return {'grid': grid, 'boundary': boundary}, {
        'route': {'grid': 'exact', 'boundary': 'bourret'},
        'description': 'steady-state concurrence over kappa/gamma and n_th; dashed line kappa_max',
    }


def _fig2d(context: FigureContext) -> Tuple[Dict[str, pd.DataFrame], Dict]:
    base = ModelParams(n_th=2.0)
    kappas = np.logspace(-3, math.log10(0.3), context.pick(20, 5))
    frame = _sweep(context, 'exact', base, (_axis('kappa', kappas),))
    frame['bourret_concurrence'] = [bourret_concurrence(base.replace(kappa=float(k))) for k in frame['kappa']]
    return {'slice': frame}, {
        'route': {'slice': 'exact + bourret'},
        'n_th': 2.0,
        'kappa_max': kappa_max(base),
        'description': 'exact vs Bourret concurrence at n_th = 2',
    }


def quasistatic_concurrence(params: ModelParams) -> float:
    """Quasistatic concurrence at the scale-free flux Phi/gamma."""
    return quasistatic_steady(params.phi / params.gamma).concurrence


def _fig3a(context: FigureContext) -> Tuple[Dict[str, pd.DataFrame], Dict]:
    kappas = (1e-2, 1e-3, 1e-4)
    occupations = np.logspace(0, context.pick(6, 4), context.pick(25, 5))
    frame = _sweep(context, 'cfrac', ModelParams(), (_axis('kappa', kappas), _axis('n_th', occupations)))
    frame['quasistatic_concurrence'] = [quasistatic_concurrence(ModelParams(kappa=k, n_th=n))
                                        for k, n in zip(frame['kappa'], frame['n_th'])]
    frame['closed_form_concurrence'] = [closed_form_concurrence(ModelParams(kappa=k, n_th=n))
                                        for k, n in zip(frame['kappa'], frame['n_th'])]
    inset = frame.loc[np.isclose(frame['kappa'], 1e-3),
                      ['n_th', 'rho_00', 'rho_T', 'rho_S', 'rho_11']].reset_index(drop=True)
    optima = {str(k): optimal_occupation(ModelParams(kappa=k)).to_dict() for k in kappas}
    return {'lines': frame, 'inset': inset}, {
        'route': {'lines': 'cfrac + quasistatic + closed-form', 'inset': 'cfrac'},
        'optimal_occupation': optima,
        'description': 'concurrence vs n_th for several bandwidths; inset populations at kappa/gamma = 1e-3',
    }


def _fig3b(context: FigureContext) -> Tuple[Dict[str, pd.DataFrame], Dict]:
    phi = 10.0
    t_grid = np.linspace(0.0, 5.0, context.pick(51, 11))
    n_traj = context.pick(1000, 100)
    frames = []
    for kappa in (1e-1, 1e-2, 1e-3):
        params = single_qubit_params(ModelParams.from_flux(phi, kappa))
        frame = _ensemble_traces(context, params, t_grid, n_traj, {'curve': 'thermal', 'kappa': kappa})
        frames.append(frame[['curve', 'kappa', 't', 'p1', 'se_p1']])
    coherent = coherent_drive_trace(ModelParams.from_flux(phi, 1e-3), t_grid)
    coherent.insert(0, 'kappa', math.nan)
    coherent.insert(0, 'curve', 'coherent')
    coherent['se_p1'] = 0.0
    frames.append(coherent)
    return {'traces': pd.concat(frames, ignore_index=True)}, {
        'route': {'traces': 'stochastic (gamma2 = 0) + coherent reference'},
        'phi': phi,
        'rabi_frequency': math.sqrt(phi),
        'n_traj': n_traj,
        'description': 'single-qubit excitation under thermal drive at fixed flux',
    }


def _fig3c(context: FigureContext) -> Tuple[Dict[str, pd.DataFrame], Dict]:
    axes = (_axis('kappa', (1e-2, 1e-3)), _log_axis('n_th', 1.0, 1e4, context.pick(17, 5)))
    bourret = _sweep(context, 'bourret', ModelParams(), axes)
    diffusion = _sweep(context, 'phase-diffusion', ModelParams(), axes)
    return {'bourret': bourret, 'phase_diffusion': diffusion}, {
        'route': {'bourret': 'bourret', 'phase_diffusion': 'phase-diffusion'},
        'description': 'Bourret vs phase-diffusion concurrence over n_th',
    }


def _room_temperature(**changes) -> ModelParams:
    return ModelParams(kappa=ROOM_TEMPERATURE_KAPPA, n_th=ROOM_TEMPERATURE_OCCUPATION).replace(**changes)


def _peak_times(frame: pd.DataFrame, key: str) -> Dict[str, float]:
    peaks = {}
    for value, group in frame.groupby(key):
        peaks[str(value)] = float(group['t'].iloc[int(np.argmax(group['concurrence'].to_numpy()))])
    return peaks


def _fig4a(context: FigureContext) -> Tuple[Dict[str, pd.DataFrame], Dict]:
    t_grid = np.linspace(0.0, 10.0, context.pick(41, 11))
    n_traj = context.pick(1000, 100)
    frames = [_ensemble_traces(context, _room_temperature(n_th=n), t_grid, n_traj, {'n_th': n})
              for n in context.pick((10.0, 100.0, ROOM_TEMPERATURE_OCCUPATION), (10.0, ROOM_TEMPERATURE_OCCUPATION))]
    traces = pd.concat(frames, ignore_index=True)
    return {'traces': traces}, {
        'route': {'traces': 'stochastic'},
        'kappa': ROOM_TEMPERATURE_KAPPA,
        'n_traj': n_traj,
        't_peak': _peak_times(traces, 'n_th'),
        'description': 'concurrence time traces from |00>, stationary source',
    }


def _fig4b(context: FigureContext) -> Tuple[Dict[str, pd.DataFrame], Dict]:
    t_grid = np.linspace(0.0, 10.0, context.pick(41, 11))
    n_traj = context.pick(1000, 100)
    frames = [_ensemble_traces(context, _room_temperature(gamma_phi=rate), t_grid, n_traj, {'gamma_phi': rate})
              for rate in context.pick((0.0, 0.01, 0.1), (0.0, 0.1))]
    traces = pd.concat(frames, ignore_index=True)
    return {'traces': traces}, {
        'route': {'traces': 'stochastic'},
        'n_th': ROOM_TEMPERATURE_OCCUPATION,
        'n_traj': n_traj,
        't_peak': _peak_times(traces, 'gamma_phi'),
        'description': 'concurrence time traces for several dephasing rates 1/T_phi',
    }


def _fig4c(context: FigureContext) -> Tuple[Dict[str, pd.DataFrame], Dict]:
    axes = (_linear_axis('gamma2', 0.5, 1.5, context.pick(11, 3)),
            _linear_axis('delta_s', -0.5, 0.5, context.pick(11, 3)))
    grid = _sweep(context, 'cfrac', _room_temperature(), axes)
    return {'grid': grid}, {
        'route': {'grid': 'cfrac'},
        'description': 'steady-state concurrence over gamma2/gamma1 and common detuning at n_th = 1220',
    }


def _fig4d(context: FigureContext) -> Tuple[Dict[str, pd.DataFrame], Dict]:
    axes = (_axis('kappa', (1e-2, 1e-3, 1e-4)), _linear_axis('p_loss', 0.0, 0.5, context.pick(11, 3)))
    grid = _sweep(context, 'cfrac', _room_temperature(), axes)
    return {'grid': grid}, {
        'route': {'grid': 'cfrac'},
        'description': 'steady-state concurrence vs waveguide loss at n_th = 1220',
    }


def _bidirectional_base(**changes) -> ModelParams:
    base = ModelParams(kappa=1e-2, delta1=BIDIRECTIONAL_DELTA_A, delta2=-BIDIRECTIONAL_DELTA_A,
                       k0z1=NODE_POSITIONS[0], k0z2=NODE_POSITIONS[1])
    return base.replace(**changes)


def _fig7a(context: FigureContext) -> Tuple[Dict[str, pd.DataFrame], Dict]:
    axes = (_axis('kappa', (1e-2, 1e-3)), _log_axis('n_th', 1.0, 1e4, context.pick(17, 5)))
    lines = _sweep(context, 'bidirectional', _bidirectional_base(), axes)
    exact_occupations = context.pick((2.0, 5.0, 10.0, 20.0), (2.0, 5.0))
    exact = _sweep(context, 'bidirectional-exact', _bidirectional_base(), (_axis('n_th', exact_occupations),))
    return {'lines': lines, 'exact': exact}, {
        'route': {'lines': 'bidirectional', 'exact': 'bidirectional-exact'},
        'positions': NODE_POSITIONS,
        'delta_a': BIDIRECTIONAL_DELTA_A,
        'description': 'mirror geometry: phase-space concurrence with exact overlays at kappa/gamma = 0.01',
    }


def _fig7b(context: FigureContext) -> Tuple[Dict[str, pd.DataFrame], Dict]:
    points = context.pick(25, 5)
    axes = (_linear_axis('k0z1', 0.0, 4 * math.pi, points), _linear_axis('k0z2', 0.0, 4 * math.pi, points))
    grid = _sweep(context, 'bidirectional', _bidirectional_base(n_th=2000.0), axes)
    return {'grid': grid}, {
        'route': {'grid': 'bidirectional'},
        'n_th': 2000.0,
        'delta_a': BIDIRECTIONAL_DELTA_A,
        'description': 'concurrence over both qubit positions',
    }


@dataclass(frozen=True)
class FigureSpec:
    name: str
    builder: Callable[[FigureContext], Tuple[Dict[str, pd.DataFrame], Dict]]


FIGURES: Dict[str, FigureSpec] = {spec.name: spec for spec in (
    FigureSpec('fig2c', _fig2c),
    FigureSpec('fig2d', _fig2d),
    FigureSpec('fig3a', _fig3a),
    FigureSpec('fig3b', _fig3b),
    FigureSpec('fig3c', _fig3c),
    FigureSpec('fig4a', _fig4a),
    FigureSpec('fig4b', _fig4b),
    FigureSpec('fig4c', _fig4c),
    FigureSpec('fig4d', _fig4d),
    FigureSpec('fig7a', _fig7a),
    FigureSpec('fig7b', _fig7b),
)}


def figure_names() -> List[str]:
    return list(FIGURES)


def figure(name: str, writer=None, quick: bool = False, workers: int = 1, seed: int = 0) -> FigureBundle:
    """
    Compute the data bundle of a named figure and optionally write it.

    Args:
        name: One of FIGURES
        writer: ResultWriter; the bundle lands in writer.base_dir/name
        quick: Coarse grids and few trajectories
        workers: Process count for sweeps and ensembles
        seed: Master seed

    Returns:
        FigureBundle

    Raises:
        UnknownFigureError: If the name is not registered
    """
    if name not in FIGURES:
        raise UnknownFigureError(f"unknown figure {name!r}; expected one of {', '.join(FIGURES)}")
    context = FigureContext(quick=quick, workers=workers, seed=seed)
    panels, metadata = FIGURES[name].builder(context)
    metadata = {**metadata, 'quick': quick, 'seed': seed, 'failed_points': context.failed}
    bundle = FigureBundle(name=name, panels=panels, metadata=metadata, failed=context.failed)
    if context.failed:
        logger.warning("%s: %d grid points failed", name, context.failed)
    if writer is not None:
        bundle.paths = writer.save_bundle(name, panels, metadata)
    return bundle
