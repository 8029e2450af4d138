"""
Thermal Link - Configuration Module

Reads versioned JSON run configurations and checks them against the schema.
"""
import json
import logging
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from src.exceptions import ConfigError, ParameterError
from src.params import ModelParams

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
ENV_WORKERS = 'THERMAL_LINK_WORKERS'

ROUTES = (
    'exact',
    'stochastic',
    'bourret',
    'cfrac',
    'quasistatic',
    'markov',
    'phase-diffusion',
    'bidirectional',
    'bidirectional-exact',
    'closed-form',
    'three-level',
)

TOP_LEVEL_KEYS = frozenset({
    'schema_version', 'route', 'params', 'sweep', 't_grid', 'n_traj', 'seed', 'workers', 'output', 'options',
})
OPTION_KEYS = frozenset({'tail_tolerance', 'n_max', 'three_level', 'r0', 'dt', 'chunk_size', 'order'})
PARAM_KEYS = frozenset(f.name for f in fields(ModelParams)) | {'phi'}
DETUNING_ALIASES = frozenset({'delta_s', 'delta_a'})
AXIS_NAMES = PARAM_KEYS | DETUNING_ALIASES
SWEEP_KEYS = frozenset({'axes'})
AXIS_KEYS = frozenset({'name', 'scale', 'start', 'stop', 'num', 'values'})
T_GRID_KEYS = frozenset({'start', 'stop', 'num'})
AXIS_SCALES = ('linear', 'log', 'list')

DEFAULT_N_TRAJ = 10000


def _reject_unknown(section: str, data: Mapping, allowed: frozenset):
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {', '.join(unknown)}")


def _require_mapping(section: str, data) -> Mapping:
    if not isinstance(data, Mapping):
        raise ConfigError(f"{section} must be an object, got {type(data).__name__}")
    return data


def _number(section: str, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{section} must be a finite number, got {value!r}")
    return float(value)


def _integer(section: str, value, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{section} must be an integer >= {minimum}, got {value!r}")
    return value


@dataclass(frozen=True)
class SweepAxis:
    """
    One swept parameter: linear or log spaced between bounds, or an explicit list.
    """
    name: str
    scale: str = 'linear'
    start: Optional[float] = None
    stop: Optional[float] = None
    num: int = 1
    points: Tuple[float, ...] = ()

    def validate(self) -> bool:
        """
        Returns:
            True if valid

        Raises:
            ConfigError: On unknown names, scales or bounds
        """
        if self.name not in AXIS_NAMES:
            raise ConfigError(f"axis name {self.name!r} is not a model parameter")
        if self.scale not in AXIS_SCALES:
            raise ConfigError(f"axis scale must be one of {AXIS_SCALES}, got {self.scale!r}")
        if self.scale == 'list':
            if not self.points:
                raise ConfigError(f"list axis {self.name!r} needs at least one value")
            return True
        if self.start is None or self.stop is None:
            raise ConfigError(f"axis {self.name!r} needs start and stop")
        if self.num < 1:
            raise ConfigError(f"axis {self.name!r} needs num >= 1")
        if self.scale == 'log' and (self.start <= 0 or self.stop <= 0):
            raise ConfigError(f"log axis {self.name!r} needs positive bounds")
        return True

    def values(self) -> np.ndarray:
        if self.scale == 'list':
            return np.array(self.points, dtype=float)
        if self.scale == 'log':
            return np.logspace(math.log10(self.start), math.log10(self.stop), self.num)
        return np.linspace(self.start, self.stop, self.num)

    def to_dict(self) -> Dict:
        if self.scale == 'list':
            return {'name': self.name, 'scale': self.scale, 'values': list(self.points)}
        return {'name': self.name, 'scale': self.scale, 'start': self.start, 'stop': self.stop, 'num': self.num}


@dataclass(frozen=True)
class TimeGrid:
    start: float
    stop: float
    num: int

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.num)

    def to_dict(self) -> Dict:
        return {'start': self.start, 'stop': self.stop, 'num': self.num}


@dataclass
class RunConfig:
    """
    A parsed run: route, base parameters, optional sweep axes and route options.

    `phi` is set when the configuration fixes the photon flux; the occupation
    is then recomputed as 2 phi / kappa at every grid point.
    """
    route: str = 'exact'
    params: ModelParams = field(default_factory=ModelParams)
    phi: Optional[float] = None
    axes: Tuple[SweepAxis, ...] = ()
    t_grid: Optional[TimeGrid] = None
    n_traj: int = DEFAULT_N_TRAJ
    seed: int = 0
    workers: int = 1
    output: Optional[str] = None
    options: Dict = field(default_factory=dict)

    def point_params(self, **overrides) -> ModelParams:
        """
        Base parameters with axis overrides applied.

        delta_s and delta_a set delta1 = delta_s + delta_a and
        delta2 = delta_s - delta_a; a flux is applied last.

        Raises:
            ParameterError: If the resulting parameters are invalid
        """
        changes = dict(overrides)
        phi = changes.pop('phi', self.phi)
        delta_s = changes.pop('delta_s', None)
        delta_a = changes.pop('delta_a', None)
        params = self.params.replace(**changes) if changes else self.params
        if delta_s is not None or delta_a is not None:
            delta_s = params.delta_s if delta_s is None else delta_s
            delta_a = params.delta_a if delta_a is None else delta_a
            params = params.replace(delta1=delta_s + delta_a, delta2=delta_s - delta_a)
        if phi is not None:
            params = ModelParams.from_flux(phi, params.kappa, **{
                name: value for name, value in params.to_dict().items() if name not in ('kappa', 'n_th')
            })
        return params

    def to_dict(self) -> Dict:
        params = {name: value for name, value in self.params.to_dict().items() if value is not None}
        if self.phi is not None:
            params.pop('n_th', None)
            params['phi'] = self.phi
        data = {
            'schema_version': SCHEMA_VERSION,
            'route': self.route,
            'params': params,
            'n_traj': self.n_traj,
            'seed': self.seed,
            'workers': self.workers,
            'options': dict(self.options),
        }
        if self.axes:
            data['sweep'] = {'axes': [axis.to_dict() for axis in self.axes]}
        if self.t_grid is not None:
            data['t_grid'] = self.t_grid.to_dict()
        if self.output is not None:
            data['output'] = self.output
        return data


class ConfigParser:
    """
    Parser for JSON run configurations
    """

    def parse_file(self, path: str) -> RunConfig:
        """
        Read and parse a configuration file.

        Args:
            path: Path to a JSON file

        Returns:
            Validated RunConfig

        Raises:
            ConfigError: If the file is missing, not JSON or violates the schema
        """
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            with open(path, 'r', encoding='utf-8') as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"config file {path} is not valid JSON: {e}") from e
        logger.debug("loaded config %s", path)
        return self.parse_dict(data)

    def parse_dict(self, data: Mapping) -> RunConfig:
        """
        Build a RunConfig from decoded JSON.

        Raises:
            ConfigError: On unknown keys, wrong types or invalid parameters
        """
        data = _require_mapping('config', data)
        _reject_unknown('config', data, TOP_LEVEL_KEYS)
        version = data.get('schema_version')
        if version != SCHEMA_VERSION:
            raise ConfigError(f"schema_version must be {SCHEMA_VERSION}, got {version!r}")

        params, phi = self._parse_params(data.get('params', {}))
        config = RunConfig(
            route=data.get('route', 'exact'),
            params=params,
            phi=phi,
            axes=self._parse_axes(data.get('sweep')),
            t_grid=self._parse_t_grid(data.get('t_grid')),
            n_traj=_integer('n_traj', data.get('n_traj', DEFAULT_N_TRAJ), 1),
            seed=_integer('seed', data.get('seed', 0), 0),
            workers=_integer('workers', data.get('workers', 1), 1),
            output=data.get('output'),
            options=self._parse_options(data.get('options', {})),
        )
        self.validate(config)
        return config

    def validate(self, config: RunConfig) -> bool:
        """
        Cross-field checks of a parsed configuration.

        Returns:
            True if valid

        Raises:
            ConfigError: If the route is unknown or axes conflict
        """
        if config.route not in ROUTES:
            raise ConfigError(f"unknown route {config.route!r}; expected one of {', '.join(ROUTES)}")
        names = [axis.name for axis in config.axes]
        if len(names) != len(set(names)):
            raise ConfigError("sweep axes must have distinct names")
        flux_given = config.phi is not None or 'phi' in names
        if flux_given and 'n_th' in names:
            raise ConfigError("phi and n_th cannot both be set")
        if DETUNING_ALIASES & set(names) and {'delta1', 'delta2'} & set(names):
            raise ConfigError("delta_s/delta_a axes cannot be combined with delta1/delta2 axes")
        if config.output is not None and not isinstance(config.output, str):
            raise ConfigError("output must be a path string")
        return True

    def _parse_params(self, data) -> Tuple[ModelParams, Optional[float]]:
        data = dict(_require_mapping('params', data))
        _reject_unknown('params', data, PARAM_KEYS)
        phi = data.pop('phi', None)
        if phi is not None and 'n_th' in data:
            raise ConfigError("phi and n_th cannot both be set")
        try:
            params = ModelParams(**data)
            if phi is not None:
                phi = _number('params.phi', phi)
                params = ModelParams.from_flux(phi, params.kappa, **{
                    k: v for k, v in data.items() if k != 'kappa'
                })
        except ParameterError as e:
            raise ConfigError(f"invalid params: {e}") from e
        return params, phi

    def _parse_axes(self, data) -> Tuple[SweepAxis, ...]:
        if data is None:
            return ()
        data = _require_mapping('sweep', data)
        _reject_unknown('sweep', data, SWEEP_KEYS)
        entries = data.get('axes', [])
        if not isinstance(entries, list):
            raise ConfigError("sweep.axes must be a list")
        axes = []
        for position, entry in enumerate(entries):
            section = f"sweep.axes[{position}]"
            entry = _require_mapping(section, entry)
            _reject_unknown(section, entry, AXIS_KEYS)
            if 'name' not in entry:
                raise ConfigError(f"{section} needs a name")
            scale = entry.get('scale', 'list' if 'values' in entry else 'linear')
            points = tuple(_number(f"{section}.values", v) for v in entry.get('values', []))
            axis = SweepAxis(
                name=entry['name'],
                scale=scale,
                start=None if entry.get('start') is None else _number(f"{section}.start", entry['start']),
                stop=None if entry.get('stop') is None else _number(f"{section}.stop", entry['stop']),
                num=_integer(f"{section}.num", entry.get('num', len(points) or 1), 1),
                points=points,
            )
            axis.validate()
            axes.append(axis)
        return tuple(axes)

    def _parse_t_grid(self, data) -> Optional[TimeGrid]:
        if data is None:
            return None
        data = _require_mapping('t_grid', data)
        _reject_unknown('t_grid', data, T_GRID_KEYS)
        missing = sorted(T_GRID_KEYS - set(data))
        if missing:
            raise ConfigError(f"t_grid is missing {', '.join(missing)}")
        grid = TimeGrid(_number('t_grid.start', data['start']), _number('t_grid.stop', data['stop']),
                        _integer('t_grid.num', data['num'], 1))
        if grid.num > 1 and grid.stop <= grid.start:
            raise ConfigError("t_grid.stop must exceed t_grid.start")
        return grid

    def _parse_options(self, data) -> Dict:
        data = dict(_require_mapping('options', data))
        _reject_unknown('options', data, OPTION_KEYS)
        for name in ('tail_tolerance', 'r0', 'dt'):
            if name in data and data[name] is not None:
                data[name] = _number(f"options.{name}", data[name])
        for name in ('n_max', 'chunk_size'):
            if name in data and data[name] is not None:
                data[name] = _integer(f"options.{name}", data[name], 1)
        if 'three_level' in data and not isinstance(data['three_level'], bool):
            raise ConfigError("options.three_level must be true or false")
        if 'order' in data and data['order'] not in ('full', 'lowest', 'refined'):
            raise ConfigError(f"options.order must be full, lowest or refined, got {data['order']!r}")
        return data


def load_config(path: str) -> RunConfig:
    return ConfigParser().parse_file(path)


def resolve_workers(configured: int = 1, cli: Optional[int] = None,
                    environ: Optional[Mapping[str, str]] = None) -> int:
    """
    Worker count: config value, overridden by --workers, overridden by THERMAL_LINK_WORKERS.

    Raises:
        ConfigError: If the environment value is not a positive integer
    """
    environ = os.environ if environ is None else environ
    workers = configured
    if cli is not None:
        workers = cli
    raw = environ.get(ENV_WORKERS)
    if raw:
        try:
            workers = int(raw)
        except ValueError as e:
            raise ConfigError(f"{ENV_WORKERS} must be an integer, got {raw!r}") from e
    if workers < 1:
        raise ConfigError(f"worker count must be >= 1, got {workers}")
    return workers
