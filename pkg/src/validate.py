"""
Thermal Link - Validation Module

Result-file checks and the cross-route oracle suite.
"""
import csv
import logging
import math
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.analytic import bourret_concurrence, bourret_steady, kappa_max, markov_steady, upsilon
from src.cfrac import (
    bourret_closure_steady,
    closed_form_concurrence,
    closed_form_factors,
    continued_fraction_factors,
    mcf_steady,
    optimal_occupation,
)
from src.exceptions import ThermalLinkError
from src.operators import build_full_liouvillian, build_markov_liouvillian
from src.params import ModelParams
from src.solvers import steady_state
from src.stochastic import ensemble_average
from src.writer import column_from_header

logger = logging.getLogger(__name__)

REQUIRED_COLUMNS = ('rho_00', 'rho_T', 'rho_S', 'rho_11', 'concurrence')
EMPTY_ALLOWED = frozenset({'error'})
POPULATION_SLACK = 1e-9
SUM_TOLERANCE = 1e-6
UNNORMALIZED_ROUTES = frozenset({'bourret'})
ORACLE_TRAJECTORIES = 10_000
SEPARABILITY_DISTANCE = 0.02


def _parse_float(value: str) -> Optional[float]:
    try:
        return float(value)
    except ValueError:
        return None


def _header_errors(names: List[str]) -> List[str]:
    problems = []
    if len(names) != len(set(names)):
        problems.append("CSV contains duplicate column headers")
    missing = [c for c in REQUIRED_COLUMNS if c not in names]
    if missing:
        problems.append(f"Missing required columns: {missing}")
    return problems


def _value_errors(row: Dict[str, str], line: int) -> List[str]:
    problems = []
    values = {}
    for name in REQUIRED_COLUMNS:
        value = _parse_float(row[name])
        if value is None or math.isnan(value):
            problems.append(f"Row {line}: {name} is not a number")
            continue
        if not -POPULATION_SLACK <= value <= 1 + POPULATION_SLACK:
            problems.append(f"Row {line}: {name}={value} outside [0, 1]")
        values[name] = value
    populations = [values.get(name) for name in REQUIRED_COLUMNS[:4]]
    if None not in populations and row.get('route', '') not in UNNORMALIZED_ROUTES:
        total = math.fsum(populations)
        if abs(total - 1.0) > SUM_TOLERANCE:
            problems.append(f"Row {line}: populations sum to {total:.12g}")
    return problems


def validate_csv(file_path: str) -> Tuple[bool, List[str]]:
    """
    Check a result CSV written by ResultWriter.

    Headers may carry units and must include the populations and concurrence
    exactly once. Every row needs the header's width and no empty cell outside
    the error column. Rows without an error must hold values in [0, 1] whose
    populations sum to 1; Bourret rows are exempt from the sum.

    Args:
        file_path: Path to the CSV file

    Returns:
        (is_valid, list of error messages)
    """
    path = Path(file_path)
    if not path.exists():
        return False, ["File does not exist"]
    if path.stat().st_size == 0:
        return False, ["File is empty"]

    problems: List[str] = []
    try:
        with open(path, 'r', encoding='utf-8', newline='') as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if not header:
                return False, ["CSV file has no header row"]
            names = [column_from_header(h) for h in header]
            header_problems = _header_errors(names)
            if any(p.startswith("Missing") for p in header_problems):
                return False, header_problems
            problems.extend(header_problems)

            for line, cells in enumerate(reader, start=2):
                if len(cells) != len(names):
                    problems.append(f"Row {line} has {len(cells)} columns, expected {len(names)}")
                    continue
                row = dict(zip(names, cells))
                problems.extend(f"Empty value found in row {line}, column {index + 1}"
                                for index, (name, cell) in enumerate(row.items())
                                if not cell.strip() and name not in EMPTY_ALLOWED)
                if not row.get('error', '').strip():
                    problems.extend(_value_errors(row, line))
    except (csv.Error, UnicodeDecodeError) as e:
        return False, [f"CSV parsing error: {e}"]

    return not problems, problems


@dataclass
class OracleCheck:
    """
    Outcome of one cross-route comparison.
    """
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ''

    def to_dict(self) -> dict:
        return asdict(self)


def _oracle_markov_closed_form() -> OracleCheck:
    params = ModelParams(n_th=1.0, kappa=0.0)
    numeric = steady_state(build_markov_liouvillian(params)).qubits.triplet_singlet().populations()
    deviation = float(np.max(np.abs(numeric - markov_steady(1.0).populations())))
    return OracleCheck('markov-closed-form', deviation < 1e-10, deviation, 1e-10,
                       'Markov Liouvillian steady state vs thermal product at n_th=1')


def _oracle_separability() -> OracleCheck:
    params = ModelParams(kappa=10.0, n_th=1.0)
    result = steady_state(build_full_liouvillian(params))
    distance = result.qubits.trace_distance(markov_steady(1.0).to_state())
    passed = result.concurrence < 1e-8 and distance < SEPARABILITY_DISTANCE
    return OracleCheck('markov-separability', passed, distance, SEPARABILITY_DISTANCE,
                       f'kappa/gamma=10, n_th=1, concurrence={result.concurrence:.3e}; trace distance '
                       f'bound relaxed from 1e-6 to {SEPARABILITY_DISTANCE:g}, product form holds only to '
                       f'O(gamma/kappa)')


def _oracle_kappa_max() -> OracleCheck:
    roots = [kappa_max(ModelParams(n_th=float(n))) for n in range(1, 11)]
    passed = all(0.18 <= r < 0.25 for r in roots)
    return OracleCheck('kappa-max-bracket', passed, max(roots), 0.25,
                       f'kappa_max/gamma in [{min(roots):.4f}, {max(roots):.4f}] for n_th=1..10')


def _oracle_quasistatic_recovery() -> OracleCheck:
    worst = 0.0
    for n_th in (10.0, 100.0, 1000.0):
        params = ModelParams(kappa=1e-5, n_th=n_th)
        expected = 1.0 - upsilon(params.phi / params.gamma)
        worst = max(worst, abs(closed_form_concurrence(params) - expected) / expected)
    return OracleCheck('quasistatic-recovery', worst < 0.01, worst, 0.01,
                       'closed form vs 1 - Upsilon(Phi/gamma) at kappa/gamma=1e-5')


def _oracle_scalar_factors() -> OracleCheck:
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(20):
        gamma_prime = float(rng.uniform(0.5, 5.0))
        x = gamma_prime / float(rng.uniform(0.1, 10.0))
        numeric = continued_fraction_factors(gamma_prime, x)
        exact = closed_form_factors(gamma_prime, x)
        worst = max(worst, max(abs(p - q) / max(1.0, abs(q)) for p, q in zip(numeric, exact)))
    return OracleCheck('scalar-cf-factors', worst < 1e-8, worst, 1e-8,
                       'recurrence factors vs incomplete-gamma closed form')


def _oracle_exact_vs_cfrac() -> OracleCheck:
    params = ModelParams(kappa=0.01, n_th=2.0)
    exact = steady_state(build_full_liouvillian(params))
    solution = mcf_steady(params)
    deviation = abs(exact.concurrence - solution.concurrence)
    populations = np.max(np.abs(exact.qubits.triplet_singlet().populations() - solution.populations.populations()))
    deviation = float(max(deviation, populations))
    return OracleCheck('exact-vs-cfrac', deviation < 1e-6, deviation, 1e-6, 'n_th=2, kappa/gamma=0.01')


def _oracle_bourret_closure() -> OracleCheck:
    params = ModelParams(kappa=0.05, n_th=4.0)
    closure = bourret_closure_steady(params).populations.populations()
    deviation = float(np.max(np.abs(closure - bourret_steady(params).populations())))
    return OracleCheck('bourret-closure', deviation < 1e-10, deviation, 1e-10,
                       'depth-0 mode closure vs Bourret populations')


def _oracle_stochastic() -> OracleCheck:
    params = ModelParams(kappa=0.01, n_th=5.0)
    exact = steady_state(build_full_liouvillian(params)).qubits.triplet_singlet().populations()
    ensemble = ensemble_average(params, ORACLE_TRAJECTORIES, np.array([0.0, 500.0]), master_seed=7)
    errors = ensemble.standard_errors[-1, :4]
    scores = np.abs(ensemble.populations()[-1] - exact) / np.maximum(errors, 1e-12)
    worst = float(np.max(scores))
    return OracleCheck('exact-vs-stochastic', worst < 3.0, worst, 3.0,
                       f'n_th=5, kappa/gamma=0.01, {ORACLE_TRAJECTORIES} trajectories, deviation in standard errors')


def _oracle_bourret_curve() -> OracleCheck:
    worst = 0.0
    for kappa in np.logspace(-3, math.log10(0.3), 20):
        params = ModelParams(kappa=float(kappa), n_th=2.0)
        exact = steady_state(build_full_liouvillian(params)).concurrence
        worst = max(worst, abs(exact - bourret_concurrence(params)))
    return OracleCheck('bourret-vs-exact', worst < 0.05, worst, 0.05, 'n_th=2, kappa/gamma in [1e-3, 0.3]')


def _oracle_optimal_occupation() -> OracleCheck:
    params = ModelParams(kappa=1e-3)
    optimum = optimal_occupation(params)
    ratio = max(optimum.n_star_numeric / optimum.n_star, optimum.n_star / optimum.n_star_numeric)
    peak = mcf_steady(params.replace(n_th=optimum.n_star)).concurrence
    passed = ratio < 2.0 and abs(peak - optimum.concurrence_star) < 0.05
    return OracleCheck('optimal-occupation', passed, ratio, 2.0,
                       f'n*={optimum.n_star:.4g}, numeric argmax {optimum.n_star_numeric:.4g}, C_mcf={peak:.4f}')


QUICK_ORACLES: Tuple[Callable[[], OracleCheck], ...] = (
    _oracle_markov_closed_form,
    _oracle_separability,
    _oracle_kappa_max,
    _oracle_quasistatic_recovery,
    _oracle_scalar_factors,
    _oracle_exact_vs_cfrac,
    _oracle_bourret_closure,
)
SLOW_ORACLES: Tuple[Callable[[], OracleCheck], ...] = (
    _oracle_stochastic,
    _oracle_bourret_curve,
    _oracle_optimal_occupation,
)


def run_oracle_suite(quick: bool = True) -> List[OracleCheck]:
    """
    Run the cross-route consistency checks.

    A check whose solver raises is reported as failed with the error message.

    Args:
        quick: Skip the stochastic and long-sweep checks

    Returns:
        One OracleCheck per comparison
    """
    oracles = QUICK_ORACLES if quick else QUICK_ORACLES + SLOW_ORACLES
    checks = []
    for oracle in oracles:
        name = oracle.__name__.replace('_oracle_', '').replace('_', '-')
        try:
            check = oracle()
        except ThermalLinkError as e:
            check = OracleCheck(name, False, math.nan, math.nan, f"{type(e).__name__}: {e}")
        logger.debug("oracle %s: passed=%s value=%.3e", check.name, check.passed, check.value)
        checks.append(check)
    return checks


def oracle_frame(checks: List[OracleCheck]) -> pd.DataFrame:
    return pd.DataFrame([check.to_dict() for check in checks])
