"""
Thermal Link - Analytic Module

Closed-form steady states, the Upsilon kernel, Bourret results, coherence
functions and physical-unit helpers.
"""
import logging
import math
from dataclasses import dataclass, asdict
from typing import Dict, Tuple, Union

import numpy as np
import scipy.constants
import scipy.optimize
import scipy.special

from src.exceptions import ConvergenceError, ParameterError, RootBracketError
from src.operators import KET_00, KET_11, KET_S, KET_T
from src.params import ModelParams

logger = logging.getLogger(__name__)

MACHEP = 1.11022302462515654042e-16
BIG = 4.503599627370496e15
BIGINV = 2.22044604925031308085e-16
MAX_CF_ITERATIONS = 5000

# CODATA 2018 exact values: h = 6.62607015e-34 J s, k_B = 1.380649e-23 J/K
PLANCK = scipy.constants.h
BOLTZMANN = scipy.constants.k

REGIMES = ('markov', 'quasistatic', 'bourret-lowest', 'bourret-full', 'closed-form', 'three-level')


@dataclass(frozen=True)
class AnalyticPrediction:
    """
    Triplet-singlet populations and concurrence of a closed-form result.
    """
    rho_00: float
    rho_T: float
    rho_S: float
    rho_11: float
    concurrence: float
    regime: str

    def populations(self) -> np.ndarray:
        return np.array([self.rho_00, self.rho_T, self.rho_S, self.rho_11])

    def to_state(self):
        """Diagonal QubitState in the {|00>, |T>, |S>, |11>} basis."""
        from src.solvers import QubitState

        entries = sum(p * np.outer(ket, ket.conj())
                      for p, ket in zip(self.populations(), (KET_00, KET_T, KET_S, KET_11)))
        return QubitState(entries)

    def to_dict(self) -> Dict[str, Union[float, str]]:
        return asdict(self)


def x_state_concurrence(rho_00: float, rho_T: float, rho_S: float, rho_11: float) -> float:
    """max(0, rho_S - rho_T - 2 sqrt(rho_00 rho_11))"""
    return max(0.0, rho_S - rho_T - 2.0 * math.sqrt(max(rho_00 * rho_11, 0.0)))


def _scaled_exp1_cf(z: float) -> float:
    """
    e^z E1(z) for z >= 1 from the incomplete-gamma continued fraction at a = 0.
    """
    y = 1.0
    w = z + y + 1.0
    c = 0.0
    pkm2, qkm2 = 1.0, z
    pkm1, qkm1 = z + 1.0, w * z
    ans = pkm1 / qkm1
    for _ in range(MAX_CF_ITERATIONS):
        c += 1.0
        y += 1.0
        w += 2.0
        yc = y * c
        pk = pkm1 * w - pkm2 * yc
        qk = qkm1 * w - qkm2 * yc
        if qk != 0:
            r = pk / qk
            t = abs((ans - r) / r)
            ans = r
        else:
            t = 1.0
        pkm2, pkm1 = pkm1, pk
        qkm2, qkm1 = qkm1, qk
        if abs(pk) > BIG:
            pkm2 *= BIGINV
            pkm1 *= BIGINV
            qkm2 *= BIGINV
            qkm1 *= BIGINV
        if t <= MACHEP:
            return ans
    raise ConvergenceError(f"e^z E1(z) continued fraction did not converge at z={z}")


def scaled_exp1(z: float) -> float:
    """
    e^z E1(z) without overflow for large z.
    """
    if z <= 0:
        raise ParameterError(f"scaled_exp1 needs z > 0, got {z}")
    if z < 1.0:
        return float(math.exp(z) * scipy.special.exp1(z))
    return _scaled_exp1_cf(z)


def _upsilon_scalar(x: float) -> float:
    if not x > 0:
        raise ParameterError(f"upsilon needs x > 0, got {x}")
    if math.isinf(x):
        return 0.0
    z = 1.0 / (8.0 * x)
    return z * scaled_exp1(z)


def upsilon(x):
    """
    Upsilon(x) = z e^z E1(z) with z = 1/(8x), the thermal average of the
    ground-state weight of the dark state.

    Args:
        x: Phi/gamma (> 0), scalar or array

    Returns:
        Value in (0, 1) with the shape of x

    Raises:
        ParameterError: If any x <= 0
    """
    if np.ndim(x) == 0:
        return _upsilon_scalar(float(x))
    return np.vectorize(_upsilon_scalar, otypes=[float])(np.asarray(x, dtype=float))


def markov_steady(n_th: float) -> AnalyticPrediction:
    """
    Product of two thermal qubits at occupation n_th.
    """
    if n_th < 0:
        raise ParameterError(f"n_th must be >= 0, got {n_th}")
    norm = (1.0 + 2.0 * n_th) ** 2
    shared = n_th * (n_th + 1.0) / norm
    return AnalyticPrediction(
        rho_00=(n_th + 1.0) ** 2 / norm,
        rho_T=shared,
        rho_S=shared,
        rho_11=n_th ** 2 / norm,
        concurrence=0.0,
        regime='markov',
    )


def quasistatic_steady(phi_over_gamma: float) -> AnalyticPrediction:
    """
    Dark-state mixture averaged over a frozen thermal amplitude.
    """
    if phi_over_gamma < 0:
        raise ParameterError(f"phi/gamma must be >= 0, got {phi_over_gamma}")
    ground = 1.0 if phi_over_gamma == 0 else upsilon(phi_over_gamma)
    return AnalyticPrediction(rho_00=ground, rho_T=0.0, rho_S=1.0 - ground, rho_11=0.0,
                              concurrence=1.0 - ground, regime='quasistatic')


def _require_positive_rates(params: ModelParams) -> float:
    gamma = params.gamma
    if gamma <= 0 or params.kappa <= 0:
        raise ParameterError("Bourret results need gamma > 0 and kappa > 0")
    return gamma


def bourret_steady(params: ModelParams, order: str = 'full') -> AnalyticPrediction:
    """
    Bourret (decorrelation) steady state.

    Args:
        params: Symmetric parameters with gamma, kappa > 0
        order: 'full' for the exact Bourret populations, 'lowest' for the
            forms expanded to the lowest relevant order in kappa/gamma

    Returns:
        AnalyticPrediction with regime bourret-full or bourret-lowest
    """
    g = _require_positive_rates(params)
    k, f = params.kappa, params.phi
    if order == 'full':
        a = (3 * g + 2 * k) ** 2
        b = g + 2 * k
        norm = b * (b + 8 * f) * (a + 8 * f * b)
        rho_11 = 64 * k * f ** 2 * (g + k) / norm
        rho_T = 8 * k * f * (a + 8 * f * (g + k)) / norm
        rho_S = 8 * f * ((g + k) * a + 8 * f * (g ** 2 + k ** 2 + g * k)) / norm
        rho_00 = (64 * k * f ** 2 * (g + k) + 8 * f * b ** 3 + b ** 2 * a) / norm
        regime = 'bourret-full'
    elif order == 'lowest':
        rho_11 = 64 * k * f ** 2 / (g * (g + 8 * f) * (9 * g + 8 * f))
        rho_T = 8 * k * f / (g * (g + 8 * f))
        rho_S = (8 * f / (g + 8 * f)
                 - 8 * k * f * (27 * g ** 2 + 112 * g * f + 192 * f ** 2)
                 / (g * (g + 8 * f) ** 2 * (9 * g + 8 * f)))
        rho_00 = g / (g + 8 * f)
        regime = 'bourret-lowest'
    else:
        raise ParameterError(f"order must be 'full' or 'lowest', got {order!r}")
    return AnalyticPrediction(rho_00=rho_00, rho_T=rho_T, rho_S=rho_S, rho_11=rho_11,
                              concurrence=x_state_concurrence(rho_00, rho_T, rho_S, rho_11),
                              regime=regime)


def _bourret_concurrence_raw(gamma: float, kappa: float, phi: float) -> float:
    g, k, f = gamma, kappa, phi
    return (8 * f / (g + 8 * f)
            - 16 * f * math.sqrt(k) / ((g + 8 * f) * math.sqrt(9 * g + 8 * f))
            - 32 * k * f * (3 * g + 8 * f) ** 2 / (g * (g + 8 * f) ** 2 * (9 * g + 8 * f)))


def bourret_concurrence(params: ModelParams) -> float:
    """
    Three-term lowest-order Bourret concurrence, clipped at 0.
    """
    gamma = _require_positive_rates(params)
    return max(0.0, _bourret_concurrence_raw(gamma, params.kappa, params.phi))


def kappa_max(params: ModelParams, lower: float = 1e-9, upper: float = 1.0) -> float:
    """
    Largest bandwidth with Bourret entanglement at fixed n_th.

    Brent root of the unclipped Bourret concurrence in kappa on
    (lower, upper) * gamma, with Phi = kappa n_th / 2.

    Returns:
        kappa_max in the units of gamma

    Raises:
        RootBracketError: If the concurrence does not change sign
    """
    gamma = params.gamma
    if params.n_th <= 0:
        raise ParameterError("kappa_max needs n_th > 0")

    def concurrence_at(kappa):
        return _bourret_concurrence_raw(gamma, kappa, kappa * params.n_th / 2)

    low, high = lower * gamma, upper * gamma
    if concurrence_at(low) * concurrence_at(high) > 0:
        raise RootBracketError(
            f"Bourret concurrence has no sign change for kappa/gamma in ({lower}, {upper}) at n_th={params.n_th}"
        )
    root = scipy.optimize.brentq(concurrence_at, low, high, xtol=1e-14 * gamma, rtol=1e-12)
    logger.debug("kappa_max/gamma = %.6f at n_th=%g", root / gamma, params.n_th)
    return root


def bourret_saturation(params: ModelParams) -> float:
    """Large-flux limit 1 - 4 kappa/gamma of the Bourret concurrence."""
    return max(0.0, 1.0 - 4.0 * params.kappa / params.gamma)


def coherence_functions(kappa: float, tau) -> Tuple:
    """
    First- and second-order coherence of the filtered thermal field.

    Returns:
        (g1, g2) = (exp(-kappa tau), 1 + exp(-2 kappa tau))
    """
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0):
        raise ParameterError("tau must be >= 0")
    g1 = np.exp(-kappa * tau)
    g2 = 1.0 + np.exp(-2.0 * kappa * tau)
    if g1.ndim == 0:
        return float(g1), float(g2)
    return g1, g2


def thermal_occupation(temperature_K: float, frequency_Hz: float) -> float:
    """
    Bose-Einstein occupation 1/(exp(h f / k_B T) - 1).
    """
    if temperature_K <= 0 or frequency_Hz <= 0:
        raise ParameterError("temperature and frequency must be > 0")
    ratio = PLANCK * frequency_Hz / (BOLTZMANN * temperature_K)
    if ratio > 700:
        return 0.0
    return float(1.0 / math.expm1(ratio))


def angular_rate(frequency_Hz: float) -> float:
    """2 pi f"""
    return 2.0 * math.pi * frequency_Hz


def flux_from_occupation(kappa: float, n_th: float) -> float:
    return kappa * n_th / 2


def occupation_from_flux(kappa: float, phi: float) -> float:
    if kappa <= 0:
        raise ParameterError("kappa must be > 0")
    return 2.0 * phi / kappa


def dark_state(alpha: complex, params: ModelParams) -> np.ndarray:
    """
    Pure state sqrt(gamma)|00> + 2 sqrt(2 kappa) alpha |S>, normalized.

    Annihilated by S- and by the conditional Hamiltonian for a constant
    amplitude alpha at zero detuning.
    """
    gamma = params.gamma
    ket = math.sqrt(gamma) * KET_00 + 2.0 * math.sqrt(2.0 * params.kappa) * alpha * KET_S
    return ket / np.linalg.norm(ket)
