"""
Thermal Link - Model Parameters Module
"""
import math
from dataclasses import dataclass, asdict, fields, replace as dataclass_replace
from typing import Dict, Optional, Tuple

from src.exceptions import AsymmetricCouplingError, CutoffError, ParameterError

DEFAULT_TAIL_TOLERANCE = 1e-8
MAX_EXACT_OCCUPATION = 200.0
CUTOFF_TAIL_MARGIN = 10.0


def default_fock_cutoff(n_th: float, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE) -> int:
    """
    Smallest cavity truncation for the thermal state at mean occupation n_th/2.

    Takes the larger of ceil(n/2 + 6*sqrt(n/2 + 1)) and the smallest N whose
    geometric tail (m/(m+1))**N lies below tail_tolerance / CUTOFF_TAIL_MARGIN,
    m = n_th/2. The margin leaves room for the occupation raised by cavity
    backaction, so the steady-state tail check still passes at tail_tolerance.

    Args:
        n_th: Source occupation
        tail_tolerance: Allowed population above the cutoff

    Returns:
        Fock cutoff N (number of retained levels), at least 2
    """
    mean = n_th / 2.0
    heuristic = math.ceil(mean + 6.0 * math.sqrt(mean + 1.0))
    if mean == 0.0:
        return max(2, heuristic)
    ratio = mean / (mean + 1.0)
    tail_based = math.ceil(math.log(tail_tolerance / CUTOFF_TAIL_MARGIN) / math.log(ratio))
    return max(2, heuristic, tail_based)


@dataclass(frozen=True)
class ModelParams:
    """
    Rates, detunings, occupation and imperfection knobs of the thermal link.

    All rates share one angular-frequency unit; gamma1 = 1 is the usual choice.
    """
    gamma1: float = 1.0
    gamma2: float = 1.0
    kappa: float = 0.01
    n_th: float = 0.0
    delta1: float = 0.0
    delta2: float = 0.0
    gamma_phi: float = 0.0
    p_loss: float = 0.0
    fock_cutoff: Optional[int] = None
    k0z1: Optional[float] = None
    k0z2: Optional[float] = None

    RATE_FIELDS = ('gamma1', 'gamma2', 'kappa', 'gamma_phi')
    SYMMETRY_TOLERANCE = 1e-12

    def __post_init__(self):
        self.validate()

    def validate(self) -> bool:
        """
        Check finiteness and ranges of every field.

        Returns:
            True if valid

        Raises:
            ParameterError: If any field is non-finite or out of range
        """
        for field in fields(self):
            value = getattr(self, field.name)
            if value is None:
                continue
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ParameterError(f"{field.name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise ParameterError(f"{field.name} must be finite, got {value}")
        for name in self.RATE_FIELDS:
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.n_th < 0:
            raise ParameterError(f"n_th must be >= 0, got {self.n_th}")
        if not 0.0 <= self.p_loss <= 1.0:
            raise ParameterError(f"p_loss must lie in [0, 1], got {self.p_loss}")
        if self.fock_cutoff is not None:
            if int(self.fock_cutoff) != self.fock_cutoff or self.fock_cutoff < 2:
                raise ParameterError(f"fock_cutoff must be an integer >= 2, got {self.fock_cutoff}")
        if (self.k0z1 is None) != (self.k0z2 is None):
            raise ParameterError("k0z1 and k0z2 must be given together")
        return True

    @classmethod
    def from_flux(cls, phi: float, kappa: float, **kwargs) -> 'ModelParams':
        """
        Build parameters from the photon flux instead of the occupation.

        Args:
            phi: Photon flux Phi = kappa*n_th/2
            kappa: Cavity half bandwidth (> 0)
            **kwargs: Remaining ModelParams fields

        Returns:
            ModelParams with n_th = 2*phi/kappa
        """
        if kappa <= 0:
            raise ParameterError("kappa must be > 0 to convert a flux into an occupation")
        if phi < 0:
            raise ParameterError(f"phi must be >= 0, got {phi}")
        return cls(kappa=kappa, n_th=2.0 * phi / kappa, **kwargs)

    @property
    def phi(self) -> float:
        return self.kappa * self.n_th / 2

    @property
    def delta_a(self) -> float:
        return (self.delta1 - self.delta2) / 2

    @property
    def delta_s(self) -> float:
        return (self.delta1 + self.delta2) / 2

    @property
    def is_symmetric(self) -> bool:
        return abs(self.gamma1 - self.gamma2) <= self.SYMMETRY_TOLERANCE * max(self.gamma1, self.gamma2, 1.0)

    @property
    def gamma(self) -> float:
        """
        Common decay rate of a symmetric configuration.

        Raises:
            AsymmetricCouplingError: If gamma1 != gamma2
        """
        if not self.is_symmetric:
            raise AsymmetricCouplingError(
                f"symmetric coupling required, got gamma1={self.gamma1}, gamma2={self.gamma2}"
            )
        return self.gamma1

    @property
    def positions(self) -> Optional[Tuple[float, float]]:
        if self.k0z1 is None:
            return None
        return (self.k0z1, self.k0z2)

    def cutoff(self, tail_tolerance: float = DEFAULT_TAIL_TOLERANCE) -> int:
        """
        Fock cutoff in use: the explicit field or the default for n_th.
        """
        if self.fock_cutoff is not None:
            return int(self.fock_cutoff)
        return default_fock_cutoff(self.n_th, tail_tolerance)

    def check_exact_reach(self):
        """
        Raises:
            CutoffError: If n_th is too large for a Fock-space treatment
        """
        if self.n_th > MAX_EXACT_OCCUPATION:
            raise CutoffError(
                f"exact simulations are limited to n_th <= {MAX_EXACT_OCCUPATION:g}, got {self.n_th:g}"
            )

    def replace(self, **changes) -> 'ModelParams':
        return dataclass_replace(self, **changes)

    def to_dict(self) -> Dict[str, Optional[float]]:
        return asdict(self)
