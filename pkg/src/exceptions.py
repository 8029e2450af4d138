"""
Thermal Link - Exceptions Module
"""


class ThermalLinkError(Exception):
    """
    Base class for every error raised by the engine.
    """


class ParameterError(ThermalLinkError, ValueError):
    """
    A physical parameter is non-finite, out of range or inconsistent.
    """


class AsymmetricCouplingError(ParameterError):
    """
    A symmetric-coupling construction was given gamma1 != gamma2.
    """


class CutoffError(ThermalLinkError):
    """
    The cavity Fock truncation cannot represent the requested occupation.
    """


class DimensionMismatchError(ThermalLinkError, ValueError):
    """
    Array shapes do not factorize as expected.
    """


class InvalidStateError(ThermalLinkError, ValueError):
    """
    A matrix is not a valid density matrix within tolerance.
    """


class DegenerateSteadyStateError(ThermalLinkError):
    """
    The generator has more than one stationary state.
    """


class ConvergenceError(ThermalLinkError):
    """
    An iterative or adaptive procedure did not converge.
    """


class StepSizeError(ThermalLinkError, ValueError):
    """
    A fixed integration step is too coarse for the drive amplitude.
    """


class SingularBlockError(ThermalLinkError):
    """
    A block or scalar denominator of a continued fraction is singular.
    """

    def __init__(self, message: str, depth: int = None):
        super().__init__(message)
        self.depth = depth


class RootBracketError(ThermalLinkError):
    """
    No sign change inside the search bracket.
    """


class ConfigError(ThermalLinkError, ValueError):
    """
    A configuration file is malformed or violates the schema.
    """


class UnknownFigureError(ThermalLinkError, KeyError):
    """
    The requested figure bundle does not exist.
    """
