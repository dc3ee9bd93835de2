"""Exception hierarchy shared by every module.

The CLI maps :class:`ConfigurationError` to exit status 2 and
:class:`NumericalError` to exit status 3.
"""


class Anderson1DError(Exception):
    """Base class."""


class ConfigurationError(Anderson1DError, ValueError):
    """Invalid input parameters (grid, tolerances, boundary data...)."""


class ResolutionError(ConfigurationError):
    """A length scale is not resolved by the grid."""


class UsageError(ConfigurationError):
    """Objects that must belong together do not (e.g. a histogram for another energy)."""


class NumericalError(Anderson1DError, ArithmeticError):
    """A computation could not reach its contract. ``payload`` carries diagnostics."""

    def __init__(self, message, **payload):
        super().__init__(message)
        self.payload = payload


class AccuracyError(NumericalError):
    """Quadrature tolerance not reached within the subdivision budget."""


class MagnitudeOverflowError(NumericalError):
    """Linear solution exceeded the magnitude cap; use the Prüfer representation."""


class PhaseMismatchError(NumericalError):
    """Left and right shooting phases disagree at the matching node."""


class FitQualityError(NumericalError):
    """Decay-rate fit window is too short."""


class InsufficientHorizonError(NumericalError):
    """Weyl circle radius at the largest horizon exceeds the requested tolerance."""


class DegenerateError(NumericalError):
    """Denominator or Wronskian numerically zero."""
