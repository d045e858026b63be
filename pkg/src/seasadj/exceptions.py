"""Exception hierarchy shared by all seasadj modules."""


class SeasAdjError(Exception):
    """Base class for every error raised by this package."""


class SpecificationError(SeasAdjError, ValueError):
    """Model specification or matrix dimensions are inconsistent."""


class UsageError(SeasAdjError, ValueError):
    """An operation was called with arguments outside its contract."""


class ConstraintViolationError(SeasAdjError, ValueError):
    """AR coefficients or PARCORs fall outside the stationary region."""


class NumericalDegeneracyError(SeasAdjError, ArithmeticError):
    """The filter produced a non-positive innovation variance.

    Attributes
    ----------
    step : int or None
        Zero-based time index at which the degeneracy was detected.
    """

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class DegenerateFitError(NumericalDegeneracyError):
    """The concentrated scale is zero (the model interpolates the data)."""


class EstimationError(SeasAdjError, RuntimeError):
    """No optimizer start produced a finite objective."""
