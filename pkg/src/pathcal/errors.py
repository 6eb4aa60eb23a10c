"""Exception and warning types shared across the package."""


class PathcalError(Exception):
    """Base class for all errors raised by pathcal."""


class DomainError(PathcalError, ValueError):
    """A basis function was evaluated outside its domain (log of a non-positive value)."""


class SingularGram(PathcalError, ArithmeticError):
    """The Gram matrix is numerically singular; the basis functions are not linearly independent."""

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition


class DegenerateRange(PathcalError, ValueError):
    """Max equals min in a sequence that must be range-normalized."""


class ZeroMeasurement(PathcalError, ValueError):
    """A measured value of zero makes the percentage error undefined."""


class DataError(PathcalError, ValueError):
    """Malformed measurement, scenario, model or report input."""


class RampOffGridWarning(UserWarning):
    """A model with index-ramp terms was evaluated without a sample index."""
