"""Exception hierarchy; every error knows the CLI exit code it maps to."""
from typing import Any, Optional

from utils.app_constants import AppConstants


class PimsnerError(Exception):
    """Base class for all toolkit errors."""

    exit_code = AppConstants.EXIT_INVALID_INPUT


class InvalidInputError(PimsnerError, ValueError):
    """Input that does not describe a valid object."""


class GraphFormatError(InvalidInputError):
    """Malformed graph file; `location` names the offending field."""

    def __init__(self, message: str, location: Optional[str] = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class PathCapExceeded(InvalidInputError):
    """Path enumeration would exceed the configured cap."""

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(f"{count} paths exceed the path cap {cap}")


class DegreeMismatchError(InvalidInputError):
    """Operands of incompatible tensor degree."""


class SinkError(InvalidInputError):
    """A vertex without outgoing edges blocks Cuntz-Krieger expansion."""


class InvalidClassError(InvalidInputError):
    """A matrix that is not a partial isometry with projections over the unitisation."""


class ModularConditionError(InvalidInputError):
    """The modular condition fails; `witness` holds the measured defects."""

    def __init__(self, message: str, witness: Any = None):
        self.witness = witness
        super().__init__(message)


class ConvergenceError(PimsnerError, RuntimeError):
    """A limit, iteration or truncation did not settle."""

    exit_code = AppConstants.EXIT_NON_CONVERGENCE


class NonConvergenceError(ConvergenceError):
    """Iteration budget exhausted; `residual` is the last measured residual."""

    def __init__(self, message: str, residual: Optional[float] = None):
        self.residual = residual
        suffix = f" (residual {residual:.3e})" if residual is not None else ""
        super().__init__(message + suffix)


class StabilizationError(ConvergenceError):
    """Index results kept changing across truncation levels."""

    def __init__(self, message: str, levels: Any = None):
        self.levels = levels
        super().__init__(message)


class WindowTooSmallError(ConvergenceError):
    """The Ξ window cannot certify a computation; retry with larger windows."""


class InternalCheckError(PimsnerError, AssertionError):
    """An identity that must hold failed: the implementation is falsified."""

    exit_code = AppConstants.EXIT_INTERNAL_CHECK
