"""Exception hierarchy.

Two branches matter for exit codes: configuration problems (exit 2) and
numeric failures (exit 3). Everything else is a plain error.
"""


class VoteBoundError(Exception):
    """Base class for all package errors."""


class DomainError(VoteBoundError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DimensionError(VoteBoundError, ValueError):
    """Array shapes or index sets are inconsistent."""


class NumericError(VoteBoundError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy result."""


class ConvergenceError(NumericError):
    """An iterative scheme exhausted its budget before converging."""


class DegenerateGradientError(NumericError):
    """A gradient is requested at a point where it is not defined."""


class NonFiniteObjectiveError(NumericError):
    """Optimization hit a non-finite objective or gradient.

    Carries the step index and parameter vector for diagnosis.
    """

    def __init__(self, message, step=None, params=None):
        super().__init__(message)
        self.step = step
        self.params = params


class ConfigError(VoteBoundError, ValueError):
    """A run configuration is invalid; ``field`` holds the offending path."""

    def __init__(self, message, field=None):
        super().__init__(f"{field}: {message}" if field else message)
        self.field = field


class DataFormatError(VoteBoundError, ValueError):
    """A data file could not be parsed; ``line_number`` is 1-based."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number
