"""Exception hierarchy shared by every module of the package."""

from __future__ import annotations


class ConformalError(Exception):
    """Base class for all errors raised by blockconformal."""


class ValidationError(ConformalError, ValueError):
    """An input violates a documented precondition."""


class DimensionError(ValidationError):
    """Array shapes or sizes do not agree."""


class DivisibilityError(ValidationError):
    """The block size does not divide the series length in strict mode."""


class NumericalError(ConformalError, ArithmeticError):
    """A numerical routine hit a singular or non-finite state."""


class DegenerateGridError(NumericalError):
    """The automatic candidate grid would have zero width."""


class UnsupportedConfigurationError(ConformalError):
    """The requested combination of options has no implementation."""


class CsvParseError(ValidationError):
    """Malformed series CSV; ``line`` is the 1-based offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class GridPointError(ConformalError):
    """Scoring failed at one candidate of a grid."""

    def __init__(self, index: int, cause: Exception):
        self.index = index
        self.cause = cause
        super().__init__(f"grid point {index}: {type(cause).__name__}: {cause}")


class ReplicationError(ConformalError):
    """A Monte Carlo replication failed."""

    def __init__(self, replication: int, seed: str, cause: Exception):
        self.replication = replication
        self.seed = seed
        self.cause = cause
        super().__init__(
            f"replication {replication} (seed {seed}) failed: "
            f"{type(cause).__name__}: {cause}"
        )
