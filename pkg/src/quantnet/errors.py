"""Exception hierarchy.

The CLI maps these onto process exit codes: ConfigError -> 2, DataError and
subclasses -> 3, NumericError -> 4. Everything raised by the library derives
from QuantNetError so callers can catch broadly.
"""

from __future__ import annotations


class QuantNetError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(QuantNetError):
    """Invalid configuration: bad flag values, malformed config files,
    windows longer than the data, reused run directories."""


class DataError(QuantNetError):
    """Problems with input data."""


class CsvParseError(DataError):
    """Malformed CSV cell or row. Carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InsufficientDataError(DataError):
    """Fewer usable observations than the operation requires."""


class AlignmentError(DataError):
    """Date mismatch between two inputs that must share a calendar."""


class SplitError(DataError):
    """Invalid train/validation split request."""


class ShapeError(QuantNetError):
    """Array dimensions do not match the declared layout."""


class NumericError(QuantNetError):
    """Non-finite value produced where a finite one is required.
    Carries the training step index when raised mid-training."""

    def __init__(self, message: str, step: int | None = None):
        self.step = step
        if step is not None:
            message = f"step {step}: {message}"
        super().__init__(message)


class BudgetExhausted(QuantNetError):
    """Wall-clock budget ran out before the requested work finished."""
