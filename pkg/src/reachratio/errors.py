"""Exception types shared across the package."""

from __future__ import annotations


class ReachRatioError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(ReachRatioError, ValueError):
    def __init__(self, message: str, line: int | None = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class CapacityError(ReachRatioError, OverflowError):
    """A node id does not fit the supported id width."""


class UsageError(ReachRatioError, ValueError):
    """An operation was called with arguments that violate its contract."""


class ConsistencyError(ReachRatioError, AssertionError):
    """An internal invariant failed; this always signals a bug."""


class CorrectnessError(ReachRatioError):
    """A computed answer disagrees with its reference answer."""


class WorkloadError(ReachRatioError):
    """The graph cannot supply the requested query mix."""
