"""Exception types raised across the package.

Every error that callers are expected to catch derives from
:class:`GroupSynthError`, so CLI-level handling can stay coarse while tests
assert on the precise class.
"""

from __future__ import annotations


class GroupSynthError(Exception):
    """Base class for all package errors."""


class ConfigError(GroupSynthError):
    """Invalid or inconsistent experiment configuration."""


# -- dataset ingestion and sampling ------------------------------------------

class SchemaMismatch(GroupSynthError):
    """CSV header does not match the schema's column set."""


class ParseError(GroupSynthError):
    """A cell could not be parsed; carries the 1-based data row and column."""

    def __init__(self, row: int, column: str, message: str):
        super().__init__(f"row {row}, column {column!r}: {message}")
        self.row = row
        self.column = column


class BoundsViolation(GroupSynthError):
    """A parsed value falls outside the schema's declared domain."""


class InsufficientGroup(GroupSynthError):
    """A group cannot supply the requested number of rows."""

    def __init__(self, group: str, requested: int, available: int):
        super().__init__(
            f"group {group!r} has {available} rows, {requested} requested "
            f"(short by {requested - available})"
        )
        self.group = group
        self.requested = requested
        self.available = available


class ConstraintInfeasible(GroupSynthError):
    """The positive-example constraint cannot be met for some outcome."""


# -- prompt construction ------------------------------------------------------

class EmptyExamples(GroupSynthError):
    """serialize_examples called with zero rows."""


# -- generation backend -------------------------------------------------------

class TransportError(GroupSynthError):
    """Network failure or non-success HTTP status from the backend."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class AuthError(GroupSynthError):
    """API key environment variable is unset or empty."""


class MalformedResponse(GroupSynthError):
    """Backend response violates the dict-of-lists contract."""

    def __init__(self, message: str, key: str | None = None, index: int | None = None):
        super().__init__(message)
        self.key = key
        self.index = index


class RangeViolation(GroupSynthError):
    """A numeric value falls outside the acceptance range policy."""

    def __init__(self, message: str, key: str | None = None, index: int | None = None):
        super().__init__(message)
        self.key = key
        self.index = index


class BackendExhausted(GroupSynthError):
    """One batch failed the maximum number of consecutive attempts."""

    def __init__(self, batch_index: int, attempts: int, last_error: Exception):
        super().__init__(
            f"batch {batch_index} failed {attempts} consecutive attempts; "
            f"last error: {last_error}"
        )
        self.batch_index = batch_index
        self.attempts = attempts
        self.last_error = last_error


class TooFewExamples(GroupSynthError):
    """Mock generation needs at least two example rows."""


# -- training-set assembly ----------------------------------------------------

class TooFewRows(GroupSynthError):
    """An operation received fewer rows than it can work with."""


class SingleGroup(GroupSynthError):
    """Both group values must be present."""


class MissingSynthetic(GroupSynthError):
    """An LLM-augmentation method was assembled without synthetic rows."""


# -- model fitting ------------------------------------------------------------

class SingleClass(GroupSynthError):
    """Binary fit or metric received labels with only one class."""


class DimensionMismatch(GroupSynthError):
    """Matrix/vector dimensions do not line up."""


# -- metrics ------------------------------------------------------------------

class NoPositives(GroupSynthError):
    """Average precision is undefined without positive labels."""


class SkippedCell(GroupSynthError):
    """An evaluation cell cannot be computed; carries the reason."""

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


# -- diagnostics --------------------------------------------------------------

class EmptyReference(GroupSynthError):
    """Nearest-neighbor distances need a non-empty reference set."""


class TooFewPoints(GroupSynthError):
    """Density estimation needs at least two points."""
