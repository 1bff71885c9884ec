"""Exception hierarchy shared across the package.

Every error raised on purpose derives from StochevalError so callers (and the
CLI) can catch one base class. Names mirror the failure they describe.
"""

from __future__ import annotations


class StochevalError(Exception):
    """Base class for all package errors."""


# --- model IR / LP format ---------------------------------------------------

class ModelError(StochevalError):
    """Invariant violation in a model component (names, bounds, references)."""


class InfeasibleTautology(StochevalError):
    """Constraint with empty lhs that can never hold (e.g. 0 <= -1)."""


class TrivialConstraint(StochevalError):
    """Constraint with empty lhs that always holds; safe to drop."""


class ParseError(StochevalError):
    """LP or compact-spec text violates the grammar."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class DuplicateName(ParseError):
    """Repeated constraint label or variable declaration."""


# --- deterministic-equivalent builders --------------------------------------

class DimensionMismatch(StochevalError):
    """Matrix/vector blocks of a spec disagree on dimensions."""


class ProbabilityError(StochevalError):
    """Scenario probabilities are negative or do not sum to one."""


class DomainError(StochevalError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedRandomness(StochevalError):
    """Randomness that the quantile reformulation cannot handle."""


class JointNotSupported(StochevalError):
    """Joint chance constraints are represented but never reformulated."""


# --- solver ------------------------------------------------------------------

class NumericBreakdown(StochevalError):
    """Simplex hit repeated near-zero pivots; result would be untrustworthy."""


# --- scoring ------------------------------------------------------------------

class CollisionError(StochevalError):
    """Variable renaming would produce a duplicate name."""


# --- runner / pipeline / harness ---------------------------------------------

class ConfigError(StochevalError):
    """Missing or malformed configuration."""


class ClientError(StochevalError):
    """Chat-completion call failed after retries."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class FixtureMiss(StochevalError):
    """Replay mode found no fixture for a request digest."""


class EmptyCompletion(StochevalError):
    """The completion endpoint returned no text."""


class UnboundPlaceholder(StochevalError):
    """A prompt template placeholder was not bound at render time."""


class CorpusError(StochevalError):
    """A problem instance on disk is missing pieces or fails validation."""
