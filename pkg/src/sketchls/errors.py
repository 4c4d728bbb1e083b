"""Exception hierarchy shared by the sketching toolkit."""

from __future__ import annotations


class SketchError(Exception):
    """Base class for all errors raised by this package."""


class RankDeficiencyError(SketchError, ValueError):
    """A matrix that must have full column rank does not.

    ``retryable`` is True when the failure comes from a random sketch draw, so
    a fresh draw with a new seed may succeed.
    """

    retryable = False


class SketchRankError(RankDeficiencyError):
    """A sketched matrix ``SX`` lost column rank (retryable)."""

    retryable = True


class IllConditionedError(SketchRankError):
    """``SX`` is numerically singular: condition number above the guard."""


class DataError(SketchError, ValueError):
    """Malformed input data (parse error, missing value, constant column)."""


class InfeasibleError(SketchError, ValueError):
    """A theory or cost-model query has no solution for the given parameters."""


class PersistentRankFailure(SketchError, RuntimeError):
    """Every retry of a random sketch produced a rank-deficient ``SX``."""
