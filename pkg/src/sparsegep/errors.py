"""Exception types raised by the solvers and builders."""


class SparseGepError(Exception):
    """Base class for all package errors."""


class InvalidInputError(SparseGepError, ValueError):
    """Malformed, non-finite or out-of-range input."""


class DefinitenessError(SparseGepError):
    """A matrix required to be positive definite is not."""


class RankDeficiencyError(SparseGepError):
    """A matrix required to have full column rank does not.

    Attributes
    ----------
    rank : int
        Numerical rank that was detected.
    """

    def __init__(self, message, rank):
        super().__init__(message)
        self.rank = rank


class OverPenalizationError(SparseGepError):
    """The penalized solve returned the zero matrix."""

    def __init__(self, message, lam):
        super().__init__(message)
        self.lam = lam


class TuningError(SparseGepError):
    """No grid point produced a usable estimate."""
