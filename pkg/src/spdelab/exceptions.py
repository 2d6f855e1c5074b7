"""Exception taxonomy shared across the package."""


class SpdeLabError(Exception):
    """Base class for all package-specific errors."""


class CapacityError(SpdeLabError):
    """A requested resolution exceeds the configured memory guard."""


class DomainError(SpdeLabError, ValueError):
    """An argument is outside the documented domain of an operation."""


class FactorizationError(SpdeLabError):
    """A matrix factorization failed (e.g. input not positive definite)."""


class NumericalError(SpdeLabError):
    """A linear solve produced an unacceptable residual or diverged."""


class InsufficientDataError(SpdeLabError, ValueError):
    """Too few data points for the requested estimate."""


class DegenerateReferenceError(SpdeLabError):
    """A relative error was requested against a zero reference solution."""


class StatisticalAlarm(SpdeLabError):
    """A Monte Carlo check flagged an inequality-violation candidate.

    Raised only after the automatic rerun at increased sample size also
    produced a degenerate estimate.
    """
