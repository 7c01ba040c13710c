"""Exception and warning types shared across the package."""


class BrarError(Exception):
    """Base class for all package-specific errors."""


class InvalidArgumentError(BrarError, ValueError):
    """An argument violates a documented precondition (NaN, wrong range, wrong shape)."""


class CovarianceError(BrarError):
    """A matrix that must be symmetric positive definite is not."""


class DegeneratePriorError(BrarError):
    """A prior assigns zero probability to a region that must be normalized over."""


class TrialNotFoundError(BrarError):
    """No trial with the requested id exists in the store."""


class TrialConflictError(BrarError):
    """The requested trial operation conflicts with the recorded event log."""


class AccuracyWarning(UserWarning):
    """A numerical routine could not reach the requested tolerance.

    The warning message carries the best available estimate; callers that
    need hard guarantees should escalate via ``warnings.simplefilter``.
    """
