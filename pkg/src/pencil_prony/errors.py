"""Exception hierarchy shared by every stage of the recovery pipeline."""


class PronyError(Exception):
    """Base class for all errors raised by this package."""


class InputError(PronyError, ValueError):
    """Malformed or inconsistent input (shapes, dimensions, ranges)."""


class CapacityError(PronyError):
    """Problem size exceeds what can be addressed in memory."""


class DomainError(PronyError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ConvergenceError(PronyError):
    """An iterative method hit its iteration cap.

    ``state`` carries whatever partial results the method had accumulated,
    so callers can inspect how far it got.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


class RankOverflowError(PronyError):
    """The block power method found no singular-value drop within ``r0``."""

    def __init__(self, message, r0=None):
        super().__init__(message)
        self.r0 = r0


class RankDeficiencyError(PronyError):
    """Least-squares matrix is numerically rank deficient."""


class SingularScaleError(PronyError):
    """Smallest retained singular value too small to invert safely."""


class SingularBasisError(PronyError):
    """Eigenvector matrix is numerically singular; redraw the combination."""


class EmptyModelError(PronyError):
    """Detected numerical rank is zero, so there is nothing to recover."""
