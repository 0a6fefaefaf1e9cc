"""Exception types shared across the package."""


class Phi4WickError(Exception):
    """Base class for all package errors."""


class TruncationMismatchError(Phi4WickError, ValueError):
    """Two truncated objects with different orders were combined."""


class NotInvertibleError(Phi4WickError, ValueError):
    """A functional with value at 1 different from 1 cannot be inverted."""


class DomainError(Phi4WickError, ValueError):
    """An argument lies outside the domain of an operation."""


class SizeLimitError(Phi4WickError):
    """A brute-force routine was asked for an input beyond its size bound."""


class AliasingError(Phi4WickError, ValueError):
    """The quadrature grid cannot resolve the retained Fourier modes."""
