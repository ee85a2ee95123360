"""Exception types shared across the package."""


class RtstError(Exception):
    """Base class for all package errors."""


class ValidationError(RtstError, ValueError):
    """Input data violates a documented invariant."""


class UnsupportedError(RtstError):
    """The requested operation is not defined for this structure or family."""


class InfeasibleError(RtstError):
    """The optimization problem has no feasible point."""


class NoRecourseError(InfeasibleError):
    """The first-stage vector cannot be completed to a feasible solution."""


class NumericalError(RtstError):
    """Iteration caps were hit or a numerical invariant was violated."""
