"""Exception hierarchy shared by all modules."""


class OptimalKError(Exception):
    """Base class for computational errors raised by this package."""


class BoundsError(OptimalKError, ValueError):
    """Order or bias level outside the supported envelope."""


class CapacityError(OptimalKError, OverflowError):
    """An exact intermediate does not fit the supported integer width."""


class InvalidGramError(OptimalKError, ValueError):
    """Lag products that cannot come from a normalized difference sequence."""


class ConvergenceError(OptimalKError, ArithmeticError):
    """Simultaneous root iteration hit its cap without converging."""

    def __init__(self, message, worst_residual=None):
        super().__init__(message)
        self.worst_residual = worst_residual


class SelectionError(OptimalKError, ArithmeticError):
    """Root selection produced a non-real or incomplete factor."""


class InsufficientDataError(OptimalKError, ValueError):
    """Fewer observations than the difference order requires."""
