"""Exception types raised by the solvers."""


class DomainError(ValueError):
    """Argument outside the domain of a math function or config."""


class SingularMatrixError(ArithmeticError):
    """A matrix that must be SPD could not be factorized, even with jitter."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class DivergenceError(ArithmeticError):
    """An iterative scheme produced non-positive or non-finite variances."""

    def __init__(self, message, iteration=None, diagnostics=None):
        super().__init__(message)
        self.iteration = iteration
        self.diagnostics = diagnostics or {}


class IterationLimitError(RuntimeError):
    """A solver without a usable partial answer hit its iteration cap."""
