"""Exception types shared across modules."""


class SolverError(RuntimeError):
    """A march produced non-finite values.

    ``level`` is the first time level that is not finite.
    """

    def __init__(self, message, level=None):
        super().__init__(message)
        self.level = level


class CFLError(ValueError):
    """Time step too large for the explicit transport term."""


class HypothesisError(ValueError):
    """Input violates a hypothesis required by the requested strategy."""


class DivergenceError(RuntimeError):
    """Fixed-point residual kept growing; ``trace`` holds the iterations so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace
