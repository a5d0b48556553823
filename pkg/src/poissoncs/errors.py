"""Shared exception types."""


class BudgetExceededError(ValueError):
    """An exhaustive enumeration would exceed its configured budget.

    Carries the offending count so callers can decide whether to raise the
    budget or switch to a sampled mode.
    """

    def __init__(self, message, required, budget):
        super().__init__(message)
        self.required = required
        self.budget = budget


class SolverDivergenceError(RuntimeError):
    """Iterative solver produced a non-finite objective; carries the trace."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace) if trace is not None else []
