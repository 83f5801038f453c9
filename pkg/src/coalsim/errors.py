"""Exception hierarchy shared by all modules.

The CLI maps :class:`RegimeError` and :class:`DomainError` to exit status 3.
"""


class CoalsimError(Exception):
    pass


class DomainError(CoalsimError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RegimeError(CoalsimError, ValueError):
    """Parameters fall outside the regime where a limit result applies."""


class BudgetError(CoalsimError, MemoryError):
    """A requested table or enumeration exceeds the configured size budget."""


class StepSizeError(CoalsimError, RuntimeError):
    """Integrator error is too large to judge an ODE residual."""
