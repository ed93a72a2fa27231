"""Exception hierarchy. The CLI maps these onto distinct exit codes."""


class ParameterError(ValueError):
    """Invalid argument values (usage error, exit code 2)."""


class DataError(ValueError):
    """Input data unusable for the requested computation (exit code 2)."""


class StateError(RuntimeError):
    """Operation not valid in the object's current state (exit code 2)."""


class NumericalError(RuntimeError):
    """A numerical procedure failed to converge (exit code 3)."""


class ResolutionError(RuntimeError):
    """Trace resolution insufficient for the requested scales (exit code 3)."""


class ResourceBudgetError(RuntimeError):
    """Computation would exceed a configured resource budget (exit code 4)."""
