"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid model or generator parameters."""


class UsageError(ValueError):
    """Invalid call arguments (bad node ids, empty source sets, ...)."""


class ResourceError(RuntimeError):
    """A computation would exceed its configured size or memory budget."""


class InfeasibleObservationError(ValueError):
    """The observed active set has zero likelihood under every source."""
