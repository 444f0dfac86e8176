"""Exception types shared across the package."""


class QueueproxError(Exception):
    """Base class for every error this package raises on purpose."""


class DimensionMismatchError(QueueproxError, ValueError):
    """Inputs disagree on the ambient dimension."""


class DomainError(QueueproxError, ValueError):
    """A divergence or mirror step was evaluated outside its domain."""


class OracleError(QueueproxError, ValueError):
    """A loss or constraint oracle returned a non-finite value."""

    def __init__(self, message: str, oracle: str = "", round_index: int | None = None):
        super().__init__(message)
        self.oracle = oracle
        self.round_index = round_index


class InfeasibleError(QueueproxError, ValueError):
    """The constrained feasible region is empty (or numerically so)."""

    def __init__(self, message: str, constraint_index: int):
        super().__init__(message)
        self.constraint_index = constraint_index


class ConvergenceError(QueueproxError, RuntimeError):
    """An iterative solve stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class ScheduleError(QueueproxError, RuntimeError):
    """The proximal weight schedule was violated at runtime."""


class UnsupportedFamilyError(QueueproxError, ValueError):
    """The requested operation is not available for this family."""


class ConfigError(QueueproxError, ValueError):
    """A scenario or sweep configuration failed validation."""

    def __init__(self, message: str, fields: list[str] | None = None):
        super().__init__(message)
        self.fields = list(fields or [])
