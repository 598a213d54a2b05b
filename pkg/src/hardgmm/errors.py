"""Typed errors shared across the package."""


class DegenerateClusterError(ValueError):
    """A cluster cannot carry a spherical Gaussian: fewer than two points,
    or all points identical (zero variance)."""

    def __init__(self, message: str, cluster: int | None = None):
        super().__init__(message)
        self.cluster = cluster


class BudgetExceededError(RuntimeError):
    """An enumeration would exceed a configured budget cap.

    Raised loudly instead of truncating silently, so approximation
    guarantees are never invalidated without notice.
    """

    def __init__(self, message: str, requested=None, cap=None):
        super().__init__(message)
        self.requested = requested
        self.cap = cap


class InstanceFormatError(ValueError):
    """An instance or label file could not be parsed."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
