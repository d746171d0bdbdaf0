class HysterError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(HysterError, ValueError):
    """Invalid run configuration; ``path`` locates the offending JSON entry."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class NonConvergenceError(HysterError, RuntimeError):
    """An iterative solve stopped before reaching its tolerance."""

    def __init__(self, message: str, residual: float, step: int | None = None):
        super().__init__(message)
        self.residual = residual
        self.step = step
