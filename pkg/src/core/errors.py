# /src/core/errors.py

from typing import Optional


class IonTrapError(Exception):
    """Base class for every error raised by this package."""


class DomainError(IonTrapError, ValueError):
    """An input lies outside the domain where a formula or solver is defined."""


class UnsupportedModelError(DomainError):
    """The selected continuum model does not define the requested quantity."""


class ConfigError(IonTrapError):
    """A run configuration could not be parsed or validated."""


class ConvergenceError(IonTrapError):
    def __init__(self, message: str, iterations: int, residual: float):
        super().__init__(f"{message} (iterations={iterations}, residual={residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class InstabilityError(IonTrapError):
    def __init__(self, message: str, eigenvalue: Optional[float] = None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class IntegrationAccuracyError(IonTrapError):
    def __init__(self, message: str, drift: float):
        super().__init__(f"{message} (norm drift={drift:.3e})")
        self.drift = drift


class IonIndexError(DomainError, IndexError):
    """An ion index lies outside 0..N-1."""
