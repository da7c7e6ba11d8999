"""Typed exceptions shared across the engine and the CLI."""

from __future__ import annotations


class CoaldynError(Exception):
    """Base class for engine-level failures."""


class ConfigError(CoaldynError):
    """A configuration file or option set is malformed or inconsistent."""


class CapacityError(CoaldynError):
    """A requested computation exceeds the configured size budget."""


class NonConvergenceError(CoaldynError):
    """An iterative solver hit its cap before reaching tolerance."""

    def __init__(self, message: str, *, residual: float | None = None,
                 iterations: int | None = None) -> None:
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
