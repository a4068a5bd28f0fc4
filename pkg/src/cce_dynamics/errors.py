"""Exception hierarchy shared by all services."""
from __future__ import annotations

from typing import Optional


class CceDynamicsError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(CceDynamicsError, ValueError):
    """Empty vectors, dimension mismatches, zero matrices, malformed files."""


class ProjectionError(CceDynamicsError, RuntimeError):
    """An iterative projection or prox solve did not converge."""

    def __init__(self, message: str, residual: float, iterations: int) -> None:
        super().__init__(f"{message} (residual={residual:.3e}, iterations={iterations})")
        self.residual = residual
        self.iterations = iterations


class UnsupportedOperationError(CceDynamicsError, NotImplementedError):
    """The operation is not defined for the given polytope kind."""


class PerfectRecallError(InvalidInputError):
    def __init__(self, infoset_id: str, reason: str) -> None:
        super().__init__(f"Perfect recall violated at infoset '{infoset_id}': {reason}")
        self.infoset_id = infoset_id


class ConfigError(InvalidInputError):
    """Unknown or malformed experiment configuration key."""

    def __init__(self, message: str, key: Optional[str] = None) -> None:
        super().__init__(message)
        self.key = key
