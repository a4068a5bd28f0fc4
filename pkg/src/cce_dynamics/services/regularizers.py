"""
Regularizers for optimistic mirror descent.

A regularizer must be 1-strongly convex and G-smooth on the strategy set and
provide the proximal step

    prox(center, g, eta) = argmax_x <x, g> - (1/eta) * D_R(x || center)

used for both the primary and the secondary OMD update.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from cce_dynamics.config import PROJECTION_TOL
from cce_dynamics.data_models.polytopes import StrategyPolytope
from cce_dynamics.errors import InvalidInputError
from cce_dynamics.services.polytope_service import is_feasible, project, regularizer_min


class Regularizer(ABC):
    #: smoothness constant G of the gradient
    smoothness: float = 1.0

    @abstractmethod
    def value(self, x: np.ndarray) -> float:
        ...

    @abstractmethod
    def gradient(self, x: np.ndarray) -> np.ndarray:
        ...

    @abstractmethod
    def minimizer(self, p: StrategyPolytope, tol: float = PROJECTION_TOL) -> np.ndarray:
        ...

    @abstractmethod
    def prox(
        self, p: StrategyPolytope, center: np.ndarray, g: np.ndarray, eta: float, tol: float = PROJECTION_TOL
    ) -> np.ndarray:
        ...

    def bregman(self, x: np.ndarray, z: np.ndarray) -> float:
        return self.value(x) - self.value(z) - float(self.gradient(z) @ (x - z))


class QuadraticRegularizer(Regularizer):
    """
    R(x) = alpha/2 * ||x - c||^2 (c = 0 when no center is given).

    Its Bregman divergence is alpha/2 * ||x - z||^2, so the prox step is a
    Euclidean projection of center + (eta / alpha) * g.
    """

    def __init__(self, alpha: float = 1.0, center: Optional[np.ndarray] = None) -> None:
        if alpha < 1.0:
            raise InvalidInputError(f"alpha={alpha} is not 1-strongly convex; need alpha >= 1")
        self.alpha = float(alpha)
        self.center = None if center is None else np.asarray(center, dtype=float)
        self.smoothness = self.alpha

    def _shift(self, x: np.ndarray) -> np.ndarray:
        return x if self.center is None else x - self.center

    def value(self, x: np.ndarray) -> float:
        d = self._shift(np.asarray(x, dtype=float))
        return 0.5 * self.alpha * float(d @ d)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.alpha * self._shift(np.asarray(x, dtype=float))

    def minimizer(self, p: StrategyPolytope, tol: float = PROJECTION_TOL) -> np.ndarray:
        if self.center is None:
            return regularizer_min(p, tol)
        if is_feasible(p, self.center):
            return self.center.copy()
        return project(p, self.center, tol)

    def prox(
        self, p: StrategyPolytope, center: np.ndarray, g: np.ndarray, eta: float, tol: float = PROJECTION_TOL
    ) -> np.ndarray:
        return project(p, center + (eta / self.alpha) * g, tol)


class EuclideanRegularizer(QuadraticRegularizer):
    """1/2 ||x||^2; OMD with this regularizer is optimistic gradient descent."""

    def __init__(self) -> None:
        super().__init__(alpha=1.0)


class CenteredEuclideanRegularizer(QuadraticRegularizer):
    def __init__(self, center: np.ndarray) -> None:
        super().__init__(alpha=1.0, center=center)


class ScaledEuclideanRegularizer(QuadraticRegularizer):
    def __init__(self, alpha: float) -> None:
        super().__init__(alpha=alpha)
