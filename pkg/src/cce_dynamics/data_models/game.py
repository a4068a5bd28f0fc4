from __future__ import annotations

from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from cce_dynamics.data_models.polytopes import StrategyPolytope


class NormalizationMethod(str, Enum):
    """How the normalization scale of a payoff matrix was obtained."""

    EXACT_VERTEX_MAX = "exact_vertex_max"
    OPERATOR_NORM_BOUND = "operator_norm_bound"


class BimatrixGame(BaseModel):
    """
    Two-player game with payoffs x^T A y (row player X) and x^T B y (column player Y).

    X plays over `polytope_x` (dimension n), Y over `polytope_y` (dimension m).
    Both matrices are n x m.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    a_matrix: np.ndarray
    b_matrix: np.ndarray
    polytope_x: StrategyPolytope = Field(discriminator="kind")
    polytope_y: StrategyPolytope = Field(discriminator="kind")
    name: str

    @field_validator("a_matrix", "b_matrix", mode="before")
    @classmethod
    def _as_float_matrix(cls, value):
        arr = np.array(value, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"payoff matrix must be 2-dimensional, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("payoff matrix has non-finite entries")
        arr.setflags(write=False)
        return arr

    @model_validator(mode="after")
    def _check_dimensions(self) -> "BimatrixGame":
        n, m = self.polytope_x.dimension, self.polytope_y.dimension
        for label, mat in (("a_matrix", self.a_matrix), ("b_matrix", self.b_matrix)):
            if mat.shape != (n, m):
                raise ValueError(f"{label} has shape {mat.shape}, polytopes require {(n, m)}")
        if not (np.any(self.a_matrix) or np.any(self.b_matrix)):
            raise ValueError("at least one payoff matrix must have a nonzero entry")
        return self

    @property
    def shape(self) -> tuple[int, int]:
        return self.a_matrix.shape

    @property
    def is_normal_form(self) -> bool:
        return self.polytope_x.kind == "simplex" and self.polytope_y.kind == "simplex"


class NormalizationReport(BaseModel):
    scale_a: float = Field(gt=0.0)
    scale_b: float = Field(gt=0.0)
    method: NormalizationMethod
