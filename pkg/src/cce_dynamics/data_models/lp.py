from __future__ import annotations

from enum import Enum
from typing import List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator


class LPStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    FAILED = "failed"  # numerical breakdown or iteration cap; see `message`


class LinearProgram(BaseModel):
    """
    maximize  objective^T x
    s.t.      eq_lhs x = eq_rhs
              ub_lhs x <= ub_rhs
              x >= var_lower   (entries may be -inf)
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    objective: np.ndarray
    eq_lhs: Optional[np.ndarray] = None
    eq_rhs: Optional[np.ndarray] = None
    ub_lhs: Optional[np.ndarray] = None
    ub_rhs: Optional[np.ndarray] = None
    var_lower: Optional[np.ndarray] = None

    @field_validator("objective", "eq_rhs", "ub_rhs", "var_lower", mode="before")
    @classmethod
    def _as_vector(cls, value):
        if value is None:
            return None
        return np.atleast_1d(np.asarray(value, dtype=float))

    @field_validator("eq_lhs", "ub_lhs", mode="before")
    @classmethod
    def _as_matrix(cls, value):
        if value is None:
            return None
        return np.atleast_2d(np.asarray(value, dtype=float))

    @model_validator(mode="after")
    def _check_dimensions(self) -> "LinearProgram":
        n = self.objective.shape[0]
        for lhs_name, rhs_name in (("eq_lhs", "eq_rhs"), ("ub_lhs", "ub_rhs")):
            lhs, rhs = getattr(self, lhs_name), getattr(self, rhs_name)
            if (lhs is None) != (rhs is None):
                raise ValueError(f"{lhs_name} and {rhs_name} must be given together")
            if lhs is None:
                continue
            if lhs.shape[1] != n:
                raise ValueError(f"{lhs_name} has {lhs.shape[1]} columns, objective has {n} entries")
            if lhs.shape[0] != rhs.shape[0]:
                raise ValueError(f"{lhs_name} has {lhs.shape[0]} rows but {rhs_name} has {rhs.shape[0]} entries")
        if self.var_lower is not None and self.var_lower.shape[0] != n:
            raise ValueError(f"var_lower has {self.var_lower.shape[0]} entries, expected {n}")
        return self

    @property
    def num_vars(self) -> int:
        return self.objective.shape[0]

    def lower_bounds(self) -> np.ndarray:
        if self.var_lower is None:
            return np.zeros(self.num_vars)
        return self.var_lower


class LPSolution(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    status: LPStatus
    point: Optional[np.ndarray] = None
    objective_value: Optional[float] = None
    dual_residual: Optional[float] = None
    pivots: int = 0
    basis: List[int] = []
    message: str = ""

    @property
    def is_optimal(self) -> bool:
        return self.status == LPStatus.OPTIMAL


class CCEResult(BaseModel):
    """A joint distribution over action pairs found by one of the CCE programs."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    eps_star: float
    mu: np.ndarray


class WelfareCCE(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    welfare: float
    mu: np.ndarray
    unconstrained_max: float
