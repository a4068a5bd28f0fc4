from __future__ import annotations

from enum import Enum
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from cce_dynamics.config import PROJECTION_TOL
from cce_dynamics.data_models.polytopes import StrategyPolytope


class InitKind(str, Enum):
    """How the secondary iterates x_hat_0, y_hat_0 are chosen."""

    REGULARIZER_MIN = "regularizer_min"
    DETERMINISTIC_VERTEX = "deterministic_vertex"
    SEEDED_RANDOM = "seeded_random"


class InitMode(BaseModel):
    """
    Initialization of the dynamics.

    `deterministic_vertex` starts each player at best_vertex(p, e_i) for the
    given indices; `seeded_random` draws a uniformly random feasible point.
    """

    model_config = ConfigDict(frozen=True)

    kind: InitKind = InitKind.REGULARIZER_MIN
    index_x: Optional[int] = None
    index_y: Optional[int] = None
    seed: Optional[int] = None

    @model_validator(mode="after")
    def _check_fields(self) -> "InitMode":
        if self.kind == InitKind.DETERMINISTIC_VERTEX and (self.index_x is None or self.index_y is None):
            raise ValueError("deterministic_vertex init needs index_x and index_y")
        if self.kind == InitKind.SEEDED_RANDOM and self.seed is None:
            raise ValueError("seeded_random init needs a seed")
        return self

    @classmethod
    def parse(cls, text: str) -> "InitMode":
        """Parse the CLI form: `uniform`, `vertex:i,j` or `random:seed`."""
        text = text.strip()
        if text in ("uniform", "regularizer_min"):
            return cls()
        if text.startswith("vertex:"):
            parts = text.split(":", 1)[1].split(",")
            if len(parts) != 2:
                raise ValueError(f"vertex init expects 'vertex:i,j', got '{text}'")
            return cls(kind=InitKind.DETERMINISTIC_VERTEX, index_x=int(parts[0]), index_y=int(parts[1]))
        if text.startswith("random:"):
            return cls(kind=InitKind.SEEDED_RANDOM, seed=int(text.split(":", 1)[1]))
        raise ValueError(f"unknown init mode '{text}' (expected uniform, vertex:i,j or random:seed)")

    def label(self) -> str:
        if self.kind == InitKind.DETERMINISTIC_VERTEX:
            return f"vertex:{self.index_x},{self.index_y}"
        if self.kind == InitKind.SEEDED_RANDOM:
            return f"random:{self.seed}"
        return "uniform"


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    eta: float = Field(gt=0.0)
    horizon: int = Field(ge=1)
    init_mode: InitMode = Field(default_factory=InitMode)
    record_secondary: bool = False
    projection_tol: float = Field(default=PROJECTION_TOL, gt=0.0)


class PlayerState(BaseModel):
    """
    One player's OMD state after a step.

    x_hat is the secondary iterate, x the primary iterate, m the prediction
    used for the primary step and last_u the most recent observed utility.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    x_hat: np.ndarray
    x: np.ndarray
    m: np.ndarray
    last_u: np.ndarray


class Trace(BaseModel):
    """
    Full record of a two-player run, indexed by t = 0..T along axis 0.

    Secondary iterates are kept only when `config.record_secondary` is set; the
    per-step distances every metric needs are always accumulated online:

    - `prox_x[t]`  = ||x_t - x_hat_{t-1}||
    - `gap_x[t]`   = ||x_hat_t - x_t||
    - `sec_step_x[t]` = ||x_hat_t - x_hat_{t-1}||
    - `step_x[t]`  = ||x_t - x_{t-1}||

    Entry 0 of each distance array is 0.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    game_name: str
    config: RunConfig
    polytope_x: StrategyPolytope = Field(discriminator="kind")
    polytope_y: StrategyPolytope = Field(discriminator="kind")

    x: np.ndarray
    y: np.ndarray
    u_x: np.ndarray
    u_y: np.ndarray
    x_hat: Optional[np.ndarray] = None
    y_hat: Optional[np.ndarray] = None

    prox_x: np.ndarray
    prox_y: np.ndarray
    gap_x: np.ndarray
    gap_y: np.ndarray
    sec_step_x: np.ndarray
    sec_step_y: np.ndarray
    step_x: np.ndarray
    step_y: np.ndarray

    @property
    def horizon(self) -> int:
        return self.x.shape[0] - 1

    @property
    def has_secondary(self) -> bool:
        return self.x_hat is not None and self.y_hat is not None
