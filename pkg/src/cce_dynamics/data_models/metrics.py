from __future__ import annotations

from enum import Enum
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


class RegretSeries(BaseModel):
    """Cumulative external regret of one player; `values[t-1]` is Reg^t for t = 1..T."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    player: str
    values: np.ndarray

    @property
    def final(self) -> float:
        return float(self.values[-1])


class PathLengths(BaseModel):
    """
    Running path lengths, indexed by t = 0..T (entry 0 is 0).

    sigma_*: second-order path length of the player's own primary/secondary pair.
    primary_diff_*: running sum of ||x_t - x_{t-1}||^2.
    primary_len_*: running sum of ||x_t - x_{t-1}|| (first order).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    sigma_x: np.ndarray
    sigma_y: np.ndarray
    primary_diff_x: np.ndarray
    primary_diff_y: np.ndarray
    primary_len_x: np.ndarray
    primary_len_y: np.ndarray


class GapReport(BaseModel):
    nash_gap_initial: float
    nash_gap_last: float
    nash_gap_min_over_t: Tuple[int, float]
    cce_gap: float
    strong_eps: float = Field(ge=0.0)
    welfare_avg: float

    # Per-player view of the average correlated play
    avg_utility_x: float
    avg_utility_y: float
    best_deviation_x: float
    best_deviation_y: float

    # Same gap evaluated on the explicit average distribution (simplices only)
    cce_gap_from_play: Optional[float] = None


class InequalityReport(BaseModel):
    """
    Outcome of checking one inequality along every prefix of a trace.

    slack = RHS - LHS (positive means the inequality holds with room to spare).
    """

    name: str
    worst_slack: float
    worst_t: int
    violated: bool
    tolerance: float
    slacks: List[float] = Field(default_factory=list)


class TheoremThresholds(BaseModel):
    eta_max: float
    eta: float                       # learning rate the remaining fields are evaluated at
    t_min: float
    t_min_branches: Tuple[float, float, float]
    predicted_regret_bound: float    # evaluated at (eta, t_min)
    ne_quality: float                # diameter version of the fixed-point certificate
    ne_quality_norm: float           # same with the norm bound in place of the diameter
    ne_quality_simplified: Optional[float] = None  # eps * (3 + eta), normal-form games only


class NashDetection(BaseModel):
    """First time the four OMD proximities all fall below eps * eta."""

    t: int
    certified_bound: float
    certified_bound_norm: float
    nash_gap: float
    verified: bool


class DichotomyHorn(str, Enum):
    NASH = "nash"
    STRONG_CCE = "strong_cce"
    NEITHER = "neither"


class DichotomyReport(BaseModel):
    eps: float
    horn_observed: DichotomyHorn
    detection: Optional[NashDetection] = None
    reg_x_final: float
    reg_y_final: float
    regret_slope: float              # least-squares slope of max regret over the second half
    thresholds: TheoremThresholds
    theorem_compliant: bool
    desk_feasible: bool
    predicted_bound_at_run: float
    strict_bound_holds: Optional[bool] = None  # only evaluated for compliant runs
