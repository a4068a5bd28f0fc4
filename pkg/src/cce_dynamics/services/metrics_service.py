"""
Trajectory functionals of a recorded OMD run.

Regret sums run over t = 1..T; the t = 0 warm-up interaction only feeds the
first prediction. For simplex games the average correlated play is
materialized and cross-checked against the regret-based CCE gap.
"""
from __future__ import annotations

from typing import Tuple

import logging

import numpy as np

from cce_dynamics.data_models.game import BimatrixGame
from cce_dynamics.data_models.metrics import GapReport, PathLengths, RegretSeries
from cce_dynamics.data_models.polytopes import Simplex, StrategyPolytope
from cce_dynamics.data_models.run import Trace
from cce_dynamics.errors import InvalidInputError, UnsupportedOperationError
from cce_dynamics.services.game_service import nash_gap, nash_gap_components  # noqa: F401  (re-export)
from cce_dynamics.services.polytope_service import best_value

logger = logging.getLogger(__name__)

CCE_CROSS_CHECK_TOL = 1e-9


def _best_values(p: StrategyPolytope, rows: np.ndarray) -> np.ndarray:
    """best_value(p, row) for every row of a 2D array."""
    if isinstance(p, Simplex):
        return rows.max(axis=1)
    return np.array([best_value(p, row) for row in rows])


def _player_arrays(trace: Trace, player: str) -> Tuple[StrategyPolytope, np.ndarray, np.ndarray]:
    if player == "x":
        return trace.polytope_x, trace.x, trace.u_x
    if player == "y":
        return trace.polytope_y, trace.y, trace.u_y
    raise InvalidInputError(f"player must be 'x' or 'y', got '{player}'")


def regret(trace: Trace, player: str) -> RegretSeries:
    """Reg^t = max_z <z, sum_{s<=t} u_s> - sum_{s<=t} <x_s, u_s> for t = 1..T."""
    p, strategies, utilities = _player_arrays(trace, player)
    cum_u = np.cumsum(utilities[1:], axis=0)
    realized = np.cumsum(np.einsum("ij,ij->i", strategies[1:], utilities[1:]))
    return RegretSeries(player=player, values=_best_values(p, cum_u) - realized)


def avg_correlated_play(trace: Trace) -> np.ndarray:
    """mu_bar = (1/T) sum_{t=1..T} x_t y_t^T over pure action pairs."""
    if not (isinstance(trace.polytope_x, Simplex) and isinstance(trace.polytope_y, Simplex)):
        raise UnsupportedOperationError(
            "average correlated play is only materialized for normal-form games; "
            "use the regret-based cce_gap for sequence-form games"
        )
    return trace.x[1:].T @ trace.y[1:] / trace.horizon


def nash_gap_series(trace: Trace, game: BimatrixGame) -> np.ndarray:
    """Nash gap of (x_t, y_t) for t = 0..T."""
    u_x = trace.y @ game.a_matrix.T
    u_y = trace.x @ game.b_matrix
    gap_x = _best_values(game.polytope_x, u_x) - np.einsum("ij,ij->i", trace.x, u_x)
    gap_y = _best_values(game.polytope_y, u_y) - np.einsum("ij,ij->i", trace.y, u_y)
    return np.maximum(gap_x, gap_y)


def average_strategy_nash_gap(trace: Trace, game: BimatrixGame) -> np.ndarray:
    """Nash gap of the running average strategies (1/t) sum_{s<=t} (x_s, y_s), for t = 1..T."""
    counts = np.arange(1, trace.horizon + 1)[:, None]
    avg_x = np.cumsum(trace.x[1:], axis=0) / counts
    avg_y = np.cumsum(trace.y[1:], axis=0) / counts
    u_x = avg_y @ game.a_matrix.T
    u_y = avg_x @ game.b_matrix
    gap_x = _best_values(game.polytope_x, u_x) - np.einsum("ij,ij->i", avg_x, u_x)
    gap_y = _best_values(game.polytope_y, u_y) - np.einsum("ij,ij->i", avg_y, u_y)
    return np.maximum(gap_x, gap_y)


def cce_gap_series(trace: Trace) -> np.ndarray:
    """max(Reg_X^t, Reg_Y^t) / t for t = 1..T."""
    reg_x = regret(trace, "x").values
    reg_y = regret(trace, "y").values
    return np.maximum(reg_x, reg_y) / np.arange(1, trace.horizon + 1)


def _cce_gap_from_play(mu: np.ndarray, game: BimatrixGame) -> Tuple[float, float]:
    """Best pure-deviation benefit of each player against the joint distribution mu."""
    a_mat, b_mat = game.a_matrix, game.b_matrix
    gap_x = float(np.max(a_mat @ mu.sum(axis=0)) - np.sum(mu * a_mat))
    gap_y = float(np.max(mu.sum(axis=1) @ b_mat) - np.sum(mu * b_mat))
    return gap_x, gap_y


def cce_report(trace: Trace, game: BimatrixGame) -> GapReport:
    """
    Equilibrium quality of a run.

    cce_gap = max(Reg_X^T, Reg_Y^T) / T is the approximation parameter of the
    average correlated play as a CCE; a negative value makes it a
    (-cce_gap)-strong CCE.
    """
    horizon = trace.horizon
    reg_x = regret(trace, "x").final
    reg_y = regret(trace, "y").final
    cce_gap = max(reg_x, reg_y) / horizon

    realized_x = np.einsum("ij,ij->i", trace.x[1:], trace.u_x[1:])
    realized_y = np.einsum("ij,ij->i", trace.y[1:], trace.u_y[1:])
    avg_utility_x = float(realized_x.mean())
    avg_utility_y = float(realized_y.mean())
    best_deviation_x = best_value(trace.polytope_x, trace.u_x[1:].mean(axis=0))
    best_deviation_y = best_value(trace.polytope_y, trace.u_y[1:].mean(axis=0))

    gaps = nash_gap_series(trace, game)
    t_min = int(np.argmin(gaps[1:])) + 1

    cce_gap_from_play = None
    if isinstance(game.polytope_x, Simplex) and isinstance(game.polytope_y, Simplex):
        cce_gap_from_play = max(_cce_gap_from_play(avg_correlated_play(trace), game))
        if abs(cce_gap_from_play - cce_gap) > CCE_CROSS_CHECK_TOL * max(1.0, abs(cce_gap)):
            logger.warning(
                "CCE gap mismatch on %s: regret-based %.12g vs distribution-based %.12g",
                trace.game_name,
                cce_gap,
                cce_gap_from_play,
            )

    return GapReport(
        nash_gap_initial=float(gaps[0]),
        nash_gap_last=float(gaps[-1]),
        nash_gap_min_over_t=(t_min, float(gaps[t_min])),
        cce_gap=cce_gap,
        strong_eps=max(0.0, -cce_gap),
        welfare_avg=float(np.mean(realized_x + realized_y)),
        avg_utility_x=avg_utility_x,
        avg_utility_y=avg_utility_y,
        best_deviation_x=best_deviation_x,
        best_deviation_y=best_deviation_y,
        cce_gap_from_play=cce_gap_from_play,
    )


def path_lengths(trace: Trace) -> PathLengths:
    """Running second-order path lengths and primary-iterate movement, indexed t = 0..T."""
    return PathLengths(
        sigma_x=np.cumsum(trace.prox_x**2 + trace.gap_x**2),
        sigma_y=np.cumsum(trace.prox_y**2 + trace.gap_y**2),
        primary_diff_x=np.cumsum(trace.step_x**2),
        primary_diff_y=np.cumsum(trace.step_y**2),
        primary_len_x=np.cumsum(trace.step_x),
        primary_len_y=np.cumsum(trace.step_y),
    )
