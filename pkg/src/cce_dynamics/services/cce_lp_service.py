"""
Coarse correlated equilibria of normal-form games by linear programming.

Variables are the joint distribution mu over action pairs, flattened row-major
(index i * m + j), followed by the incentive parameter eps where present. Each
pure deviation a' of a player contributes one row

    eps - sum_a mu(a) * (u(a) - u(a', a_opp)) <= 0,

so eps > 0 certifies an eps-strong CCE and eps >= 0 a CCE.
"""
from __future__ import annotations

from typing import Optional

import logging

import numpy as np
import pandas as pd

from cce_dynamics.data_models.game import BimatrixGame
from cce_dynamics.data_models.lp import CCEResult, LinearProgram, LPSolution, LPStatus, WelfareCCE
from cce_dynamics.errors import CceDynamicsError, InvalidInputError, UnsupportedOperationError
from cce_dynamics.services.lp_service import solve_lp

logger = logging.getLogger(__name__)

CONTOUR_COLUMNS = ["w_x", "w_y", "eps_star"]


def _require_normal_form(game: BimatrixGame) -> None:
    if not game.is_normal_form:
        raise UnsupportedOperationError(
            f"CCE programs need a normal-form game; {game.name} is in sequence form"
        )


def _deviation_gains(game: BimatrixGame) -> np.ndarray:
    """Rows of sum_a mu(a) * (u(a) - u(a', a_opp)), one per player and deviation a'."""
    a_mat, b_mat = game.a_matrix, game.b_matrix
    n, m = a_mat.shape
    rows_x = [(a_mat - a_mat[k][None, :]).ravel() for k in range(n)]
    rows_y = [(b_mat - b_mat[:, [k]]).ravel() for k in range(m)]
    return np.array(rows_x + rows_y)


def _cce_program(
    game: BimatrixGame,
    w_x: Optional[float] = None,
    w_y: Optional[float] = None,
    at_least: bool = False,
) -> LinearProgram:
    _require_normal_form(game)
    n, m = game.shape
    size = n * m
    gains = _deviation_gains(game)

    objective = np.zeros(size + 1)
    objective[-1] = 1.0
    ub_lhs = np.hstack([-gains, np.ones((gains.shape[0], 1))])
    ub_rhs = np.zeros(gains.shape[0])
    eq_lhs = [np.concatenate([np.ones(size), [0.0]])]
    eq_rhs = [1.0]

    targets = [(w, mat) for w, mat in ((w_x, game.a_matrix), (w_y, game.b_matrix)) if w is not None]
    for w, mat in targets:
        row = np.concatenate([mat.ravel(), [0.0]])
        if at_least:
            ub_lhs = np.vstack([ub_lhs, -row])
            ub_rhs = np.append(ub_rhs, -w)
        else:
            eq_lhs.append(row)
            eq_rhs.append(w)

    lower = np.zeros(size + 1)
    lower[-1] = -np.inf
    return LinearProgram(
        objective=objective,
        eq_lhs=np.array(eq_lhs),
        eq_rhs=np.array(eq_rhs),
        ub_lhs=ub_lhs,
        ub_rhs=ub_rhs,
        var_lower=lower,
    )


def _distribution(solution: LPSolution, game: BimatrixGame, size: int) -> np.ndarray:
    mu = np.clip(solution.point[:size], 0.0, None)
    return mu.reshape(game.shape) / mu.sum()


def _raise_on_failure(solution: LPSolution, what: str) -> None:
    if solution.status == LPStatus.FAILED:
        raise CceDynamicsError(f"{what}: LP solve failed ({solution.message})")


def strongest_cce(game: BimatrixGame) -> CCEResult:
    """Largest eps for which an eps-strong CCE exists, with a distribution attaining it."""
    lp = _cce_program(game)
    solution = solve_lp(lp)
    _raise_on_failure(solution, f"strongest CCE of {game.name}")
    if not solution.is_optimal:
        raise CceDynamicsError(f"strongest CCE of {game.name}: LP is {solution.status.value}")
    size = game.shape[0] * game.shape[1]
    logger.info("Strongest CCE of %s: eps*=%.6g (%d pivots)", game.name, solution.objective_value, solution.pivots)
    return CCEResult(eps_star=float(solution.objective_value), mu=_distribution(solution, game, size))


def cce_with_utility_pair(
    game: BimatrixGame, w_x: float, w_y: float, at_least: bool = False
) -> Optional[CCEResult]:
    """
    Largest eps among CCE distributions with expected utilities (w_x, w_y).

    `at_least` relaxes the utility equalities to E[u_X] >= w_x, E[u_Y] >= w_y.
    Returns None when no distribution meets the utility constraints.
    """
    solution = solve_lp(_cce_program(game, w_x, w_y, at_least))
    _raise_on_failure(solution, f"CCE with utilities ({w_x:g}, {w_y:g})")
    if solution.status == LPStatus.INFEASIBLE:
        return None
    size = game.shape[0] * game.shape[1]
    return CCEResult(eps_star=float(solution.objective_value), mu=_distribution(solution, game, size))


def cce_contour(game: BimatrixGame, grid: int, at_least: bool = False) -> pd.DataFrame:
    """
    eps* over a grid x grid lattice of utility pairs spanning each player's payoff range.

    Rows are ordered by w_x, then w_y; eps_star is NaN where the pair is infeasible.
    """
    if grid < 2:
        raise InvalidInputError(f"contour grid needs at least 2 points per axis, got {grid}")
    _require_normal_form(game)
    w_xs = np.linspace(game.a_matrix.min(), game.a_matrix.max(), grid)
    w_ys = np.linspace(game.b_matrix.min(), game.b_matrix.max(), grid)
    records = []
    for w_x in w_xs:
        for w_y in w_ys:
            result = cce_with_utility_pair(game, float(w_x), float(w_y), at_least)
            records.append((float(w_x), float(w_y), np.nan if result is None else result.eps_star))
    frame = pd.DataFrame.from_records(records, columns=CONTOUR_COLUMNS)
    logger.info("Contour of %s: %d of %d pairs feasible", game.name, int(frame["eps_star"].notna().sum()), len(frame))
    return frame


def max_welfare_cce(game: BimatrixGame) -> WelfareCCE:
    """Largest expected social welfare over (exact) CCE, next to the best single outcome."""
    _require_normal_form(game)
    n, m = game.shape
    gains = _deviation_gains(game)
    lp = LinearProgram(
        objective=(game.a_matrix + game.b_matrix).ravel(),
        eq_lhs=np.ones((1, n * m)),
        eq_rhs=np.array([1.0]),
        ub_lhs=-gains,
        ub_rhs=np.zeros(gains.shape[0]),
    )
    solution = solve_lp(lp)
    _raise_on_failure(solution, f"max-welfare CCE of {game.name}")
    if not solution.is_optimal:
        raise CceDynamicsError(f"max-welfare CCE of {game.name}: LP is {solution.status.value}")
    return WelfareCCE(
        welfare=float(solution.objective_value),
        mu=_distribution(solution, game, n * m),
        unconstrained_max=float(np.max(game.a_matrix + game.b_matrix)),
    )
