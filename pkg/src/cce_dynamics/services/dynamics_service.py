"""
Two-player optimistic mirror descent with one-recency-bias predictions.

Each round t = 1..T:
  1. both players take their primary step from time-(t-1) information,
     x_t = Proj(x_hat_{t-1} + eta * m_t) with m_t = u_{t-1};
  2. utilities u_x_t = A y_t and u_y_t = B^T x_t are formed;
  3. both players take their secondary step x_hat_t = Proj(x_hat_{t-1} + eta * u_t).

The warm-up utility u_0 comes from the t = 0 strategies x_0 = x_hat_0.
"""
from __future__ import annotations

from typing import Callable, Optional, Tuple

import logging

import numpy as np

from cce_dynamics.data_models.game import BimatrixGame
from cce_dynamics.data_models.polytopes import StrategyPolytope
from cce_dynamics.data_models.run import InitKind, InitMode, PlayerState, RunConfig, Trace
from cce_dynamics.errors import InvalidInputError
from cce_dynamics.services.game_service import is_normalized
from cce_dynamics.services.polytope_service import (
    best_vertex,
    is_feasible,
    project,
    random_point,
    regularizer_min,
)
from cce_dynamics.services.regularizers import Regularizer

logger = logging.getLogger(__name__)

# step callbacks receive the player label ("x" or "y") alongside its polytope
PrimaryStep = Callable[[PlayerState, StrategyPolytope, str], PlayerState]
SecondaryStep = Callable[[PlayerState, np.ndarray, StrategyPolytope, str], PlayerState]


def ogd_primary_step(state: PlayerState, eta: float, polytope: StrategyPolytope, tol: float) -> PlayerState:
    """x_t = Proj(x_hat_{t-1} + eta * m_t) with the prediction m_t = last_u."""
    m = state.last_u
    x = project(polytope, state.x_hat + eta * m, tol)
    return state.model_copy(update={"x": x, "m": m})


def ogd_secondary_step(
    state: PlayerState, u_new: np.ndarray, eta: float, polytope: StrategyPolytope, tol: float
) -> PlayerState:
    """x_hat_t = Proj(x_hat_{t-1} + eta * u_t); remembers u_t for the next prediction."""
    u_new = np.asarray(u_new, dtype=float)
    if u_new.shape != state.x_hat.shape:
        raise InvalidInputError(f"utility has shape {u_new.shape}, strategy has {state.x_hat.shape}")
    x_hat = project(polytope, state.x_hat + eta * u_new, tol)
    return state.model_copy(update={"x_hat": x_hat, "last_u": u_new})


def ogd_player_step(
    state: PlayerState, u_new: np.ndarray, eta: float, polytope: StrategyPolytope, tol: float
) -> PlayerState:
    """
    One full OGD step for a single player.

    The primary step uses only `state`, so calling this after the opponent's
    primary iterate has produced `u_new` matches the simultaneous protocol.
    """
    return ogd_secondary_step(ogd_primary_step(state, eta, polytope, tol), u_new, eta, polytope, tol)


def initial_points(game: BimatrixGame, init: InitMode, tol: float) -> Tuple[np.ndarray, np.ndarray]:
    """x_hat_0 and y_hat_0 for the requested initialization (regularizer minimizer by default)."""
    if init.kind == InitKind.DETERMINISTIC_VERTEX:
        points = []
        for label, p, index in (("x", game.polytope_x, init.index_x), ("y", game.polytope_y, init.index_y)):
            if not 0 <= index < p.dimension:
                raise InvalidInputError(f"init vertex index {index} for {label} outside 0..{p.dimension - 1}")
            direction = np.zeros(p.dimension)
            direction[index] = 1.0
            points.append(best_vertex(p, direction).point)
        return points[0], points[1]
    if init.kind == InitKind.SEEDED_RANDOM:
        rng = np.random.default_rng(init.seed)
        return random_point(game.polytope_x, rng), random_point(game.polytope_y, rng)
    return regularizer_min(game.polytope_x, tol), regularizer_min(game.polytope_y, tol)


def _simulate(
    game: BimatrixGame,
    cfg: RunConfig,
    x_hat0: np.ndarray,
    y_hat0: np.ndarray,
    primary: PrimaryStep,
    secondary: SecondaryStep,
) -> Trace:
    if not is_normalized(game):
        logger.warning("Game %s is not normalized; stability bounds scale with the utility norms", game.name)
    a_mat, b_mat = game.a_matrix, game.b_matrix
    horizon = cfg.horizon
    n, m = a_mat.shape

    xs, ys = np.empty((horizon + 1, n)), np.empty((horizon + 1, m))
    u_xs, u_ys = np.empty((horizon + 1, n)), np.empty((horizon + 1, m))
    x_hats = np.empty((horizon + 1, n)) if cfg.record_secondary else None
    y_hats = np.empty((horizon + 1, m)) if cfg.record_secondary else None
    dist = {key: np.zeros(horizon + 1) for key in (
        "prox_x", "prox_y", "gap_x", "gap_y", "sec_step_x", "sec_step_y", "step_x", "step_y")}

    state_x = PlayerState(x_hat=x_hat0, x=x_hat0, m=np.zeros(n), last_u=a_mat @ y_hat0)
    state_y = PlayerState(x_hat=y_hat0, x=y_hat0, m=np.zeros(m), last_u=b_mat.T @ x_hat0)

    def record(t: int) -> None:
        xs[t], ys[t] = state_x.x, state_y.x
        u_xs[t], u_ys[t] = state_x.last_u, state_y.last_u
        if x_hats is not None:
            x_hats[t], y_hats[t] = state_x.x_hat, state_y.x_hat

    record(0)
    logger.info("Running OMD on %s: eta=%g, T=%d, init=%s", game.name, cfg.eta, horizon, cfg.init_mode.label())
    for t in range(1, horizon + 1):
        # Both primaries use only time-(t-1) information.
        mid_x = primary(state_x, game.polytope_x, "x")
        mid_y = primary(state_y, game.polytope_y, "y")
        next_x = secondary(mid_x, a_mat @ mid_y.x, game.polytope_x, "x")
        next_y = secondary(mid_y, b_mat.T @ mid_x.x, game.polytope_y, "y")

        for suffix, prev, new in (("x", state_x, next_x), ("y", state_y, next_y)):
            dist[f"prox_{suffix}"][t] = np.linalg.norm(new.x - prev.x_hat)
            dist[f"gap_{suffix}"][t] = np.linalg.norm(new.x_hat - new.x)
            dist[f"sec_step_{suffix}"][t] = np.linalg.norm(new.x_hat - prev.x_hat)
            dist[f"step_{suffix}"][t] = np.linalg.norm(new.x - prev.x)
        state_x, state_y = next_x, next_y
        record(t)
    logger.info("Finished %d iterations on %s", horizon, game.name)

    return Trace(
        game_name=game.name,
        config=cfg,
        polytope_x=game.polytope_x,
        polytope_y=game.polytope_y,
        x=xs,
        y=ys,
        u_x=u_xs,
        u_y=u_ys,
        x_hat=x_hats,
        y_hat=y_hats,
        **dist,
    )


def run(game: BimatrixGame, cfg: RunConfig) -> Trace:
    """Optimistic gradient descent (Euclidean OMD) for both players."""
    x_hat0, y_hat0 = initial_points(game, cfg.init_mode, cfg.projection_tol)
    eta, tol = cfg.eta, cfg.projection_tol
    return _simulate(
        game,
        cfg,
        x_hat0,
        y_hat0,
        primary=lambda state, p, _: ogd_primary_step(state, eta, p, tol),
        secondary=lambda state, u, p, _: ogd_secondary_step(state, u, eta, p, tol),
    )


def run_omd_generic(
    game: BimatrixGame,
    cfg: RunConfig,
    regularizer: Regularizer,
    regularizer_y: Optional[Regularizer] = None,
) -> Trace:
    """
    OMD with an arbitrary smooth regularizer.

    Both steps are solved by the regularizer's prox. `regularizer_y` defaults to
    `regularizer`. The regularizer minimizers replace the regularizer_min
    initialization; other init modes are honored.
    """
    eta, tol = cfg.eta, cfg.projection_tol
    regs = {"x": regularizer, "y": regularizer_y or regularizer}
    if cfg.init_mode.kind == InitKind.REGULARIZER_MIN:
        x_hat0 = regs["x"].minimizer(game.polytope_x, tol)
        y_hat0 = regs["y"].minimizer(game.polytope_y, tol)
    else:
        x_hat0, y_hat0 = initial_points(game, cfg.init_mode, tol)

    def primary(state: PlayerState, p: StrategyPolytope, player: str) -> PlayerState:
        x = regs[player].prox(p, state.x_hat, state.last_u, eta, tol)
        return state.model_copy(update={"x": x, "m": state.last_u})

    def secondary(state: PlayerState, u: np.ndarray, p: StrategyPolytope, player: str) -> PlayerState:
        x_hat = regs[player].prox(p, state.x_hat, u, eta, tol)
        return state.model_copy(update={"x_hat": x_hat, "last_u": u})

    return _simulate(game, cfg, x_hat0, y_hat0, primary, secondary)


def trace_points_feasible(trace: Trace, tol: float) -> bool:
    """Every recorded iterate lies in its polytope within `tol`."""
    rows = [(trace.polytope_x, trace.x), (trace.polytope_y, trace.y)]
    if trace.has_secondary:
        rows += [(trace.polytope_x, trace.x_hat), (trace.polytope_y, trace.y_hat)]
    return all(is_feasible(p, z, tol) for p, pts in rows for z in pts)
