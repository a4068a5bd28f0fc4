import numpy as np
import pytest

from cce_dynamics.data_models.game import BimatrixGame
from cce_dynamics.data_models.run import InitKind, InitMode, PlayerState, RunConfig
from cce_dynamics.errors import InvalidInputError
from cce_dynamics.services.dynamics_service import (
    initial_points,
    ogd_player_step,
    run,
    trace_points_feasible,
)
from cce_dynamics.services.game_service import example_game, normalize, random_game
from cce_dynamics.services.metrics_service import avg_correlated_play, cce_report, regret
from cce_dynamics.services.polytope_service import project_simplex, simplex_as_treeplex

# Average correlated play of OGD on the raw example game, eta = 0.1, T = 1000, uniform start
GOLDEN_MU = np.array(
    [
        [0.1594, 0.1778, 0.0048],
        [0.0029, 0.1614, 0.1607],
        [0.1642, 0.0075, 0.1613],
    ]
)


def _cfg(eta=0.1, horizon=50, **kwargs) -> RunConfig:
    return RunConfig(eta=eta, horizon=horizon, **kwargs)


def test_golden_run_on_example_game():
    game = example_game()
    trace = run(game, _cfg(horizon=1000))
    np.testing.assert_allclose(avg_correlated_play(trace), GOLDEN_MU, atol=2e-3)

    # regret turns negative early and stays there
    assert np.all(regret(trace, "x").values[99:] < 0)
    assert np.all(regret(trace, "y").values[99:] < 0)

    report = cce_report(trace, game)
    assert report.strong_eps == pytest.approx(0.1525, abs=5e-3)
    assert report.welfare_avg == pytest.approx(0.9819, abs=5e-3)
    assert report.avg_utility_x == pytest.approx(0.4793, abs=5e-3)
    assert report.best_deviation_x == pytest.approx(0.3268, abs=5e-3)
    assert report.avg_utility_y == pytest.approx(0.5027, abs=5e-3)
    assert report.best_deviation_y == pytest.approx(0.3420, abs=5e-3)


def test_trace_shapes_and_first_steps():
    game = example_game()
    trace = run(game, _cfg(horizon=5))
    assert trace.horizon == 5
    assert trace.x.shape == (6, 3) and trace.u_y.shape == (6, 3)
    assert trace.step_x[0] == 0.0 and trace.prox_y[0] == 0.0
    assert not trace.has_secondary

    uniform = np.full(3, 1 / 3)
    np.testing.assert_allclose(trace.x[0], uniform)
    # the warm-up utility A y_0 is the first prediction
    np.testing.assert_allclose(trace.x[1], project_simplex(uniform + 0.1 * (game.a_matrix @ uniform)))
    np.testing.assert_allclose(trace.u_x[1], game.a_matrix @ trace.y[1])
    np.testing.assert_allclose(trace.u_y[1], game.b_matrix.T @ trace.x[1])


def test_recorded_secondary_iterates_match_distances():
    trace = run(example_game(), _cfg(horizon=30, record_secondary=True))
    assert trace.has_secondary
    for t in range(1, 31):
        assert trace.gap_x[t] == pytest.approx(np.linalg.norm(trace.x_hat[t] - trace.x[t]))
        assert trace.prox_y[t] == pytest.approx(np.linalg.norm(trace.y[t] - trace.y_hat[t - 1]))
        assert trace.sec_step_x[t] == pytest.approx(np.linalg.norm(trace.x_hat[t] - trace.x_hat[t - 1]))
        # secondary step uses the realized utility
        np.testing.assert_allclose(
            trace.x_hat[t], project_simplex(trace.x_hat[t - 1] + 0.1 * trace.u_x[t]), atol=1e-12
        )


def test_iterates_stay_feasible():
    game, _ = normalize(random_game(4, 6, seed=3, normalized=False))
    trace = run(game, _cfg(eta=0.3, horizon=200, record_secondary=True))
    assert trace_points_feasible(trace, 1e-9)


def test_runs_are_deterministic():
    game = random_game(3, 4, seed=5)
    first = run(game, _cfg(horizon=100, init_mode=InitMode.parse("random:9")))
    second = run(game, _cfg(horizon=100, init_mode=InitMode.parse("random:9")))
    np.testing.assert_array_equal(first.x, second.x)
    np.testing.assert_array_equal(first.y, second.y)


def test_vertex_init():
    trace = run(example_game(), _cfg(horizon=3, init_mode=InitMode.parse("vertex:1,2")))
    np.testing.assert_array_equal(trace.x[0], [0.0, 1.0, 0.0])
    np.testing.assert_array_equal(trace.y[0], [0.0, 0.0, 1.0])


def test_vertex_init_out_of_range():
    with pytest.raises(InvalidInputError):
        initial_points(example_game(), InitMode.parse("vertex:3,0"), 1e-10)


def test_init_mode_parsing():
    assert InitMode.parse("uniform").kind == InitKind.REGULARIZER_MIN
    assert InitMode.parse("random:4").seed == 4
    assert InitMode.parse("vertex:1,1").label() == "vertex:1,1"
    with pytest.raises(ValueError):
        InitMode.parse("corner")
    with pytest.raises(ValueError):
        InitMode(kind=InitKind.SEEDED_RANDOM)


def test_run_config_rejects_bad_values():
    with pytest.raises(ValueError):
        RunConfig(eta=0.0, horizon=10)
    with pytest.raises(ValueError):
        RunConfig(eta=0.1, horizon=0)


def test_player_step_rejects_mismatched_utility():
    state = PlayerState(x_hat=np.full(3, 1 / 3), x=np.full(3, 1 / 3), m=np.zeros(3), last_u=np.zeros(3))
    with pytest.raises(InvalidInputError):
        ogd_player_step(state, np.zeros(2), 0.1, example_game().polytope_x, 1e-10)


def test_lifted_treeplex_run_matches_simplex_run():
    """Running on a simplex written as a one-infoset treeplex gives the same iterates."""
    game = example_game()
    lifted = BimatrixGame(
        a_matrix=np.pad(game.a_matrix, ((1, 0), (1, 0))),
        b_matrix=np.pad(game.b_matrix, ((1, 0), (1, 0))),
        polytope_x=simplex_as_treeplex(3),
        polytope_y=simplex_as_treeplex(3),
        name="lifted",
    )
    plain = run(game, _cfg(horizon=40))
    tree = run(lifted, _cfg(horizon=40))
    np.testing.assert_allclose(tree.x[:, 0], 1.0, atol=1e-8)
    np.testing.assert_allclose(tree.x[:, 1:], plain.x, atol=1e-6)
    np.testing.assert_allclose(tree.y[:, 1:], plain.y, atol=1e-6)
