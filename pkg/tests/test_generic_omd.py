import numpy as np
import pytest

from cce_dynamics.data_models.run import InitMode, RunConfig
from cce_dynamics.errors import InvalidInputError
from cce_dynamics.services.dynamics_service import run, run_omd_generic
from cce_dynamics.services.game_service import example_game, random_game
from cce_dynamics.services.inequality_service import check_stability
from cce_dynamics.services.regularizers import (
    CenteredEuclideanRegularizer,
    EuclideanRegularizer,
    QuadraticRegularizer,
    ScaledEuclideanRegularizer,
)


def test_euclidean_regularizer_reproduces_ogd():
    game = random_game(3, 3, seed=1)
    cfg = RunConfig(eta=0.2, horizon=200)
    ogd = run(game, cfg)
    omd = run_omd_generic(game, cfg, EuclideanRegularizer())
    np.testing.assert_allclose(omd.x, ogd.x, atol=1e-12)
    np.testing.assert_allclose(omd.y, ogd.y, atol=1e-12)


def test_scaled_regularizer_is_ogd_with_smaller_step():
    game = random_game(4, 3, seed=2)
    omd = run_omd_generic(game, RunConfig(eta=0.4, horizon=150), ScaledEuclideanRegularizer(alpha=2.0))
    ogd = run(game, RunConfig(eta=0.2, horizon=150))
    np.testing.assert_allclose(omd.x, ogd.x, atol=1e-12)
    np.testing.assert_allclose(omd.y, ogd.y, atol=1e-12)


def test_centered_regularizer_starts_at_its_center():
    game = example_game()
    center = np.array([0.6, 0.3, 0.1])
    trace = run_omd_generic(game, RunConfig(eta=0.1, horizon=20), CenteredEuclideanRegularizer(center))
    np.testing.assert_allclose(trace.x[0], center)
    np.testing.assert_allclose(trace.y[0], center)


def test_infeasible_center_is_projected():
    reg = CenteredEuclideanRegularizer(np.array([2.0, 0.0, 0.0]))
    np.testing.assert_allclose(reg.minimizer(example_game().polytope_x), [1.0, 0.0, 0.0])


def test_separate_regularizer_per_player():
    game = example_game()
    center_y = np.array([0.2, 0.2, 0.6])
    trace = run_omd_generic(
        game, RunConfig(eta=0.1, horizon=10), EuclideanRegularizer(), CenteredEuclideanRegularizer(center_y)
    )
    np.testing.assert_allclose(trace.x[0], np.full(3, 1 / 3))
    np.testing.assert_allclose(trace.y[0], center_y)


def test_non_regularizer_init_is_honored():
    trace = run_omd_generic(
        example_game(),
        RunConfig(eta=0.1, horizon=5, init_mode=InitMode.parse("vertex:0,2")),
        ScaledEuclideanRegularizer(alpha=3.0),
    )
    np.testing.assert_array_equal(trace.x[0], [1.0, 0.0, 0.0])


def test_stability_holds_for_strongly_convex_regularizers():
    game = random_game(5, 4, seed=8)
    for reg in (EuclideanRegularizer(), ScaledEuclideanRegularizer(alpha=1.5)):
        trace = run_omd_generic(game, RunConfig(eta=0.3, horizon=300), reg)
        assert not check_stability(trace, 0.3).violated


def test_bregman_divergence_of_quadratic():
    reg = QuadraticRegularizer(alpha=2.0)
    x, z = np.array([0.5, 0.5]), np.array([1.0, 0.0])
    assert reg.bregman(x, z) == pytest.approx(0.5)  # alpha / 2 * ||x - z||^2
    assert reg.smoothness == 2.0


def test_weakly_convex_regularizer_rejected():
    with pytest.raises(InvalidInputError):
        QuadraticRegularizer(alpha=0.5)
