import numpy as np
import pytest

from cce_dynamics.data_models.game import BimatrixGame, NormalizationMethod
from cce_dynamics.errors import InvalidInputError
from cce_dynamics.services.game_service import (
    auto_learning_rate,
    example_game,
    is_normalized,
    matrix_game,
    nash_gap,
    nash_gap_components,
    normalize,
    operator_norm,
    utility_bounds,
)
from cce_dynamics.services.polytope_service import best_vertex, random_point, simplex_as_treeplex


def test_operator_norm_matches_svd():
    rng = np.random.default_rng(21)
    for _ in range(30):
        n, m = rng.integers(1, 8, size=2)
        mat = rng.normal(size=(n, m))
        assert operator_norm(mat) == pytest.approx(np.linalg.norm(mat, 2), rel=1e-8)


def test_operator_norm_when_ones_vector_is_in_kernel():
    # columns cancel on the all-ones start vector
    mat = np.array([[1.0, -1.0], [2.0, -2.0]])
    assert operator_norm(mat) == pytest.approx(np.linalg.norm(mat, 2), rel=1e-8)


def test_operator_norm_rejects_zero_and_empty():
    with pytest.raises(InvalidInputError):
        operator_norm(np.zeros((2, 3)))
    with pytest.raises(InvalidInputError):
        operator_norm(np.zeros((0, 3)))


def test_example_scales_are_exact_vertex_maxima():
    s_a, s_b, method = utility_bounds(example_game())
    # largest column norm of A is ||(1, -1, 0)|| and every row of B is a unit vector
    assert s_a == pytest.approx(np.sqrt(2.0))
    assert s_b == pytest.approx(1.0)
    assert method == NormalizationMethod.EXACT_VERTEX_MAX


def test_normalize_bounds_every_observed_utility():
    game = matrix_game(np.random.default_rng(2).normal(size=(4, 5)), np.random.default_rng(3).normal(size=(4, 5)), "g")
    normalized, _ = normalize(game)
    assert is_normalized(normalized)
    rng = np.random.default_rng(4)
    for _ in range(200):
        x = random_point(normalized.polytope_x, rng)
        y = random_point(normalized.polytope_y, rng)
        assert np.linalg.norm(normalized.a_matrix @ y) <= 1.0 + 1e-12
        assert np.linalg.norm(normalized.b_matrix.T @ x) <= 1.0 + 1e-12


def test_normalize_keeps_the_original_untouched():
    game = example_game()
    normalize(game)
    np.testing.assert_array_equal(game.a_matrix[1], [-1.0, 1.0, 0.0])


def test_treeplex_games_use_operator_norm_bound():
    tp = simplex_as_treeplex(2)
    game = BimatrixGame(
        a_matrix=np.arange(9.0).reshape(3, 3),
        b_matrix=np.eye(3),
        polytope_x=tp,
        polytope_y=tp,
        name="lifted",
    )
    _, report = normalize(game)
    assert report.method == NormalizationMethod.OPERATOR_NORM_BOUND
    assert report.scale_a == pytest.approx(np.linalg.norm(game.a_matrix, 2) * np.sqrt(2.0), rel=1e-4)


def test_zero_payoff_matrix_keeps_unit_scale():
    game = matrix_game(np.zeros((2, 2)), [[1.0, 0.0], [0.0, 2.0]], "one-sided")
    normalized, report = normalize(game)
    assert report.scale_a == 1.0
    assert not np.any(normalized.a_matrix)


def test_nash_gap_invariant_to_constant_shift():
    game = example_game()
    shifted = matrix_game(game.a_matrix + 3.0, game.b_matrix - 2.0, "shifted")
    rng = np.random.default_rng(8)
    for _ in range(20):
        x = rng.dirichlet(np.ones(3))
        y = rng.dirichlet(np.ones(3))
        assert nash_gap(shifted, x, y) == pytest.approx(nash_gap(game, x, y), abs=1e-12)


def test_auto_learning_rate_uses_largest_spectral_norm():
    game = example_game()
    expected = 1.0 / (2.0 * max(np.linalg.norm(game.a_matrix, 2), np.linalg.norm(game.b_matrix, 2)))
    assert auto_learning_rate(game) == pytest.approx(expected, rel=1e-6)


def test_operator_norm_of_example_matrix_is_golden_ratio():
    assert operator_norm(example_game().a_matrix) == pytest.approx((1.0 + np.sqrt(5.0)) / 2.0, rel=1e-8)


def test_operator_norm_is_transpose_invariant():
    rng = np.random.default_rng(22)
    for _ in range(30):
        n, m = rng.integers(1, 8, size=2)
        mat = rng.normal(size=(n, m))
        assert operator_norm(mat.T) == pytest.approx(operator_norm(mat), rel=1e-8)


def _random_matrix_game(seed: int) -> BimatrixGame:
    rng = np.random.default_rng(seed)
    return matrix_game(rng.normal(scale=3.0, size=(4, 5)), rng.normal(scale=0.5, size=(4, 5)), f"g{seed}")


def test_normalization_preserves_best_responses():
    for seed in range(5):
        game = _random_matrix_game(seed)
        normalized, _ = normalize(game)
        rng = np.random.default_rng(100 + seed)
        for _ in range(50):
            x = random_point(game.polytope_x, rng)
            y = random_point(game.polytope_y, rng)
            np.testing.assert_array_equal(
                best_vertex(game.polytope_x, game.a_matrix @ y).point,
                best_vertex(normalized.polytope_x, normalized.a_matrix @ y).point,
            )
            np.testing.assert_array_equal(
                best_vertex(game.polytope_y, game.b_matrix.T @ x).point,
                best_vertex(normalized.polytope_y, normalized.b_matrix.T @ x).point,
            )


def test_nash_gap_scales_inversely_with_normalization():
    for seed in range(5):
        game = _random_matrix_game(seed)
        normalized, report = normalize(game)
        rng = np.random.default_rng(200 + seed)
        for _ in range(20):
            x = random_point(game.polytope_x, rng)
            y = random_point(game.polytope_y, rng)
            gap_x, gap_y = nash_gap_components(game, x, y)
            norm_x, norm_y = nash_gap_components(normalized, x, y)
            assert norm_x == pytest.approx(gap_x / report.scale_a, rel=1e-9, abs=1e-12)
            assert norm_y == pytest.approx(gap_y / report.scale_b, rel=1e-9, abs=1e-12)


def test_normalize_is_idempotent():
    once, _ = normalize(_random_matrix_game(7))
    twice, report = normalize(once)
    assert report.scale_a == pytest.approx(1.0, abs=1e-12)
    assert report.scale_b == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(twice.a_matrix, once.a_matrix, atol=1e-12)
    np.testing.assert_allclose(twice.b_matrix, once.b_matrix, atol=1e-12)


def test_normalize_is_idempotent_on_treeplex_games():
    tp = simplex_as_treeplex(2)
    game = BimatrixGame(
        a_matrix=np.arange(9.0).reshape(3, 3), b_matrix=np.eye(3), polytope_x=tp, polytope_y=tp, name="lifted"
    )
    once, _ = normalize(game)
    twice, report = normalize(once)
    # the operator-norm bound comes from power iteration
    assert report.scale_a == pytest.approx(1.0, rel=1e-8)
    assert report.scale_b == pytest.approx(1.0, rel=1e-8)
    np.testing.assert_allclose(twice.a_matrix, once.a_matrix, rtol=1e-8)
