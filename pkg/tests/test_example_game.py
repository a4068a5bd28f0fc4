import numpy as np
import pytest
from pydantic import ValidationError

from cce_dynamics.data_models.polytopes import Simplex, Treeplex
from cce_dynamics.errors import InvalidInputError
from cce_dynamics.services.game_catalog_service import list_games, resolve_game
from cce_dynamics.services.game_service import (
    example_game,
    is_normalized,
    load_game_file,
    matrix_game,
    nash_gap,
    nash_gap_components,
    random_game,
    social_welfare,
    zero_sum_counterpart,
)
from cce_dynamics.services.polytope_service import simplex_as_treeplex, write_treeplex

X_STAR = np.array([1 / 3, 1 / 3, 1 / 3])
Y_STAR = np.array([1 / 4, 1 / 2, 1 / 4])


def test_example_game_shape_and_polytopes():
    game = example_game()
    assert game.shape == (3, 3)
    assert game.polytope_x == Simplex(dim=3)
    assert game.is_normal_form


def test_known_equilibrium_has_zero_gap():
    game = example_game()
    assert nash_gap(game, X_STAR, Y_STAR) <= 1e-12
    assert float(X_STAR @ game.a_matrix @ Y_STAR) == pytest.approx(1 / 4)
    assert float(X_STAR @ game.b_matrix @ Y_STAR) == pytest.approx(1 / 3)
    assert social_welfare(game, X_STAR, Y_STAR) == pytest.approx(7 / 12)


def test_uniform_profile_gap():
    # A y = (1/3, 0, 1/3) against uniform y: X gains 1/3 - 2/9; Y is indifferent
    gap_x, gap_y = nash_gap_components(example_game(), np.full(3, 1 / 3), np.full(3, 1 / 3))
    assert gap_x == pytest.approx(1 / 9)
    assert gap_y == pytest.approx(0.0, abs=1e-15)


def test_nash_gap_is_nonnegative():
    game = example_game()
    rng = np.random.default_rng(1)
    for _ in range(100):
        assert nash_gap(game, rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))) >= -1e-15


def test_nash_gap_rejects_infeasible_strategies():
    game = example_game()
    with pytest.raises(InvalidInputError):
        nash_gap(game, [0.5, 0.5, 0.5], Y_STAR)
    with pytest.raises(InvalidInputError):
        nash_gap(game, X_STAR, [0.5, 0.5])


def test_zero_sum_counterpart_negates_a():
    game = zero_sum_counterpart(example_game())
    np.testing.assert_array_equal(game.b_matrix, -game.a_matrix)
    assert game.name == "example-3x3-zerosum"


def test_payoff_matrices_are_read_only():
    game = example_game()
    with pytest.raises(ValueError):
        game.a_matrix[0, 0] = 5.0


def test_shape_mismatch_rejected():
    with pytest.raises(ValidationError):
        matrix_game(np.ones((2, 3)), np.ones((3, 2)), "bad")


def test_all_zero_game_rejected():
    with pytest.raises(ValidationError):
        matrix_game(np.zeros((2, 2)), np.zeros((2, 2)), "zero")


def test_random_game_is_reproducible():
    first = random_game(4, 3, seed=12)
    second = random_game(4, 3, seed=12)
    np.testing.assert_array_equal(first.a_matrix, second.a_matrix)
    np.testing.assert_array_equal(first.b_matrix, second.b_matrix)
    assert first.shape == (4, 3)
    assert first.name == "random-4x3-s12"
    assert is_normalized(first)


def test_random_game_seeds_differ():
    assert not np.array_equal(random_game(3, 3, seed=1).a_matrix, random_game(3, 3, seed=2).a_matrix)


def test_random_game_raw_entries_in_range():
    game = random_game(6, 5, seed=0, normalized=False)
    assert game.a_matrix.min() >= -1.0 and game.a_matrix.max() <= 1.0
    # A is drawn before B from the same generator
    rng = np.random.default_rng(0)
    np.testing.assert_array_equal(game.a_matrix, rng.uniform(-1.0, 1.0, size=(6, 5)))
    np.testing.assert_array_equal(game.b_matrix, rng.uniform(-1.0, 1.0, size=(6, 5)))


def test_random_game_rejects_empty_dimensions():
    with pytest.raises(InvalidInputError):
        random_game(0, 3, seed=1)


def test_load_matrix_game_file(tmp_path):
    path = tmp_path / "pennies.txt"
    path.write_text("2 2\n1 -1\n-1 1\n\n-1 1\n1 -1\n", encoding="utf-8")
    game = load_game_file(path)
    assert game.name == "pennies"
    np.testing.assert_array_equal(game.a_matrix, [[1.0, -1.0], [-1.0, 1.0]])
    np.testing.assert_array_equal(game.b_matrix, -game.a_matrix)


def test_load_matrix_game_with_treeplexes(tmp_path):
    game_path = tmp_path / "lifted.txt"
    game_path.write_text("3 3\n0 0 0\n0 1 0\n0 0 1\n\n0 0 0\n0 0 1\n0 1 0\n", encoding="utf-8")
    tp_path = tmp_path / "lifted.tpx"
    write_treeplex(simplex_as_treeplex(2), tp_path)
    game = load_game_file(game_path, treeplex_x=tp_path, treeplex_y=tp_path)
    assert isinstance(game.polytope_x, Treeplex)
    assert not game.is_normal_form


def test_malformed_matrix_file_rejected(tmp_path):
    path = tmp_path / "short.txt"
    path.write_text("2 2\n1 0\n0 1\n", encoding="utf-8")
    with pytest.raises(InvalidInputError):
        load_game_file(path)


def test_missing_game_file():
    with pytest.raises(FileNotFoundError):
        load_game_file("does/not/exist.txt")


def test_catalog_resolves_builtin_names():
    assert resolve_game("example-3x3").shape == (3, 3)
    np.testing.assert_array_equal(resolve_game("example-3x3-zerosum").b_matrix, -example_game().a_matrix)
    assert resolve_game("random:2,5,7").shape == (2, 5)
    assert "sheriff" in list_games()


def test_catalog_rejects_unknown_names():
    with pytest.raises(InvalidInputError):
        resolve_game("no-such-game")
    with pytest.raises(InvalidInputError):
        resolve_game("random:2,x,7")
