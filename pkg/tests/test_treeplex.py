from itertools import product

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.optimize import minimize

from cce_dynamics.data_models.polytopes import Infoset, Treeplex
from cce_dynamics.errors import InvalidInputError, ProjectionError
from cce_dynamics.services import polytope_service
from cce_dynamics.services.game_catalog_service import benchmark_sequence_form
from cce_dynamics.services.polytope_service import (
    best_vertex,
    constants,
    is_feasible,
    parse_treeplex,
    project_simplex,
    project_treeplex,
    random_point,
    read_treeplex,
    regularizer_min,
    simplex_as_treeplex,
    write_treeplex,
)


def _tp(num_sequences, *ranges) -> Treeplex:
    return Treeplex(
        num_sequences=num_sequences,
        infosets=tuple(Infoset(parent=p, start=a, stop=b) for p, a, b in ranges),
    )


# one decision, then a second decision below its first action
TWO_LEVEL = _tp(5, (0, 1, 3), (1, 3, 5))
# three levels with a three-way decision at the bottom
THREE_LEVEL = _tp(10, (0, 1, 3), (1, 3, 5), (2, 5, 7), (3, 7, 10))
# two independent decisions under the root
PARALLEL = _tp(5, (0, 1, 3), (0, 3, 5))


def _pure_strategies(tp: Treeplex) -> np.ndarray:
    """Every vertex of the treeplex, by enumerating one action per infoset."""
    seen = set()
    for choice in product(*(range(info.size) for info in tp.infosets)):
        z = np.zeros(tp.num_sequences)
        z[0] = 1.0
        for info, k in zip(tp.infosets, choice):
            z[info.start + k] = z[info.parent]
        seen.add(tuple(z))
    return np.array(sorted(seen))


def _two_level_oracle(v: np.ndarray) -> np.ndarray:
    """Projection onto TWO_LEVEL via its parameterization z = (1, a, 1 - a, b, a - b), 0 <= b <= a <= 1."""

    def lift(p):
        a, b = p
        return np.array([1.0, a, 1.0 - a, b, a - b])

    res = minimize(
        lambda p: 0.5 * np.sum((lift(p) - v) ** 2),
        np.array([0.5, 0.25]),
        method="SLSQP",
        constraints=[
            {"type": "ineq", "fun": lambda p: p[1]},
            {"type": "ineq", "fun": lambda p: p[0] - p[1]},
            {"type": "ineq", "fun": lambda p: 1.0 - p[0]},
        ],
        options={"ftol": 1e-14, "maxiter": 500},
    )
    return lift(res.x)


def test_two_level_projection_matches_parameterized_oracle():
    rng = np.random.default_rng(3)
    for _ in range(50):
        v = rng.normal(scale=1.5, size=5)
        np.testing.assert_allclose(project_treeplex(TWO_LEVEL, v), _two_level_oracle(v), atol=1e-6)


@pytest.mark.parametrize("tp", [TWO_LEVEL, THREE_LEVEL, PARALLEL])
def test_projection_satisfies_vertex_variational_inequality(tp):
    vertices = _pure_strategies(tp)
    rng = np.random.default_rng(5)
    for _ in range(20):
        v = rng.normal(scale=2.0, size=tp.num_sequences)
        z = project_treeplex(tp, v)
        assert is_feasible(tp, z, 1e-8)
        assert np.max((vertices - z) @ (v - z)) <= 1e-6


def test_lifted_simplex_projection_agrees_with_simplex():
    tp = simplex_as_treeplex(4)
    rng = np.random.default_rng(9)
    for _ in range(20):
        v = rng.normal(size=5)
        z = project_treeplex(tp, v)
        assert z[0] == pytest.approx(1.0, abs=1e-9)
        np.testing.assert_allclose(z[1:], project_simplex(v[1:]), atol=1e-7)


def test_feasible_point_is_fixed():
    z = np.array([1.0, 0.6, 0.4, 0.5, 0.1])
    np.testing.assert_allclose(project_treeplex(TWO_LEVEL, z), z, atol=1e-10)


@pytest.mark.parametrize("tp", [TWO_LEVEL, THREE_LEVEL, PARALLEL])
def test_best_vertex_matches_enumeration(tp):
    vertices = _pure_strategies(tp)
    rng = np.random.default_rng(17)
    for _ in range(50):
        u = rng.normal(size=tp.num_sequences)
        vertex = best_vertex(tp, u)
        assert vertex.value == pytest.approx(float(np.max(vertices @ u)), abs=1e-12)
        assert vertex.value == pytest.approx(float(vertex.point @ u), abs=1e-12)
        assert any(np.array_equal(vertex.point, w) for w in vertices)


@pytest.mark.parametrize("tp", [TWO_LEVEL, THREE_LEVEL, PARALLEL])
def test_norm_bound_is_largest_vertex_norm(tp):
    vertices = _pure_strategies(tp)
    expected = float(np.max(np.linalg.norm(vertices, axis=1)))
    c = constants(tp)
    assert c.norm_max == pytest.approx(expected)
    assert c.diameter >= float(np.max(np.linalg.norm(vertices[:, None] - vertices[None], axis=2)))


def test_three_level_norm_counts_deepest_path():
    # empty sequence + first action + its follow-up + one of three bottom actions
    assert constants(THREE_LEVEL).norm_max == pytest.approx(2.0)


def test_regularizer_min_is_projection_of_origin():
    vertices = _pure_strategies(THREE_LEVEL)
    z = regularizer_min(THREE_LEVEL)
    assert is_feasible(THREE_LEVEL, z, 1e-8)
    # <w - z, 0 - z> <= 0 for every vertex w
    assert np.max((vertices - z) @ (-z)) <= 1e-6


def test_random_points_are_feasible():
    rng = np.random.default_rng(0)
    for tp in (TWO_LEVEL, THREE_LEVEL, PARALLEL):
        for _ in range(10):
            assert is_feasible(tp, random_point(tp, rng))


def test_overlapping_ranges_rejected():
    with pytest.raises(ValidationError):
        _tp(5, (0, 1, 3), (1, 2, 5))


def test_parent_must_exist_before_use():
    with pytest.raises(ValidationError):
        _tp(5, (3, 1, 3), (0, 3, 5))


def test_ranges_must_cover_all_sequences():
    with pytest.raises(ValidationError):
        _tp(6, (0, 1, 3), (1, 3, 5))


def test_parse_text_format():
    assert parse_treeplex("5\n0: 1..2\n1: 3..4\n") == TWO_LEVEL


def test_write_then_read_file(tmp_path):
    path = tmp_path / "three.tpx"
    write_treeplex(THREE_LEVEL, path)
    assert path.read_text().splitlines()[0] == "10"
    assert read_treeplex(path) == THREE_LEVEL


def test_malformed_treeplex_text_rejected():
    with pytest.raises(InvalidInputError):
        parse_treeplex("5\n0 1..2\n")


def test_nonpositive_tolerance_rejected():
    with pytest.raises(InvalidInputError):
        project_treeplex(TWO_LEVEL, np.zeros(5), tol=0.0)


def test_iteration_cap_raises_projection_error():
    with pytest.raises(ProjectionError) as info:
        project_treeplex(TWO_LEVEL, np.array([0.0, 5.0, -3.0, 2.0, 2.0]), max_iter=1, warm_start=False)
    assert info.value.iterations == 1


@pytest.mark.parametrize("tp", [TWO_LEVEL, THREE_LEVEL, PARALLEL])
def test_projection_is_idempotent(tp):
    rng = np.random.default_rng(29)
    for _ in range(50):
        z = project_treeplex(tp, rng.normal(scale=2.0, size=tp.num_sequences))
        np.testing.assert_allclose(project_treeplex(tp, z), z, atol=1e-9)


@pytest.mark.parametrize("tp", [TWO_LEVEL, THREE_LEVEL, PARALLEL])
def test_projection_is_nonexpansive(tp):
    rng = np.random.default_rng(31)
    for k in range(100):
        u = rng.normal(scale=2.0, size=tp.num_sequences)
        # alternate far pairs with pairs a small step apart
        v = rng.normal(scale=2.0, size=tp.num_sequences) if k % 2 else u + rng.normal(scale=0.05, size=u.size)
        moved = np.linalg.norm(project_treeplex(tp, u) - project_treeplex(tp, v))
        assert moved <= np.linalg.norm(u - v) + 1e-9


def _liars_dice_treeplex() -> Treeplex:
    return benchmark_sequence_form("liars-dice").game.polytope_x


def test_large_treeplex_projection_matches_dykstra():
    tp = _liars_dice_treeplex()
    rng = np.random.default_rng(37)
    z = project_treeplex(tp, rng.normal(size=tp.num_sequences))
    for _ in range(8):
        # drift the way OGD steps do: previous point plus a utility step
        v = z + 0.2 * rng.normal(size=tp.num_sequences)
        z = project_treeplex(tp, v)
        reference = polytope_service._dykstra(tp, v, 1e-11, 100000)
        assert is_feasible(tp, z, 1e-8)
        np.testing.assert_allclose(z, reference, atol=1e-6)
        np.testing.assert_allclose(project_treeplex(tp, z), z, atol=1e-9)


def test_nearby_points_skip_dykstra(monkeypatch):
    tp = _liars_dice_treeplex()
    rng = np.random.default_rng(41)
    v = rng.normal(size=tp.num_sequences)
    first = project_treeplex(tp, v)

    calls = []
    dykstra = polytope_service._dykstra

    def counting(*args):
        calls.append(args)
        return dykstra(*args)

    monkeypatch.setattr(polytope_service, "_dykstra", counting)
    for _ in range(20):
        z = project_treeplex(tp, v + 1e-9 * rng.normal(size=v.size))
        np.testing.assert_allclose(z, first, atol=1e-7)
    assert calls == []


def test_cold_projection_agrees_with_warm_projection():
    rng = np.random.default_rng(43)
    for _ in range(30):
        v = rng.normal(scale=2.0, size=THREE_LEVEL.num_sequences)
        warm = project_treeplex(THREE_LEVEL, v)
        cold = project_treeplex(THREE_LEVEL, v, warm_start=False)
        np.testing.assert_allclose(warm, cold, atol=1e-8)
