"""
Bimatrix game construction, normalization and equilibrium gaps.

Normalization follows the usual no-regret assumption that every utility
vector the dynamics can observe has Euclidean norm at most one:
max_y ||A y|| <= 1 and max_x ||B^T x|| <= 1.
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Tuple

import logging

import numpy as np

from cce_dynamics.config import POWER_ITER_MAX_ITER, POWER_ITER_TOL
from cce_dynamics.data_models.game import BimatrixGame, NormalizationMethod, NormalizationReport
from cce_dynamics.data_models.polytopes import Simplex, StrategyPolytope
from cce_dynamics.errors import InvalidInputError
from cce_dynamics.services.polytope_service import best_value, constants, is_feasible, read_treeplex

logger = logging.getLogger(__name__)


EXAMPLE_A = [[1.0, 0.0, 0.0], [-1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
EXAMPLE_B = [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]]
INPUT_FEASIBILITY_TOL = 1e-6


def operator_norm(m, tol: float = POWER_ITER_TOL, max_iter: int = POWER_ITER_MAX_ITER) -> float:
    """
    Spectral norm of `m` by power iteration on m^T m.

    Starts from the all-ones vector; if that start lies in the kernel of
    m^T m the standard basis vectors are tried in order. Stops once the
    Rayleigh quotient changes by less than `tol` relative to its value.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.size == 0:
        raise InvalidInputError(f"operator_norm needs a nonempty matrix, got shape {m.shape}")
    if not np.any(m):
        raise InvalidInputError("operator_norm of the zero matrix is excluded")
    gram = m.T @ m
    starts = [np.ones(gram.shape[0])] + list(np.eye(gram.shape[0]))
    for start in starts:
        v = start / np.linalg.norm(start)
        w = gram @ v
        if not np.any(w):
            continue
        lam = float(v @ w)
        for _ in range(max_iter):
            v = w / np.linalg.norm(w)
            w = gram @ v
            lam_next = float(v @ w)
            if abs(lam_next - lam) <= tol * lam_next:
                return float(np.sqrt(lam_next))
            lam = lam_next
        logger.warning("Power iteration hit the %d-iteration cap; returning current estimate", max_iter)
        return float(np.sqrt(lam))
    # Unreachable for nonzero m: some basis vector is outside the kernel.
    raise InvalidInputError("power iteration found no start vector outside the kernel")


def _utility_bound(mat: np.ndarray, opponent: StrategyPolytope) -> Tuple[float, bool]:
    """max ||mat z|| over the opponent's polytope: exact over simplex vertices, bound otherwise."""
    if not np.any(mat):
        return 0.0, True
    if isinstance(opponent, Simplex):
        return float(np.max(np.linalg.norm(mat, axis=0))), True
    return operator_norm(mat) * constants(opponent).norm_max, False


def utility_bounds(g: BimatrixGame) -> Tuple[float, float, NormalizationMethod]:
    """
    Largest utility-vector norms each player can observe.

    Returns (s_A, s_B, method): s_A bounds ||A y|| over Y, s_B bounds ||B^T x||
    over X. Exact vertex maxima for simplices; operator-norm bounds otherwise.
    """
    s_a, exact_a = _utility_bound(g.a_matrix, g.polytope_y)
    s_b, exact_b = _utility_bound(g.b_matrix.T, g.polytope_x)
    method = (
        NormalizationMethod.EXACT_VERTEX_MAX if exact_a and exact_b else NormalizationMethod.OPERATOR_NORM_BOUND
    )
    return s_a, s_b, method


def normalize(g: BimatrixGame) -> Tuple[BimatrixGame, NormalizationReport]:
    """Divide A by s_A and B by s_B (a zero matrix keeps scale 1)."""
    s_a, s_b, method = utility_bounds(g)
    scale_a = s_a if s_a > 0 else 1.0
    scale_b = s_b if s_b > 0 else 1.0
    normalized = g.model_copy(
        update={"a_matrix": _frozen(g.a_matrix / scale_a), "b_matrix": _frozen(g.b_matrix / scale_b)}
    )
    logger.info("Normalized game %s: scale_a=%.6g scale_b=%.6g (%s)", g.name, scale_a, scale_b, method.value)
    return normalized, NormalizationReport(scale_a=scale_a, scale_b=scale_b, method=method)


def is_normalized(g: BimatrixGame, tol: float = 1e-9) -> bool:
    s_a, s_b, _ = utility_bounds(g)
    return s_a <= 1.0 + tol and s_b <= 1.0 + tol


def _frozen(mat: np.ndarray) -> np.ndarray:
    mat = np.array(mat, dtype=float)
    mat.setflags(write=False)
    return mat


def matrix_game(a_matrix, b_matrix, name: str) -> BimatrixGame:
    """Normal-form game over simplices."""
    a = np.asarray(a_matrix, dtype=float)
    if a.ndim != 2:
        raise InvalidInputError(f"payoff matrix must be 2-dimensional, got shape {a.shape}")
    n, m = a.shape
    return BimatrixGame(
        a_matrix=a_matrix, b_matrix=b_matrix, polytope_x=Simplex(dim=n), polytope_y=Simplex(dim=m), name=name
    )


def example_game() -> BimatrixGame:
    """The 3x3 general-sum game with a unique, fully mixed-for-X Nash equilibrium (unnormalized)."""
    return matrix_game(EXAMPLE_A, EXAMPLE_B, name="example-3x3")


def zero_sum_counterpart(g: BimatrixGame) -> BimatrixGame:
    return g.model_copy(update={"b_matrix": _frozen(-g.a_matrix), "name": f"{g.name}-zerosum"})


def random_game(n: int, m: int, seed: int, normalized: bool = True) -> BimatrixGame:
    """
    Random n x m game with i.i.d. uniform entries in [-1, 1].

    Draws A then B from numpy's PCG64 generator seeded with `seed`, so the
    matrices are reproducible bit-for-bit across platforms.
    """
    if n < 1 or m < 1:
        raise InvalidInputError(f"random_game needs n, m >= 1, got ({n}, {m})")
    rng = np.random.default_rng(seed)
    a = rng.uniform(-1.0, 1.0, size=(n, m))
    b = rng.uniform(-1.0, 1.0, size=(n, m))
    game = matrix_game(a, b, name=f"random-{n}x{m}-s{seed}")
    if normalized:
        game, _ = normalize(game)
    return game


def _check_strategy(p: StrategyPolytope, z: np.ndarray, label: str) -> None:
    if z.shape != (p.dimension,):
        raise InvalidInputError(f"{label} has shape {z.shape}, expected ({p.dimension},)")
    if not is_feasible(p, z, INPUT_FEASIBILITY_TOL):
        raise InvalidInputError(f"{label} is not a feasible strategy")


def nash_gap_components(g: BimatrixGame, x, y, check: bool = True) -> Tuple[float, float]:
    """Each player's best unilateral improvement at (x, y)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if check:
        _check_strategy(g.polytope_x, x, "x")
        _check_strategy(g.polytope_y, y, "y")
    u_x = g.a_matrix @ y
    u_y = g.b_matrix.T @ x
    gap_x = best_value(g.polytope_x, u_x) - float(x @ u_x)
    gap_y = best_value(g.polytope_y, u_y) - float(y @ u_y)
    return gap_x, gap_y


def nash_gap(g: BimatrixGame, x, y) -> float:
    """max over players of the best deviation benefit; (x, y) is an eps-NE iff this is <= eps."""
    return max(nash_gap_components(g, x, y))


def social_welfare(g: BimatrixGame, x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(x @ (g.a_matrix + g.b_matrix) @ y)


def auto_learning_rate(g: BimatrixGame) -> float:
    """1 / (2 * max spectral norm of A, B), the constant step used on the benchmark games."""
    norms = [operator_norm(mat) for mat in (g.a_matrix, g.b_matrix) if np.any(mat)]
    return 1.0 / (2.0 * max(norms))


def parse_matrix_game(text: str, name: str) -> BimatrixGame:
    """
    Parse the matrix-game text format.

    First line "n m", then n lines of m reals for A, a blank line, and n
    lines for B.
    """
    lines = [ln.strip() for ln in text.strip().splitlines()]
    if not lines:
        raise InvalidInputError("matrix game file is empty")
    try:
        n, m = (int(tok) for tok in lines[0].split())
        rows = [ln for ln in lines[1:] if ln]
        values = [[float(tok) for tok in ln.split()] for ln in rows]
    except ValueError as exc:
        raise InvalidInputError(f"malformed matrix game file: {exc}") from exc
    if len(values) != 2 * n or any(len(row) != m for row in values):
        raise InvalidInputError(f"expected {2 * n} rows of {m} numbers after the header")
    return matrix_game(values[:n], values[n:], name=name)


def load_game_file(
    path: Path, treeplex_x: Optional[Path] = None, treeplex_y: Optional[Path] = None
) -> BimatrixGame:
    """Load a matrix game; optional treeplex files replace the simplices."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Game file not found: {path}")
    game = parse_matrix_game(path.read_text(encoding="utf-8"), name=path.stem)
    if treeplex_x is not None or treeplex_y is not None:
        game = BimatrixGame(
            a_matrix=game.a_matrix,
            b_matrix=game.b_matrix,
            polytope_x=read_treeplex(treeplex_x) if treeplex_x else game.polytope_x,
            polytope_y=read_treeplex(treeplex_y) if treeplex_y else game.polytope_y,
            name=game.name,
        )
    logger.info("Loaded game %s with payoff shape %s from %s", game.name, game.shape, path)
    return game
