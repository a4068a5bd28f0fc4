"""
Strategy-set operations for simplices and treeplexes.

Euclidean projection, linear maximization (best response), the minimizer of
the Euclidean regularizer, geometric constants and the plain-text treeplex
format used by the game loader.
"""
from __future__ import annotations

from collections import OrderedDict
from functools import lru_cache
from pathlib import Path
from typing import Callable, List, Optional, Tuple

import logging

import numpy as np
import scipy.sparse as sps
import scipy.sparse.linalg as spsla

from cce_dynamics.config import PROJECTION_MAX_ITER, PROJECTION_TOL
from cce_dynamics.data_models.polytopes import (
    Infoset,
    PolytopeConstants,
    Simplex,
    StrategyPolytope,
    Treeplex,
    Vertex,
)
from cce_dynamics.errors import InvalidInputError, ProjectionError

logger = logging.getLogger(__name__)


FEASIBILITY_TOL = 1e-9

# Treeplex active-set solve: repair rounds per call, factorized supports kept per treeplex
ACTIVE_SET_MAX_ROUNDS = 8
SUPPORT_CACHE_SIZE = 32


def _as_vector(v, expected: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(v, dtype=float).ravel()
    if arr.size == 0:
        raise InvalidInputError("cannot operate on an empty vector")
    if expected is not None and arr.size != expected:
        raise InvalidInputError(f"vector has length {arr.size}, polytope dimension is {expected}")
    return arr


def project_simplex(v) -> np.ndarray:
    """
    Euclidean projection onto the probability simplex.

    Sort-and-threshold method: find the largest rho with
    u_rho + (1 - sum_{i<=rho} u_i) / rho > 0 on the sorted vector u and shift
    every coordinate by that threshold before clipping at zero.
    """
    v = _as_vector(v)
    u = np.sort(v)[::-1]
    cumsum = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    rho = int(np.nonzero(u + (1.0 - cumsum) / ks > 0)[0][-1])
    theta = (1.0 - cumsum[rho]) / (rho + 1.0)
    z = np.maximum(v + theta, 0.0)
    # Renormalize the surviving mass so the sum is exact to rounding.
    return z / z.sum()


@lru_cache(maxsize=64)
def _constraint_matrix(tp: Treeplex) -> sps.csr_matrix:
    rows: List[int] = [0]
    cols: List[int] = [0]
    vals: List[float] = [1.0]
    for k, info in enumerate(tp.infosets, start=1):
        for seq in range(info.start, info.stop):
            rows.append(k)
            cols.append(seq)
            vals.append(1.0)
        rows.append(k)
        cols.append(info.parent)
        vals.append(-1.0)
    return sps.csr_matrix((vals, (rows, cols)), shape=(len(tp.infosets) + 1, tp.num_sequences))


@lru_cache(maxsize=64)
def _affine_projector(tp: Treeplex) -> Callable[[np.ndarray], np.ndarray]:
    """Closed-form projection onto {z : Cz = e_0} via a sparse factorization of C C^T."""
    c_mat = _constraint_matrix(tp)
    c_t = c_mat.T.tocsr()
    solve = spsla.factorized((c_mat @ c_t).tocsc())
    rhs = np.zeros(c_mat.shape[0])
    rhs[0] = 1.0

    def project(w: np.ndarray) -> np.ndarray:
        return w - c_t @ solve(c_mat @ w - rhs)

    return project


def constraint_residual(tp: Treeplex, z: np.ndarray) -> float:
    """Max violation of the treeplex equalities and nonnegativity at z."""
    c_mat = _constraint_matrix(tp)
    rhs = np.zeros(c_mat.shape[0])
    rhs[0] = 1.0
    eq = float(np.max(np.abs(c_mat @ z - rhs)))
    return max(eq, float(max(0.0, -np.min(z))))


class _TreeplexPlan:
    """
    Index arrays for the exact active-set projection onto one treeplex.

    Row k + 1 of the constraint matrix belongs to infoset k and row 0 to the
    empty sequence. `levels` groups infosets by height above the leaves so the
    bottom-up best-response values can be accumulated one level at a time.
    Also remembers the support of the last projection and the factorized
    systems of recently seen supports.
    """

    def __init__(self, tp: Treeplex) -> None:
        n = tp.num_sequences
        m = len(tp.infosets)
        self.c_mat = _constraint_matrix(tp)
        self.ranges: List[Tuple[int, int]] = [(info.start, info.stop) for info in tp.infosets]
        self.row_of_seq = np.zeros(n, dtype=int)
        # the root row hangs off the empty sequence, which is always in the support
        self.parent_of_row = np.zeros(m + 1, dtype=int)
        self.children: List[List[int]] = [[] for _ in range(n)]
        for k, info in enumerate(tp.infosets):
            self.row_of_seq[info.start:info.stop] = k + 1
            self.parent_of_row[k + 1] = info.parent
            self.children[info.parent].append(k)

        seq_height = np.zeros(n, dtype=int)
        height = np.zeros(m, dtype=int)
        for k in range(m - 1, -1, -1):
            start, stop = self.ranges[k]
            height[k] = 1 + int(seq_height[start:stop].max())
            parent = tp.infosets[k].parent
            seq_height[parent] = max(seq_height[parent], height[k])
        self.levels: List[Tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        for h in range(1, int(height.max(initial=0)) + 1):
            members = np.flatnonzero(height == h)
            sizes = [self.ranges[k][1] - self.ranges[k][0] for k in members]
            flat = np.concatenate([np.arange(*self.ranges[k]) for k in members])
            offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(int)
            self.levels.append((flat, offsets, self.parent_of_row[members + 1]))

        self.last_support: Optional[np.ndarray] = None
        self._systems: "OrderedDict[bytes, Optional[_SupportSystem]]" = OrderedDict()

    def subtree_values(self, v: np.ndarray) -> np.ndarray:
        """v[s] plus, for each infoset below s, the best value reachable from it."""
        values = v.copy()
        for flat, offsets, parents in self.levels:
            np.add.at(values, parents, np.maximum.reduceat(values[flat], offsets))
        return values

    def system(self, support: np.ndarray) -> Optional["_SupportSystem"]:
        key = support.tobytes()
        if key in self._systems:
            self._systems.move_to_end(key)
            return self._systems[key]
        system = _SupportSystem.build(self, support)
        self._systems[key] = system
        if len(self._systems) > SUPPORT_CACHE_SIZE:
            self._systems.popitem(last=False)
        return system

    def drop_subtree(self, support: np.ndarray, seq: int) -> None:
        stack = [seq]
        while stack:
            s = stack.pop()
            support[s] = False
            for k in self.children[s]:
                stack.extend(range(*self.ranges[k]))

    def add_best_path(self, support: np.ndarray, seq: int, values: np.ndarray) -> None:
        stack = [seq]
        while stack:
            s = stack.pop()
            support[s] = True
            for k in self.children[s]:
                start, stop = self.ranges[k]
                stack.append(start + int(np.argmax(values[start:stop])))


class _SupportSystem:
    """Equality constraints restricted to one support, with C_S C_S^T factorized."""

    def __init__(self, kept: np.ndarray, cols: np.ndarray, sub: sps.csr_matrix) -> None:
        self.kept = kept
        self.cols = cols
        self.sub = sub
        self.sub_t = sub.T.tocsr()
        self.solve = spsla.factorized((sub @ self.sub_t).tocsc())

    @classmethod
    def build(cls, plan: _TreeplexPlan, support: np.ndarray) -> Optional["_SupportSystem"]:
        kept_mask = support[plan.parent_of_row]
        cols = np.flatnonzero(support)
        if not np.all(kept_mask[plan.row_of_seq[cols]]):
            return None
        kept = np.flatnonzero(kept_mask)
        sub = plan.c_mat[kept][:, cols]
        # each kept infoset needs one of its own actions next to the parent column
        if np.any(np.diff(sub.indptr)[1:] < 2):
            return None
        return cls(kept, cols, sub)


@lru_cache(maxsize=64)
def _plan(tp: Treeplex) -> _TreeplexPlan:
    return _TreeplexPlan(tp)


def _active_set_projection(
    plan: _TreeplexPlan, v: np.ndarray, support: np.ndarray, tol: float
) -> Optional[np.ndarray]:
    """
    Exact projection from a guessed support, or None if no round verifies.

    Each round solves the equalities on the support in closed form and checks
    the optimality conditions: no negative coordinate on the support, and for
    every zero sequence under a kept infoset the infoset multiplier is at least
    the best value of the dropped subtree. Failed rounds drop the subtrees of
    negative coordinates and add the best path below violating sequences.
    """
    threshold = tol * max(1.0, float(np.max(np.abs(v))))
    values = plan.subtree_values(v)
    seen = set()
    support = support.copy()
    support[0] = True
    for _ in range(ACTIVE_SET_MAX_ROUNDS):
        key = support.tobytes()
        if key in seen:
            return None
        seen.add(key)
        system = plan.system(support)
        if system is None:
            return None

        rhs = system.sub @ v[system.cols]
        rhs[0] -= 1.0
        nu = system.solve(rhs)
        z = np.zeros_like(v)
        z[system.cols] = v[system.cols] - system.sub_t @ nu

        nu_rows = np.full(plan.parent_of_row.size, np.inf)
        nu_rows[system.kept] = nu
        negative = support & (z < -threshold)
        violated = ~support & (nu_rows[plan.row_of_seq] - values < -threshold)
        if not negative.any() and not violated.any():
            plan.last_support = support
            return np.maximum(z, 0.0)

        support = support.copy()
        for seq in np.flatnonzero(negative):
            plan.drop_subtree(support, int(seq))
        for seq in np.flatnonzero(violated):
            plan.add_best_path(support, int(seq), values)
        support[0] = True
    return None


def _dykstra(tp: Treeplex, v: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    affine = _affine_projector(tp)
    c_mat = _constraint_matrix(tp)
    rhs = np.zeros(c_mat.shape[0])
    rhs[0] = 1.0

    x = v.copy()
    p = np.zeros_like(v)
    q = np.zeros_like(v)
    residual = np.inf
    for iteration in range(1, max_iter + 1):
        y = affine(x + p)
        p = x + p - y
        x_next = np.maximum(y + q, 0.0)
        q = y + q - x_next
        step = float(np.linalg.norm(x_next - x))
        x = x_next
        residual = max(step, float(np.max(np.abs(c_mat @ x - rhs))))
        if residual < tol:
            logger.debug("Treeplex projection converged in %d iterations", iteration)
            return x
    raise ProjectionError("Dykstra projection onto treeplex did not converge", residual, max_iter)


def project_treeplex(
    tp: Treeplex,
    v,
    tol: float = PROJECTION_TOL,
    max_iter: int = PROJECTION_MAX_ITER,
    warm_start: bool = True,
) -> np.ndarray:
    """
    Euclidean projection onto a treeplex.

    With `warm_start`, first tries the exact active-set solve from the support
    of the previous projection onto the same treeplex. Otherwise, or when that
    fails, runs Dykstra's alternating projections between the affine set of
    the flow constraints and the nonnegative orthant until successive iterates
    move by less than `tol`, then polishes the result with the active-set solve
    from the Dykstra support. The Dykstra iterate is returned as is when the
    polish does not verify.
    """
    if tol <= 0:
        raise InvalidInputError(f"projection tolerance must be positive, got {tol}")
    v = _as_vector(v, tp.num_sequences)
    plan = _plan(tp)
    if warm_start and plan.last_support is not None:
        z = _active_set_projection(plan, v, plan.last_support, tol)
        if z is not None:
            return z
    x = _dykstra(tp, v, tol, max_iter)
    z = _active_set_projection(plan, v, x > 0.0, tol)
    if z is None:
        logger.debug("Active-set polish did not verify; keeping the Dykstra iterate")
        return x
    return z


def project(p: StrategyPolytope, v, tol: float = PROJECTION_TOL) -> np.ndarray:
    if isinstance(p, Simplex):
        return project_simplex(_as_vector(v, p.dim))
    return project_treeplex(p, v, tol)


def _treeplex_best_response(tp: Treeplex, u: np.ndarray) -> Tuple[np.ndarray, float]:
    values = u.copy()
    choice = np.empty(len(tp.infosets), dtype=int)
    for k in range(len(tp.infosets) - 1, -1, -1):
        info = tp.infosets[k]
        best = info.start + int(np.argmax(values[info.start:info.stop]))
        choice[k] = best
        values[info.parent] += values[best]
    z = np.zeros(tp.num_sequences)
    z[0] = 1.0
    for k, info in enumerate(tp.infosets):
        if z[info.parent] == 1.0:
            z[choice[k]] = 1.0
    return z, float(values[0])


def best_vertex(p: StrategyPolytope, u) -> Vertex:
    """
    Vertex maximizing <x, u> over p and the maximal value.

    Simplex: argmax coordinate, ties broken toward the lowest index.
    Treeplex: bottom-up pass where each infoset adds its best child value to
    the parent sequence, then a top-down pass reading off the pure strategy.
    """
    u = _as_vector(u, p.dimension)
    if isinstance(p, Simplex):
        i = int(np.argmax(u))
        point = np.zeros(p.dim)
        point[i] = 1.0
        return Vertex(point=point, value=float(u[i]))
    point, value = _treeplex_best_response(p, u)
    return Vertex(point=point, value=value)


def best_value(p: StrategyPolytope, u) -> float:
    return best_vertex(p, u).value


def regularizer_min(p: StrategyPolytope, tol: float = PROJECTION_TOL) -> np.ndarray:
    """Minimizer of 1/2 ||x||^2 over p, i.e. the projection of the origin."""
    if isinstance(p, Simplex):
        return np.full(p.dim, 1.0 / p.dim)
    return project_treeplex(p, np.zeros(p.num_sequences), tol)


def _treeplex_max_ones(tp: Treeplex) -> int:
    counts = np.ones(tp.num_sequences, dtype=int)
    for info in reversed(tp.infosets):
        counts[info.parent] += int(np.max(counts[info.start:info.stop]))
    return int(counts[0])


def constants(p: StrategyPolytope, center: Optional[np.ndarray] = None) -> PolytopeConstants:
    """
    Norm bound, diameter and Euclidean Bregman diameter of p.

    The Bregman diameter is measured around `center` (defaults to the
    regularizer minimizer). Treeplex diameters use the 2 * norm_max bound and
    the Bregman diameter uses 1/2 * diameter^2.
    """
    if isinstance(p, Simplex):
        if center is None:
            center = np.full(p.dim, 1.0 / p.dim)
        center = _as_vector(center, p.dim)
        # max over vertices e_i of ||e_i - c||^2 = ||c||^2 - 2 c_i + 1
        bregman = 0.5 * float(np.max(center @ center - 2.0 * center + 1.0))
        diameter = float(np.sqrt(2.0)) if p.dim >= 2 else 0.0
        return PolytopeConstants(norm_max=1.0, diameter=diameter, bregman_diameter=max(bregman, 0.0))
    norm_max = float(np.sqrt(_treeplex_max_ones(p)))
    diameter = 2.0 * norm_max
    return PolytopeConstants(norm_max=norm_max, diameter=diameter, bregman_diameter=0.5 * diameter**2)


def is_feasible(p: StrategyPolytope, z, tol: float = FEASIBILITY_TOL) -> bool:
    z = _as_vector(z, p.dimension)
    if isinstance(p, Simplex):
        return bool(np.min(z) >= -tol and abs(z.sum() - 1.0) <= tol)
    return constraint_residual(p, z) <= tol


def random_point(p: StrategyPolytope, rng: np.random.Generator) -> np.ndarray:
    """Random feasible point: uniform on a simplex, per-infoset Dirichlet(1) on a treeplex."""
    if isinstance(p, Simplex):
        return rng.dirichlet(np.ones(p.dim))
    z = np.zeros(p.num_sequences)
    z[0] = 1.0
    for info in p.infosets:
        z[info.start:info.stop] = z[info.parent] * rng.dirichlet(np.ones(info.size))
    return z


def simplex_as_treeplex(dim: int) -> Treeplex:
    """Treeplex with a single infoset under the root (a lifted simplex)."""
    return Treeplex(num_sequences=dim + 1, infosets=(Infoset(parent=0, start=1, stop=dim + 1),))


def write_treeplex(tp: Treeplex, path: Path) -> None:
    """Write `num_sequences` then one `parent: first..last` line per infoset (inclusive range)."""
    lines = [str(tp.num_sequences)]
    lines += [f"{info.parent}: {info.start}..{info.stop - 1}" for info in tp.infosets]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def parse_treeplex(text: str) -> Treeplex:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise InvalidInputError("treeplex file is empty")
    try:
        num_sequences = int(lines[0])
        infosets = []
        for ln in lines[1:]:
            parent, span = ln.split(":", 1)
            first, last = span.split("..", 1)
            infosets.append(Infoset(parent=int(parent), start=int(first), stop=int(last) + 1))
    except ValueError as exc:
        raise InvalidInputError(f"malformed treeplex line: {exc}") from exc
    return Treeplex(num_sequences=num_sequences, infosets=tuple(infosets))


def read_treeplex(path: Path) -> Treeplex:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Treeplex file not found: {path}")
    tp = parse_treeplex(path.read_text(encoding="utf-8"))
    logger.info("Loaded treeplex with %d sequences and %d infosets from %s",
                tp.num_sequences, len(tp.infosets), path)
    return tp
