"""
Dense two-phase simplex method with Bland's anti-cycling rule.

The program is brought to standard form (maximize c^T z, A z = b, z >= 0,
b >= 0): finite lower bounds are shifted to zero, free variables are split
into a positive and a negative part, and inequality rows receive slack
columns. Phase I drives a sum of artificial variables to zero; phase II
optimizes the real objective from the feasible basis found.
"""
from __future__ import annotations

from typing import List, Optional, Tuple

import logging

import numpy as np

from cce_dynamics.data_models.lp import LinearProgram, LPSolution, LPStatus
from cce_dynamics.errors import InvalidInputError

logger = logging.getLogger(__name__)

PIVOT_TOL = 1e-10
PHASE_ONE_TOL = 1e-9
FEASIBILITY_TOL = 1e-8
DUAL_TOL = 1e-7
MAX_PIVOTS = 50000


class _StandardForm:
    """maximize cost @ z s.t. matrix @ z = rhs, z >= 0, plus the map back to x."""

    def __init__(self, lp: LinearProgram) -> None:
        n = lp.num_vars
        lower = lp.lower_bounds()
        if np.any(np.isnan(lower)) or np.any(np.isposinf(lower)):
            raise InvalidInputError("variable lower bounds must be finite or -inf")
        free = np.isneginf(lower)
        self.shift = np.where(free, 0.0, lower)
        # x = shift + subst @ z_struct
        self.subst = np.hstack([np.eye(n), -np.eye(n)[:, free]])
        self.num_struct = self.subst.shape[1]

        blocks: List[np.ndarray] = []
        rhs: List[np.ndarray] = []
        num_eq = 0
        if lp.eq_lhs is not None:
            blocks.append(lp.eq_lhs @ self.subst)
            rhs.append(lp.eq_rhs - lp.eq_lhs @ self.shift)
            num_eq = lp.eq_lhs.shape[0]
        num_ub = 0
        if lp.ub_lhs is not None:
            blocks.append(lp.ub_lhs @ self.subst)
            rhs.append(lp.ub_rhs - lp.ub_lhs @ self.shift)
            num_ub = lp.ub_lhs.shape[0]

        num_rows = num_eq + num_ub
        struct = np.vstack(blocks) if blocks else np.zeros((0, self.num_struct))
        slack = np.zeros((num_rows, num_ub))
        slack[num_eq:, :] = np.eye(num_ub)
        self.matrix = np.hstack([struct, slack])
        self.rhs = np.concatenate(rhs) if rhs else np.zeros(0)
        self.cost = np.concatenate([self.subst.T @ lp.objective, np.zeros(num_ub)])

        # rows whose slack can start in the basis
        self.slack_basis: List[Optional[int]] = [None] * num_eq + [
            self.num_struct + k for k in range(num_ub)
        ]
        flip = self.rhs < 0
        self.matrix[flip] *= -1.0
        self.rhs[flip] *= -1.0
        for i in np.flatnonzero(flip):
            self.slack_basis[i] = None

    @property
    def num_cols(self) -> int:
        return self.matrix.shape[1]

    def to_original(self, z: np.ndarray) -> np.ndarray:
        return self.shift + self.subst @ z[: self.num_struct]


def _pivot(tableau: np.ndarray, row: int, col: int) -> None:
    tableau[row, :] /= tableau[row, col]
    column = tableau[:, col].copy()
    column[row] = 0.0
    tableau -= np.outer(column, tableau[row, :])


def _reduced_row(tableau: np.ndarray, basis: List[int], cost: np.ndarray) -> np.ndarray:
    """Objective row z_j - c_j (last entry: current objective value)."""
    row = np.zeros(tableau.shape[1])
    row[: cost.shape[0]] = -cost
    for r, col in enumerate(basis):
        row += cost[col] * tableau[r, :]
    return row


def _entering(objective_row: np.ndarray, num_cols: int) -> int:
    """Bland: lowest-index column with a negative reduced cost, or -1."""
    candidates = np.flatnonzero(objective_row[:num_cols] < -PIVOT_TOL)
    return int(candidates[0]) if candidates.size else -1


def _leaving(tableau: np.ndarray, basis: List[int], col: int) -> int:
    """Minimum ratio row; ties go to the lowest basic variable index. -1 if unbounded."""
    column = tableau[:-1, col]
    rows = np.flatnonzero(column > PIVOT_TOL)
    if rows.size == 0:
        return -1
    ratios = tableau[rows, -1] / column[rows]
    best = ratios.min()
    tied = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
    return int(min(tied, key=lambda r: basis[r]))


def _run_simplex(tableau: np.ndarray, basis: List[int], num_cols: int, budget: int) -> Tuple[str, int]:
    pivots = 0
    while pivots < budget:
        col = _entering(tableau[-1, :], num_cols)
        if col < 0:
            return "optimal", pivots
        row = _leaving(tableau, basis, col)
        if row < 0:
            return "unbounded", pivots
        _pivot(tableau, row, col)
        basis[row] = col
        pivots += 1
    return "pivot_limit", pivots


def _phase_one(form: _StandardForm) -> Tuple[np.ndarray, List[int], List[int], int, Optional[str]]:
    """
    Feasible basis for the standard form, or a failure reason.

    Returns (phase II tableau, basis, surviving original rows, pivots, failure).
    """
    num_rows, num_cols = form.matrix.shape
    art_rows = [i for i, col in enumerate(form.slack_basis) if col is None]
    tableau = np.zeros((num_rows + 1, num_cols + len(art_rows) + 1))
    tableau[:num_rows, :num_cols] = form.matrix
    tableau[:num_rows, -1] = form.rhs
    basis: List[int] = []
    art_of_row = {row: num_cols + k for k, row in enumerate(art_rows)}
    for i in range(num_rows):
        if i in art_of_row:
            tableau[i, art_of_row[i]] = 1.0
            basis.append(art_of_row[i])
        else:
            basis.append(form.slack_basis[i])

    cost = np.zeros(tableau.shape[1] - 1)
    cost[num_cols:] = -1.0
    tableau[-1, :] = _reduced_row(tableau, basis, cost)
    status, pivots = _run_simplex(tableau, basis, tableau.shape[1] - 1, MAX_PIVOTS)
    if status != "optimal":
        return tableau, basis, [], pivots, f"phase I stopped: {status}"
    scale = max(1.0, float(np.max(form.rhs, initial=0.0)))
    if tableau[-1, -1] < -PHASE_ONE_TOL * scale:
        return tableau, basis, [], pivots, "infeasible"

    # Drive remaining artificials out; rows where that is impossible are redundant.
    keep = []
    for r in range(num_rows):
        if basis[r] >= num_cols:
            candidates = np.flatnonzero(np.abs(tableau[r, :num_cols]) > PIVOT_TOL)
            if candidates.size == 0:
                continue
            _pivot(tableau, r, int(candidates[0]))
            basis[r] = int(candidates[0])
            pivots += 1
        keep.append(r)
    dropped = num_rows - len(keep)
    if dropped:
        logger.debug("Dropped %d redundant constraint rows after phase I", dropped)
    rows = keep + [num_rows]
    columns = list(range(num_cols)) + [tableau.shape[1] - 1]
    return tableau[np.ix_(rows, columns)], [basis[r] for r in keep], keep, pivots, None


def solve_lp(lp: LinearProgram) -> LPSolution:
    """
    Solve `lp` (a maximization) to optimality.

    Optimality is certified by the dual residual max(0, max_j (c - A^T y)_j)
    with y solving B^T y = c_B; a residual above 1e-7 or a primal violation
    above 1e-8 is reported as a failed solve.
    """
    form = _StandardForm(lp)
    if form.matrix.shape[0] == 0:
        if np.any(form.cost > 0):
            return LPSolution(status=LPStatus.UNBOUNDED, message="no constraints and an improving direction")
        point = form.to_original(np.zeros(form.num_cols))
        return LPSolution(
            status=LPStatus.OPTIMAL,
            point=point,
            objective_value=float(lp.objective @ point),
            dual_residual=0.0,
        )

    tableau, basis, kept_rows, pivots, failure = _phase_one(form)
    if failure == "infeasible":
        logger.info("LP infeasible after %d pivots", pivots)
        return LPSolution(status=LPStatus.INFEASIBLE, pivots=pivots, message="phase I optimum is positive")
    if failure is not None:
        return LPSolution(status=LPStatus.FAILED, pivots=pivots, message=failure)

    tableau[-1, :] = _reduced_row(tableau, basis, form.cost)
    status, more = _run_simplex(tableau, basis, form.num_cols, MAX_PIVOTS - pivots)
    pivots += more
    if status == "unbounded":
        logger.info("LP unbounded after %d pivots", pivots)
        return LPSolution(status=LPStatus.UNBOUNDED, pivots=pivots, basis=list(basis))
    if status != "optimal":
        return LPSolution(status=LPStatus.FAILED, pivots=pivots, message=f"phase II stopped: {status}")

    z = np.zeros(form.num_cols)
    z[basis] = tableau[:-1, -1]
    z = np.maximum(z, 0.0)
    point = form.to_original(z)

    a_rows = form.matrix[kept_rows]
    duals = np.linalg.lstsq(a_rows[:, basis].T, form.cost[basis], rcond=None)[0]
    dual_residual = max(0.0, float(np.max(form.cost - a_rows.T @ duals)))
    violation = _primal_violation(lp, point)

    message = ""
    status = LPStatus.OPTIMAL
    scale = max(1.0, float(np.max(np.abs(point))))
    if violation > FEASIBILITY_TOL * scale:
        status, message = LPStatus.FAILED, f"primal violation {violation:.3g}"
    elif dual_residual > DUAL_TOL * max(1.0, float(np.max(np.abs(form.cost)))):
        status, message = LPStatus.FAILED, f"dual residual {dual_residual:.3g}"
    logger.info("LP %s after %d pivots", status.value, pivots)
    return LPSolution(
        status=status,
        point=point,
        objective_value=float(lp.objective @ point),
        dual_residual=dual_residual,
        pivots=pivots,
        basis=[int(b) for b in basis],
        message=message,
    )


def _primal_violation(lp: LinearProgram, x: np.ndarray) -> float:
    worst = float(np.max(lp.lower_bounds() - x, initial=0.0))
    if lp.eq_lhs is not None:
        worst = max(worst, float(np.max(np.abs(lp.eq_lhs @ x - lp.eq_rhs))))
    if lp.ub_lhs is not None:
        worst = max(worst, float(np.max(lp.ub_lhs @ x - lp.ub_rhs, initial=0.0)))
    return worst
