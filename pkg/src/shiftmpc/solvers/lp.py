"""
Dense two-phase simplex. Problems handled here are small (tens to a few
hundred variables), so a full tableau is simpler and fast enough.

Pivoting follows Dantzig's rule. When too many degenerate pivots happen in
a row it falls back to Bland's rule, which cannot cycle, until the
objective moves again.
"""
import logging
from typing import List, Optional, Tuple

import numpy as np

from shiftmpc.conf import settings

from .problem import QpProblem, QpSolution, SolverError, Status

logger = logging.getLogger("shiftmpc.solvers.lp")


class _Tableau(object):
    """
    Rows of B^-1 [A | b] for the current basis. Columns listed in `blocked`
    are never allowed to enter.
    """

    def __init__(self, A: np.ndarray, b: np.ndarray, basis: List[int]):
        self.T = np.column_stack([A, b]).astype(float)
        self.basis = list(basis)
        self.blocked = np.zeros(A.shape[1], dtype=bool)
        self.pivots = 0

    @property
    def rhs(self) -> np.ndarray:
        return self.T[:, -1]

    def pivot(self, row: int, col: int) -> None:
        T = self.T
        T[row] /= T[row, col]
        factor = T[:, col].copy()
        factor[row] = 0.0
        T -= np.outer(factor, T[row])
        self.basis[row] = col
        self.pivots += 1

    def drop_row(self, row: int) -> None:
        self.T = np.delete(self.T, row, axis=0)
        del self.basis[row]

    def run(self, cost: np.ndarray, tol: float, max_pivots: int) -> Tuple[Status, int]:
        """
        Minimize cost^T x from the current (feasible) basis. Returns the
        status and, for an unbounded problem, the column along which the
        objective decreases without limit.
        """

        degenerate = 0

        while True:
            if self.pivots >= max_pivots:
                return Status.MAX_ITER, -1

            A = self.T[:, :-1]
            reduced = cost - cost[self.basis] @ A
            reduced[self.blocked] = 0.0
            reduced[self.basis] = 0.0
            candidates = np.flatnonzero(reduced < -tol)

            if not candidates.size:
                return Status.OPTIMAL, -1

            bland = degenerate >= settings.LP_BLAND_AFTER

            if bland:
                col = int(candidates[0])
            else:
                col = int(candidates[np.argmin(reduced[candidates])])

            column = A[:, col]
            rows = np.flatnonzero(column > tol)

            if not rows.size:
                return Status.UNBOUNDED, col

            ratios = self.rhs[rows] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + tol]

            if bland:
                row = int(min(ties, key=lambda r: self.basis[r]))
            else:
                row = int(ties[np.argmax(column[ties])])

            if best <= tol:
                degenerate += 1
            else:
                degenerate = 0

            self.pivot(row, col)


def solve_lp(problem: QpProblem, max_pivots: Optional[int] = None) -> QpSolution:
    """
    Solve min f^T z s.t. Aeq z = beq, Ain z <= bin. The Hessian of
    `problem` must be zero.

    Multipliers follow the same convention as the QP solver:
    f + Aeq^T mu + Ain^T lambda = 0 with lambda >= 0.
    """

    if np.any(problem.H != 0.0):
        raise SolverError("solve_lp() needs a zero Hessian")

    if max_pivots is None:
        max_pivots = settings.LP_MAX_PIVOTS

    tol = settings.LP_PIVOT_TOL
    n, p, q = problem.n, problem.p, problem.q

    # Columns: z+ (n), z- (n), slacks (q). Rows: inequalities then equalities.
    rows = q + p
    A = np.zeros((rows, 2 * n + q))
    A[:q, :n] = problem.Ain
    A[:q, n : 2 * n] = -problem.Ain
    A[:q, 2 * n :] = np.eye(q)
    A[q:, :n] = problem.Aeq
    A[q:, n : 2 * n] = -problem.Aeq
    b = np.concatenate([problem.bin, problem.beq])

    sign = np.where(b < 0.0, -1.0, 1.0)
    A *= sign[:, None]
    b = b * sign

    basis = [-1] * rows
    need_artificial = []

    for i in range(q):
        if sign[i] > 0:
            basis[i] = 2 * n + i
        else:
            need_artificial.append(i)

    need_artificial += list(range(q, rows))
    n_real = A.shape[1]
    art = np.zeros((rows, len(need_artificial)))

    for j, i in enumerate(need_artificial):
        art[i, j] = 1.0
        basis[i] = n_real + j

    A0 = A.copy()
    tableau = _Tableau(np.column_stack([A, art]), b, basis)
    original_rows = list(range(rows))
    scale = max(1.0, float(np.max(np.abs(b))) if b.size else 1.0)

    if need_artificial:
        cost1 = np.zeros(n_real + len(need_artificial))
        cost1[n_real:] = 1.0
        status, _ = tableau.run(cost1, tol, max_pivots)

        if status == Status.MAX_ITER:
            return _failure(problem, Status.MAX_ITER, tableau.pivots)

        infeasibility = float(cost1[tableau.basis] @ tableau.rhs)

        if infeasibility > tol * scale:
            logger.debug("LP infeasible, phase 1 ended at %.3g", infeasibility)
            return _failure(problem, Status.INFEASIBLE, tableau.pivots)

        # Push remaining (zero-level) artificials out of the basis. Rows
        # where that's impossible are linear combinations of the others.
        r = 0

        while r < len(tableau.basis):
            if tableau.basis[r] >= n_real:
                candidates = np.flatnonzero(np.abs(tableau.T[r, :n_real]) > tol)

                if candidates.size:
                    tableau.pivot(r, int(candidates[0]))
                else:
                    original_rows.remove(need_artificial[tableau.basis[r] - n_real])
                    tableau.drop_row(r)
                    continue

            r += 1

        tableau.T = np.delete(tableau.T, np.s_[n_real:-1], axis=1)
        tableau.blocked = np.zeros(n_real, dtype=bool)

    cost = np.zeros(n_real)
    cost[:n] = problem.f
    cost[n : 2 * n] = -problem.f

    status, ray_col = tableau.run(cost, tol, max_pivots)

    if status == Status.MAX_ITER:
        return _failure(problem, Status.MAX_ITER, tableau.pivots)

    if status == Status.UNBOUNDED:
        ray = np.zeros(n_real)
        ray[ray_col] = 1.0
        ray[tableau.basis] = -tableau.T[:, ray_col]

        return _failure(
            problem,
            Status.UNBOUNDED,
            tableau.pivots,
            {"ray": ray[:n] - ray[n : 2 * n]},
        )

    x = np.zeros(n_real)
    x[tableau.basis] = tableau.rhs
    z = x[:n] - x[n : 2 * n]

    B = A0[np.ix_(original_rows, tableau.basis)]
    y = np.zeros(rows)

    try:
        y[original_rows] = np.linalg.solve(B.T, cost[tableau.basis])
    except np.linalg.LinAlgError:
        y[original_rows] = np.linalg.lstsq(B.T, cost[tableau.basis], rcond=None)[0]

    y *= sign

    lam = np.maximum(-y[:q], 0.0)
    active = tuple(int(i) for i in np.flatnonzero(lam > 0.0))

    return QpSolution(
        z=z,
        status=Status.OPTIMAL,
        objective=float(problem.f @ z),
        eq_multipliers=-y[q:],
        in_multipliers=lam,
        iterations=tableau.pivots,
        active_set=active,
    )


def _failure(problem: QpProblem, status: Status, pivots: int, diagnostics=None):
    return QpSolution(
        z=np.full(problem.n, np.nan),
        status=status,
        objective=-np.inf if status == Status.UNBOUNDED else np.nan,
        eq_multipliers=np.zeros(problem.p),
        in_multipliers=np.zeros(problem.q),
        iterations=pivots,
        diagnostics=diagnostics or {},
    )
