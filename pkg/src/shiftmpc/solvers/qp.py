"""
Dense dual active-set QP solver (Goldfarb & Idnani).

Equality constraints are eliminated first: with z = z_p + Z y, Z an
orthonormal basis of null(Aeq), the problem becomes

    min 1/2 y^T G y + g^T y  s.t.  N y >= b

with G = Z^T H Z, N = -Ain Z and b = Ain z_p - bin. The solver starts from
the unconstrained minimizer (or from a warm active set) and adds the most
violated constraint at each iteration, dropping active ones whose
multiplier would turn negative. All iterates are dual feasible.

Everything depending on the matrices only (SVD of Aeq, G^-1, N G^-1 N^T)
is computed once per `QpSolver` and reused when only beq changes, which is
what happens between two MPC steps.
"""
import logging
from typing import Dict, List, Optional, Sequence, Text

import numpy as np
from scipy import linalg

from shiftmpc.conf import settings

from .lp import solve_lp
from .problem import QpProblem, QpSolution, SolverError, Status, Tolerances

logger = logging.getLogger("shiftmpc.solvers.qp")


class QpSolver(object):
    """
    Solver bound to the matrices of a problem. Call `solve()` as many times
    as needed with different equality right-hand sides.
    """

    def __init__(self, problem: QpProblem, tolerances: Optional[Tolerances] = None):
        self.problem = problem
        self.tol = tolerances or Tolerances()
        self.diagnostics: Dict[Text, object] = {}
        self._factorize()

    def _factorize(self):
        pb = self.problem
        n = pb.n

        if pb.p:
            U, sv, Vt = linalg.svd(pb.Aeq)
            cutoff = settings.QP_RANK_TOL * max(1.0, float(sv[0]) if sv.size else 0.0)
            r = int(np.sum(sv > cutoff))
        else:
            U, sv, Vt = np.zeros((0, 0)), np.zeros(0), np.eye(n)
            r = 0

        self.rank = r
        self._U = U[:, :r]
        self._sv = sv[:r]
        self._Vr = Vt[:r].T
        self.Z = Vt[r:].T
        self.dof = self.Z.shape[1]

        G = self.Z.T @ pb.H @ self.Z
        G = 0.5 * (G + G.T)
        self.G = G
        self._null_G = np.zeros((self.dof, 0))

        if self.dof:
            eig, vec = np.linalg.eigh(G)
            scale = max(1.0, float(np.max(np.abs(eig))))
            small = eig <= settings.QP_RANK_TOL * scale

            if np.any(small):
                self._null_G = vec[:, small]

            self._chol = self._cholesky(G, scale)
            self.N = -pb.Ain @ self.Z
            self.GinvN = linalg.cho_solve(self._chol, self.N.T)
            self.P = self.N @ self.GinvN
        else:
            self._chol = None
            self.N = np.zeros((pb.q, 0))
            self.GinvN = np.zeros((0, pb.q))
            self.P = np.zeros((pb.q, pb.q))

    def _cholesky(self, G: np.ndarray, scale: float):
        """
        Factorize G. Only when that fails (or leaves pivots that are zero
        relative to `scale`) is G regularized and factorized again.
        """

        try:
            chol = linalg.cho_factor(G, lower=True)
            pivots = np.abs(np.diag(chol[0])) ** 2

            if np.min(pivots) > settings.QP_RANK_TOL * scale:
                return chol
        except linalg.LinAlgError:
            pass

        reg = settings.QP_REGULARIZATION * scale
        self.diagnostics["regularization"] = reg
        logger.debug("Reduced Hessian is singular, regularized by %.3g", reg)

        return linalg.cho_factor(G + reg * np.eye(G.shape[0]), lower=True)

    def particular(self, beq: np.ndarray) -> np.ndarray:
        if not self.rank:
            return np.zeros(self.problem.n)

        return self._Vr @ ((self._U.T @ beq) / self._sv)

    def solve(
        self,
        beq: Optional[np.ndarray] = None,
        warm_active: Optional[Sequence[int]] = None,
    ) -> QpSolution:
        """
        Solve the problem, with `beq` replacing the equality right-hand side
        when given.

        :param beq: new right-hand side of the equality constraints
        :param warm_active: guess of the optimal active set (indices of
            inequality rows). Invalid or incompatible indices are dropped.
        """

        pb = self.problem

        if beq is None:
            beq = pb.beq
        else:
            beq = np.asarray(beq, dtype=float).reshape(pb.p)

        z_p = self.particular(beq)

        if pb.p:
            eq_res = float(np.max(np.abs(pb.Aeq @ z_p - beq)))

            if eq_res > self.tol.primal * (1.0 + float(np.max(np.abs(beq)))):
                logger.debug(
                    "Inconsistent equality constraints (residual %.3g)", eq_res
                )
                return self._result(z_p, Status.INFEASIBLE, [], [], 0, beq)

        g = self.Z.T @ (pb.H @ z_p + pb.f)
        b = pb.Ain @ z_p - pb.bin

        if self._null_G.shape[1]:
            status = self._check_unbounded(g, b)

            if status is not None:
                return self._result(z_p, status, [], [], 0, beq)

        if not self.dof:
            ok = np.all(-b >= -self.tol.primal * (1.0 + np.abs(pb.bin)))
            status = Status.OPTIMAL if ok else Status.INFEASIBLE
            return self._result(z_p, status, [], [], 0, beq)

        y0 = -linalg.cho_solve(self._chol, g)
        active, u, y, iterations = self._warm(y0, b, warm_active)
        status, active, u, y, iterations = self._iterate(
            y, b, active, u, iterations
        )

        return self._result(z_p + self.Z @ y, status, active, u, iterations, beq)

    def _independent(self, active: List[int], i: int) -> bool:
        pii = self.P[i, i]

        if pii <= 1e-14:
            return False

        if not active:
            return True

        W = self.P[np.ix_(active, active)]
        w = self.P[active, i]

        try:
            r = np.linalg.solve(W, w)
        except np.linalg.LinAlgError:
            return False

        return pii - w @ r > 1e-10 * pii

    def _warm(self, y0: np.ndarray, b: np.ndarray, guess: Optional[Sequence[int]]):
        """
        Turn a guessed active set into a dual-feasible starting point: solve
        the problem with the guessed constraints as equalities, then drop the
        most negative multiplier until none is left.
        """

        if not guess:
            return [], np.zeros(0), y0, 0

        q = self.problem.q
        active = []

        for i in guess:
            i = int(i)

            if 0 <= i < q and i not in active and self._independent(active, i):
                active.append(i)

        iterations = 0

        while active:
            W = self.P[np.ix_(active, active)]
            u = np.linalg.solve(W, b[active] - self.N[active] @ y0)

            if np.all(u >= 0.0):
                y = y0 + self.GinvN[:, active] @ u
                return active, u, y, iterations

            del active[int(np.argmin(u))]
            iterations += 1

        return [], np.zeros(0), y0, iterations

    def _iterate(self, y, b, active: List[int], u: np.ndarray, iterations: int):
        N, P, GinvN = self.N, self.P, self.GinvN
        tol_p = self.tol.primal * (1.0 + np.abs(b))
        active = list(active)
        u = np.array(u, dtype=float)

        while True:
            slack = N @ y - b
            violated = slack < -tol_p

            if not np.any(violated):
                return Status.OPTIMAL, active, u, y, iterations

            # Most violated, lowest index on ties.
            p = int(np.argmin(np.where(violated, slack, np.inf)))
            u_p = 0.0

            while True:
                if iterations >= self.tol.max_iter:
                    return Status.MAX_ITER, active, u, y, iterations

                if active:
                    W = P[np.ix_(active, active)]

                    try:
                        r = np.linalg.solve(W, P[active, p])
                    except np.linalg.LinAlgError:
                        r = np.linalg.lstsq(W, P[active, p], rcond=None)[0]

                    step = GinvN[:, p] - GinvN[:, active] @ r
                    curvature = P[p, p] - P[p, active] @ r
                else:
                    r = np.zeros(0)
                    step = GinvN[:, p]
                    curvature = P[p, p]

                s_p = float(N[p] @ y - b[p])

                if curvature > 1e-12 * max(1.0, P[p, p]):
                    t2 = -s_p / curvature
                else:
                    t2 = np.inf

                t1, k = np.inf, -1
                pos = np.flatnonzero(r > 1e-14)

                if pos.size:
                    ratios = u[pos] / r[pos]
                    j = int(np.argmin(ratios))
                    t1, k = float(ratios[j]), int(pos[j])

                t = min(t1, t2)

                if not np.isfinite(t):
                    return Status.INFEASIBLE, active, u, y, iterations

                iterations += 1

                if np.isfinite(t2):
                    y = y + t * step

                u = u - t * r
                u_p += t

                if t2 <= t1:
                    active.append(p)
                    u = np.append(u, u_p)
                    break

                del active[k]
                u = np.delete(u, k)

    def _check_unbounded(self, g: np.ndarray, b: np.ndarray) -> Optional[Status]:
        """
        With a singular reduced Hessian the problem may have no minimum. Look
        for a direction d in null(G) along which the objective decreases and
        every inequality stays satisfied, using an LP on a unit box.
        """

        V = self._null_G
        dim = V.shape[1]
        NV = self.N @ V
        box = np.vstack([np.eye(dim), -np.eye(dim)])

        ray = solve_lp(
            QpProblem(
                H=np.zeros((dim, dim)),
                f=V.T @ g,
                Ain=np.vstack([-NV, box]),
                bin=np.concatenate([np.zeros(NV.shape[0]), np.ones(2 * dim)]),
            )
        )

        if not ray.optimal or ray.objective >= -self.tol.dual:
            return None

        feasible = solve_lp(
            QpProblem(
                H=np.zeros((self.dof, self.dof)),
                f=np.zeros(self.dof),
                Ain=-self.N,
                bin=-b,
            )
        )

        if feasible.status == Status.INFEASIBLE:
            return Status.INFEASIBLE

        logger.debug("QP unbounded along a null direction of the Hessian")
        return Status.UNBOUNDED

    def _result(self, z, status, active, u, iterations, beq) -> QpSolution:
        pb = self.problem
        lam = np.zeros(pb.q)

        if len(active):
            lam[list(active)] = np.maximum(u, 0.0)

        if pb.p:
            grad = pb.H @ z + pb.f + pb.Ain.T @ lam
            mu = np.linalg.lstsq(pb.Aeq.T, -grad, rcond=None)[0]
        else:
            mu = np.zeros(0)

        diagnostics = dict(self.diagnostics)

        if status in (Status.INFEASIBLE, Status.UNBOUNDED):
            objective = np.inf if status == Status.INFEASIBLE else -np.inf
        else:
            objective = pb.objective(z)

        return QpSolution(
            z=z,
            status=status,
            objective=objective,
            eq_multipliers=mu,
            in_multipliers=lam,
            iterations=iterations,
            active_set=tuple(int(i) for i in active),
            diagnostics=diagnostics,
        )


def solve_qp(
    problem: QpProblem,
    warm_active: Optional[Sequence[int]] = None,
    tolerances: Optional[Tolerances] = None,
) -> QpSolution:
    """
    One-shot helper: factorize `problem` and solve it.
    """

    if not isinstance(problem, QpProblem):
        raise SolverError("solve_qp() expects a QpProblem")

    return QpSolver(problem, tolerances).solve(warm_active=warm_active)
