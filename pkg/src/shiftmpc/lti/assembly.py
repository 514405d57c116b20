"""
Translation of the parametrized infinite-horizon problem into a QP over
z = (eta_x, eta_u):

- cost: eta_x^T (Q x J) eta_x + eta_u^T (R x J) eta_u, J being the Gram
  matrix of the family. This is the exact infinite sum of running costs.
- equalities: the dynamics hold for all k, and the trajectory starts at x0.
- inequalities: the constraints hold for k = 0 .. N_max, which is enough
  for all k.

Only the x0 part of the equality right-hand side changes between steps.
"""
import logging
from typing import Any, Dict, Text, Tuple

import numpy as np
from scipy import linalg

from shiftmpc.basis import (
    BasisFamily,
    ParamVector,
    dynamics_matrix,
    gram,
    initial_value_matrix,
    trajectory,
)
from shiftmpc.conf import settings
from shiftmpc.core import HealthCheckFail
from shiftmpc.solvers import QpProblem

from .problem import LtiProblem, MpcError

logger = logging.getLogger("shiftmpc.lti")


def cost_hessian(problem: LtiProblem, family: BasisFamily) -> np.ndarray:
    """
    H such that 1/2 z^T H z is the infinite-horizon cost of z.
    """

    J = gram(family)
    return 2.0 * linalg.block_diag(np.kron(problem.Q, J), np.kron(problem.R, J))


def equality_matrix(problem: LtiProblem, family: BasisFamily) -> np.ndarray:
    n, m, s = problem.n, problem.m, family.s

    return np.vstack(
        [
            dynamics_matrix(family, problem.A, problem.B),
            np.hstack([initial_value_matrix(family, n), np.zeros((n, m * s))]),
        ]
    )


def assemble(problem: LtiProblem, family: BasisFamily, nmax: int) -> QpProblem:
    """
    QP template for the given horizon. The initial condition rows are the
    last n rows of the equalities, bind x0 with `bind_initial_state()`.
    """

    if nmax < 0:
        raise MpcError(f"nmax must be non-negative, got {nmax}")

    cons = problem.cons
    Aeq = equality_matrix(problem, family)

    return QpProblem(
        H=cost_hessian(problem, family),
        f=np.zeros(Aeq.shape[1]),
        Aeq=Aeq,
        beq=np.zeros(Aeq.shape[0]),
        Ain=cons.stacked_rows(family, 0, nmax + 1),
        bin=np.tile(cons.b, nmax + 1),
    )


def bind_initial_state(qp: QpProblem, x0: np.ndarray) -> np.ndarray:
    """
    Equality right-hand side of `qp` for the initial state x0.
    """

    x0 = np.asarray(x0, dtype=float).reshape(-1)
    beq = np.zeros(qp.p)
    beq[qp.p - x0.shape[0] :] = x0
    return beq


def check_regularity(
    problem: LtiProblem, family: BasisFamily
) -> Tuple[bool, Dict[Text, Any]]:
    """
    The equalities are regular when they can be satisfied for any x0, that
    is when their matrix has full row rank n s + n.
    """

    E = equality_matrix(problem, family)
    sv = linalg.svdvals(E)
    cutoff = settings.REGULARITY_RANK_TOL * max(1.0, float(sv[0]))
    rank = int(np.sum(sv > cutoff))
    expected = E.shape[0]
    regular = rank == expected

    diagnostics = {
        "rank": rank,
        "expected": expected,
        "sigma_min": float(sv[min(expected, sv.shape[0]) - 1]),
        "failures": [],
    }

    if not regular:
        fail = HealthCheckFail(
            "40004",
            f"Dynamics equalities have rank {rank} instead of {expected}: some "
            f"initial states cannot be reached by any parametrized trajectory",
        )
        logger.warning("HEALTH CHECK FAIL #%s: %s", fail.code, fail.reason)
        diagnostics["failures"].append({"code": fail.code, "reason": fail.reason})

    return regular, diagnostics


def split(problem: LtiProblem, family: BasisFamily, z: np.ndarray):
    """
    Cut a decision vector into (eta_x, eta_u).
    """

    k = problem.n * family.s
    return (
        ParamVector(z[:k], problem.n),
        ParamVector(z[k:], problem.m),
    )


def dynamics_residual(
    problem: LtiProblem,
    family: BasisFamily,
    eta_x: ParamVector,
    eta_u: ParamVector,
    count: int = 101,
) -> np.ndarray:
    """
    |x(k + 1) - A x(k) - B u(k)|_inf of the parametrized trajectories for
    k = 0 .. count - 1.
    """

    X = trajectory(eta_x, family, count + 1)
    U = trajectory(eta_u, family, count)
    E = X[1:] - X[:-1] @ problem.A.T - U @ problem.B.T

    return np.max(np.abs(E), axis=1)
