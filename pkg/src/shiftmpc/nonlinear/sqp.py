"""
SQP solver for the parametrized problem with nonlinear dynamics.

The running cost is quadratic, so its infinite sum is exactly
1/2 z^T H z with H = 2 blockdiag(Q x J, R x J) and Gauss-Newton uses the
true Hessian of the cost. Each iteration solves a QP in the step d with

- the Galerkin residual linearized around the current iterate,
- the initial condition, which is linear,
- the inequality rows for k = 0 .. N_max, which are linear in z already.

Steps are globalized with a backtracking line search on the l1 merit
function cost + rho (|equality residuals|_1 + |inequality violations|_1).

Far from a solution the linearized constraints can be inconsistent. The
step then comes from the elastic subproblem, where every row gets l1
slacks priced like the merit penalty, and the iterate stays in the loop as
long as that step reduces the linearized infeasibility.
"""
import logging
from dataclasses import dataclass, field
from time import perf_counter
from typing import List, Optional, Sequence, Text, Tuple

import numpy as np
from scipy import linalg

from shiftmpc.admissible import AffineConstraintSet
from shiftmpc.basis import (
    BasisFamily,
    ParamVector,
    evaluate,
    gram,
    initial_value_matrix,
)
from shiftmpc.conf import settings
from shiftmpc.solvers import QpProblem, QpSolution, QpSolver, Status

from .galerkin import galerkin_residual, residual_jacobian, truncation
from .plant import NlpError, NonlinearPlant

logger = logging.getLogger("shiftmpc.nonlinear")


class NlpSubproblemInfeasible(NlpError):
    """
    The linearized problem has no solution and no step reduces its
    infeasibility. The iterate at which this happened is attached.
    """

    def __init__(self, message: Text, eta_x: ParamVector, eta_u: ParamVector):
        super().__init__(message)
        self.eta_x = eta_x
        self.eta_u = eta_u


@dataclass(frozen=True, eq=False)
class QuadraticCost(object):
    """
    Running cost x^T Q x + u^T R u.
    """

    Q: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "Q", np.atleast_2d(np.asarray(self.Q, dtype=float)))
        object.__setattr__(self, "R", np.atleast_2d(np.asarray(self.R, dtype=float)))

        if np.min(np.linalg.eigvalsh(self.Q)) <= 0.0:
            raise NlpError("Q must be positive definite")

        if np.min(np.linalg.eigvalsh(self.R)) < -1e-12:
            raise NlpError("R must be positive semi-definite")

    def stage(self, x: np.ndarray, u: np.ndarray) -> float:
        return float(x @ self.Q @ x + u @ self.R @ u)

    def hessian(self, family: BasisFamily) -> np.ndarray:
        J = gram(family)
        return 2.0 * linalg.block_diag(np.kron(self.Q, J), np.kron(self.R, J))


@dataclass(frozen=True, eq=False)
class NlpStepResult(object):
    eta_x: ParamVector
    eta_u: ParamVector
    u0: np.ndarray
    cost: float
    merit: float
    iterations: int
    kkt_residual: float
    feasibility: float
    converged: bool
    active_set: Tuple[int, ...] = ()
    merit_history: List[Tuple[float, float]] = field(default_factory=list)
    wall_time: float = 0.0
    warm: bool = False
    elastic_steps: int = 0

    @property
    def status(self) -> Text:
        return "converged" if self.converged else "budget"


class _Nlp(object):
    """
    Everything that stays constant across SQP iterations of one solve.
    """

    def __init__(self, plant, family, cost, cons, nmax, x0, k_trunc):
        self.plant = plant
        self.family = family
        self.x0 = x0
        self.k_trunc = truncation(family, k_trunc)
        self.n, self.m, self.s = plant.n, plant.m, family.s
        self.H = cost.hessian(family)
        self.Phi = np.hstack(
            [
                initial_value_matrix(family, self.n),
                np.zeros((self.n, self.m * self.s)),
            ]
        )
        self.Ain = cons.stacked_rows(family, 0, nmax + 1)
        self.bin = np.tile(cons.b, nmax + 1)

    def split(self, z):
        k = self.n * self.s
        return ParamVector(z[:k], self.n), ParamVector(z[k:], self.m)

    def cost(self, z):
        return float(0.5 * z @ self.H @ z)

    def residual(self, z):
        eta_x, eta_u = self.split(z)
        return galerkin_residual(eta_x, eta_u, self.plant, self.family, self.k_trunc)

    def jacobian(self, z):
        eta_x, eta_u = self.split(z)
        Jx, Ju = residual_jacobian(
            eta_x, eta_u, self.plant, self.family, self.k_trunc
        )
        return np.hstack([Jx, Ju])

    def infeasibility(self, z, r=None):
        """
        l1 norm of equality residuals and inequality violations.
        """

        if r is None:
            r = self.residual(z)

        return float(
            np.sum(np.abs(r))
            + np.sum(np.abs(self.Phi @ z - self.x0))
            + np.sum(np.maximum(self.Ain @ z - self.bin, 0.0))
        )

    def max_violation(self, z, r=None):
        if r is None:
            r = self.residual(z)

        parts = [np.abs(r), np.abs(self.Phi @ z - self.x0)]

        if self.bin.size:
            parts.append(np.maximum(self.Ain @ z - self.bin, 0.0))

        return float(max(np.max(p) for p in parts if p.size))


def _elastic_penalty(H: np.ndarray) -> float:
    return settings.SQP_ELASTIC_PENALTY * max(1.0, float(np.max(np.abs(H))))


def _elastic_solve(qp: QpProblem, active: Sequence[int]) -> QpSolution:
    """
    Relaxed subproblem in (d, v+, v-, w): equality rows become
    Aeq d - v+ + v- = beq, inequality rows Ain d - w <= bin, and the slacks
    are priced in l1. It is feasible for any right-hand side. The original
    inequality rows keep their indices, so `active` carries over.
    """

    N, p, q = qp.n, qp.p, qp.q
    e = 2 * p + q
    scale = max(1.0, float(np.max(np.abs(qp.H))))
    eye_p = np.eye(p)

    elastic = QpProblem(
        H=linalg.block_diag(
            qp.H, settings.SQP_ELASTIC_CURVATURE * scale * np.eye(e)
        ),
        f=np.concatenate([qp.f, np.full(e, _elastic_penalty(qp.H))]),
        Aeq=np.hstack([qp.Aeq, -eye_p, eye_p, np.zeros((p, q))]),
        beq=qp.beq,
        Ain=np.vstack(
            [
                np.hstack([qp.Ain, np.zeros((q, 2 * p)), -np.eye(q)]),
                np.hstack([np.zeros((e, N)), -np.eye(e)]),
            ]
        ),
        bin=np.concatenate([qp.bin, np.zeros(e)]),
    )

    return QpSolver(elastic).solve(warm_active=[i for i in active if i < q])


def _linear_infeasibility(qp: QpProblem, d: np.ndarray) -> float:
    """
    l1 infeasibility of the step d in the linearized constraints.
    """

    return float(
        np.sum(np.abs(qp.Aeq @ d - qp.beq))
        + np.sum(np.maximum(qp.Ain @ d - qp.bin, 0.0))
    )


def solve_nlp(
    plant: NonlinearPlant,
    family: BasisFamily,
    cost: QuadraticCost,
    cons: AffineConstraintSet,
    nmax: int,
    x0: np.ndarray,
    initial_guess: Tuple[ParamVector, ParamVector],
    max_iter: Optional[int] = None,
    k_trunc: Optional[int] = None,
    warm_active: Optional[Sequence[int]] = None,
) -> NlpStepResult:
    """
    Minimize the infinite-horizon cost from x0 subject to the Galerkin
    dynamics and the constraints at k = 0 .. nmax.

    :param initial_guess: (eta_x, eta_u) to start from
    :param max_iter: budget of SQP iterations (QP subproblems)
    :param warm_active: active inequality rows to warm-start the first QP
    :raise NlpSubproblemInfeasible: a linearized subproblem is infeasible
        and not even the elastic step reduces the infeasibility
    """

    start = perf_counter()
    x0 = np.asarray(x0, dtype=float).reshape(plant.n)
    max_iter = settings.SQP_COLD_MAX_ITER if max_iter is None else max_iter
    nlp = _Nlp(plant, family, cost, cons, nmax, x0, k_trunc)

    eta_x, eta_u = initial_guess
    z = np.concatenate([eta_x.data, eta_u.data])

    if z.shape[0] != (nlp.n + nlp.m) * nlp.s:
        raise NlpError(f"Initial guess has {z.shape[0]} parameters")

    rho = 0.0
    active = tuple(warm_active or ())
    history = []
    r = nlp.residual(z)
    kkt = np.inf
    converged = False
    iterations = 0
    elastic_steps = 0
    Jr = nlp.jacobian(z)
    q = nlp.bin.shape[0]

    while iterations < max_iter:
        qp = QpProblem(
            H=nlp.H,
            f=nlp.H @ z,
            Aeq=np.vstack([Jr, nlp.Phi]),
            beq=np.concatenate([-r, x0 - nlp.Phi @ z]),
            Ain=nlp.Ain,
            bin=nlp.bin - nlp.Ain @ z,
        )
        sol = QpSolver(qp).solve(warm_active=active)
        iterations += 1
        infeasible = nlp.infeasibility(z, r)

        if sol.status == Status.INFEASIBLE:
            sol = _elastic_solve(qp, active)

            if sol.status != Status.OPTIMAL:
                logger.debug("Elastic subproblem ended with %s", sol.status.value)
                break

            d = sol.z[: z.shape[0]]
            reachable = _linear_infeasibility(qp, d)

            if reachable >= (1.0 - settings.SQP_ELASTIC_MIN_DECREASE) * infeasible:
                raise NlpSubproblemInfeasible(
                    f"Linearized problem infeasible at SQP iteration {iterations} "
                    f"and no step reduces the infeasibility ({infeasible:.3g})",
                    *nlp.split(z),
                )

            elastic_steps += 1
            rho = max(rho, _elastic_penalty(nlp.H))
            logger.debug(
                "SQP %d: elastic step, infeasibility %.3g -> %.3g",
                iterations,
                infeasible,
                reachable,
            )
        elif sol.status != Status.OPTIMAL:
            logger.debug("QP subproblem ended with %s", sol.status.value)
            break
        else:
            d = sol.z
            reachable = 0.0
            multipliers = np.concatenate([sol.eq_multipliers, sol.in_multipliers])
            bound = float(np.max(np.abs(multipliers))) if multipliers.size else 0.0
            rho = max(rho, settings.SQP_PENALTY_FACTOR * bound)

        merit = nlp.cost(z) + rho * infeasible
        slope = float((nlp.H @ z) @ d) - rho * (infeasible - reachable)

        alpha = 1.0
        accepted = False

        for _ in range(settings.SQP_MAX_BACKTRACKS + 1):
            candidate = z + alpha * d
            r_new = nlp.residual(candidate)
            merit_new = nlp.cost(candidate) + rho * nlp.infeasibility(
                candidate, r_new
            )

            if merit_new <= merit + settings.SQP_ARMIJO * alpha * min(slope, 0.0):
                accepted = True
                break

            alpha *= settings.SQP_BACKTRACK

        if not accepted:
            logger.debug("Line search failed at SQP iteration %d", iterations)
            break

        history.append((merit, merit_new))
        z, r = candidate, r_new
        active = tuple(i for i in sol.active_set if i < q)

        # Stationarity of the Lagrangian at the new point, with the QP
        # multipliers as estimates.
        Jr = nlp.jacobian(z)
        grad = (
            nlp.H @ z
            + Jr.T @ sol.eq_multipliers[: r.shape[0]]
            + nlp.Phi.T @ sol.eq_multipliers[r.shape[0] :]
            + nlp.Ain.T @ sol.in_multipliers[:q]
        )
        kkt = float(np.max(np.abs(grad)))
        violation = nlp.max_violation(z, r)
        step = alpha * float(np.max(np.abs(d)))
        scale = 1.0 + float(np.max(np.abs(nlp.H @ z)))

        logger.debug(
            "SQP %d: cost %.6g, violation %.3g, kkt %.3g, step %.3g (alpha %.3g)",
            iterations,
            nlp.cost(z),
            violation,
            kkt,
            step,
            alpha,
        )

        if violation <= settings.SQP_FEASIBILITY_TOL and (
            kkt <= settings.SQP_TOL * scale
            or step <= settings.SQP_TOL * (1.0 + float(np.max(np.abs(z))))
        ):
            converged = True
            break

    eta_x, eta_u = nlp.split(z)

    return NlpStepResult(
        eta_x=eta_x,
        eta_u=eta_u,
        u0=evaluate(eta_u, family, 0),
        cost=nlp.cost(z),
        merit=nlp.cost(z) + rho * nlp.infeasibility(z, r),
        iterations=iterations,
        kkt_residual=kkt,
        feasibility=nlp.max_violation(z, r),
        converged=converged,
        active_set=tuple(active),
        merit_history=history,
        wall_time=perf_counter() - start,
        elastic_steps=elastic_steps,
    )
