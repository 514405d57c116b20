import logging
from dataclasses import dataclass, field
from time import perf_counter
from typing import Any, Dict, Optional, Text, Tuple

import numpy as np

from shiftmpc.admissible import compute_nmax
from shiftmpc.basis import BasisFamily, ParamVector, evaluate, shift, trajectory
from shiftmpc.solvers import QpSolver, Status, Tolerances

from .assembly import assemble, bind_initial_state, check_regularity, split
from .problem import LtiProblem, MpcInfeasible, MpcSolverFailure

logger = logging.getLogger("shiftmpc.lti")


@dataclass(frozen=True, eq=False)
class MpcStepResult(object):
    """
    Solution of one receding-horizon step. `cost` is J(x0), the optimal
    infinite-horizon cost, and `u0` the input to apply now.
    """

    family: BasisFamily
    eta_x: ParamVector
    eta_u: ParamVector
    u0: np.ndarray
    cost: float
    status: Status
    iterations: int
    active_set: Tuple[int, ...] = ()
    warm: bool = False
    wall_time: float = 0.0
    stats: Dict[Text, Any] = field(default_factory=dict)

    def prediction(self, count: int):
        """
        Predicted (states, inputs) for k = 0 .. count - 1.
        """

        return (
            trajectory(self.eta_x, self.family, count),
            trajectory(self.eta_u, self.family, count),
        )

    def shifted(self) -> Tuple[ParamVector, ParamVector]:
        """
        Parameters of the same trajectories one step later, which are a
        feasible (if sub-optimal) candidate at the next step.
        """

        return shift(self.eta_x, self.family), shift(self.eta_u, self.family)


class LtiController(object):
    """
    Receding-horizon controller for an `LtiProblem`. The QP is assembled
    and factorized once, each `step()` only binds x0 and warm-starts the
    solver with the shifted active set of the previous step.
    """

    def __init__(
        self,
        problem: LtiProblem,
        family: BasisFamily,
        nmax: Optional[int] = None,
        nmax_start: Optional[int] = None,
        couple_dynamics: bool = False,
        warm_start: bool = True,
        tolerances: Optional[Tolerances] = None,
    ):
        self.problem = problem
        self.family = family
        self.warm_start = warm_start
        self.nmax_result = None

        self.regular, self.regularity = check_regularity(problem, family)

        if nmax is None:
            self.nmax_result = compute_nmax(
                family,
                problem.cons,
                start=nmax_start,
                dynamics=(problem.A, problem.B) if couple_dynamics else None,
            )
            nmax = self.nmax_result.nmax

        self.nmax = nmax
        self.qp = assemble(problem, family, nmax)
        self.solver = QpSolver(self.qp, tolerances)
        self.previous: Optional[MpcStepResult] = None

        logger.debug(
            "LTI controller ready: %d variables, %d equalities, %d inequalities",
            self.qp.n,
            self.qp.p,
            self.qp.q,
        )

    @property
    def n(self) -> int:
        return self.problem.n

    @property
    def m(self) -> int:
        return self.problem.m

    def reset(self) -> None:
        self.previous = None

    def stage_cost(self, x: np.ndarray, u: np.ndarray) -> float:
        return self.problem.stage_cost(x, u)

    def model_step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.problem.next_state(x, u)

    def shifted_active_set(self) -> Tuple[int, ...]:
        """
        Active rows of the previous step, moved one step earlier: row
        k n_c + i becomes (k - 1) n_c + i. Rows at k = 0 disappear.
        """

        if self.previous is None:
            return ()

        n_c = self.problem.cons.n_c
        return tuple(r - n_c for r in self.previous.active_set if r >= n_c)

    def step(self, x0: np.ndarray) -> MpcStepResult:
        """
        Solve the problem from x0.

        :raise MpcInfeasible: x0 has no admissible trajectory
        :raise MpcSolverFailure: the solver ran out of iterations
        """

        x0 = np.asarray(x0, dtype=float).reshape(self.n)

        if not np.all(np.isfinite(x0)):
            raise MpcSolverFailure(f"Non-finite initial state {x0.tolist()}")

        warm = self.warm_start and self.previous is not None
        guess = self.shifted_active_set() if warm else None

        start = perf_counter()
        sol = self.solver.solve(bind_initial_state(self.qp, x0), warm_active=guess)
        elapsed = perf_counter() - start

        if sol.status == Status.INFEASIBLE:
            self.previous = None
            raise MpcInfeasible(x0)

        if sol.status != Status.OPTIMAL:
            self.previous = None
            raise MpcSolverFailure(
                f"QP ended with status {sol.status.value} after "
                f"{sol.iterations} iterations"
            )

        eta_x, eta_u = split(self.problem, self.family, sol.z)

        result = MpcStepResult(
            family=self.family,
            eta_x=eta_x,
            eta_u=eta_u,
            u0=evaluate(eta_u, self.family, 0),
            cost=sol.objective,
            status=sol.status,
            iterations=sol.iterations,
            active_set=sol.active_set,
            warm=warm,
            wall_time=elapsed,
            stats=dict(sol.diagnostics),
        )

        self.previous = result
        return result
