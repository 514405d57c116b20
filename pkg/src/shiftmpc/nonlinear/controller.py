import logging
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np

from shiftmpc.admissible import AffineConstraintSet, compute_nmax
from shiftmpc.basis import BasisFamily, ParamVector, shift
from shiftmpc.conf import settings

from .plant import NlpError, NonlinearPlant
from .sqp import NlpStepResult, QuadraticCost, solve_nlp

logger = logging.getLogger("shiftmpc.nonlinear")


class NonlinearController(object):
    """
    Receding-horizon controller solving the Galerkin-encoded problem with
    SQP. The first step starts from `initial_guess` with the cold budget;
    later steps start from the shifted previous solution with the warm
    budget and the previous active set.
    """

    def __init__(
        self,
        plant: NonlinearPlant,
        family: BasisFamily,
        cost: QuadraticCost,
        cons: AffineConstraintSet,
        initial_guess: Tuple[ParamVector, ParamVector],
        nmax: Optional[int] = None,
        nmax_start: Optional[int] = None,
        cold_budget: Optional[int] = None,
        warm_budget: Optional[int] = None,
        k_trunc: Optional[int] = None,
    ):
        self.plant = plant
        self.family = family
        self.cost = cost
        self.cons = cons
        self.initial_guess = initial_guess
        self.k_trunc = k_trunc
        self.cold_budget = cold_budget or settings.SQP_COLD_MAX_ITER
        self.warm_budget = warm_budget or settings.SQP_WARM_MAX_ITER
        self.nmax_result = None

        if nmax is None:
            self.nmax_result = compute_nmax(family, cons, start=nmax_start)
            nmax = self.nmax_result.nmax

        self.nmax = nmax
        self.previous: Optional[NlpStepResult] = None

    @property
    def n(self) -> int:
        return self.plant.n

    @property
    def m(self) -> int:
        return self.plant.m

    def reset(self) -> None:
        self.previous = None

    def stage_cost(self, x: np.ndarray, u: np.ndarray) -> float:
        return self.cost.stage(x, u)

    def model_step(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.plant.f(0, x, u)

    def shifted_active_set(self):
        if self.previous is None:
            return ()

        n_c = self.cons.n_c
        return tuple(r - n_c for r in self.previous.active_set if r >= n_c)

    def step(self, x0: np.ndarray) -> NlpStepResult:
        """
        Solve from x0. Running out of budget is not an error: the best
        iterate is returned, flagged as not converged.

        :raise NlpSubproblemInfeasible: a linearized problem had no solution
            and the elastic step made no progress
        """

        warm = self.previous is not None

        if warm:
            guess = (
                shift(self.previous.eta_x, self.family),
                shift(self.previous.eta_u, self.family),
            )
            budget = self.warm_budget
        else:
            guess = self.initial_guess
            budget = self.cold_budget

        try:
            result = solve_nlp(
                self.plant,
                self.family,
                self.cost,
                self.cons,
                self.nmax,
                x0,
                guess,
                max_iter=budget,
                k_trunc=self.k_trunc,
                warm_active=self.shifted_active_set(),
            )
        except NlpError:
            self.previous = None
            raise

        if not result.converged:
            logger.debug(
                "SQP stopped after %d iterations without converging (violation %.3g)",
                result.iterations,
                result.feasibility,
            )

        result = replace(result, warm=warm)
        self.previous = result
        return result
