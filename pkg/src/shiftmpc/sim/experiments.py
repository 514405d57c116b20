"""
Batch studies: cost as a function of the Laguerre decay rate and of the
number of basis functions for the quadruple integrator, and robustness of
the pendulum swing-up to state disturbances.

Each grid point (or run) is an independent task. Tasks draw their random
numbers from streams keyed by their indices only, so results are the same
whatever the number of workers.
"""
import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Text, Tuple

import numpy as np

from shiftmpc.admissible import AffineConstraintSet, NmaxCapReached, compute_nmax
from shiftmpc.basis import BasisFamily, ParamVector, family_from_config
from shiftmpc.conf import settings
from shiftmpc.lti import LtiController, LtiProblem
from shiftmpc.nonlinear import (
    PENDULUM_Q,
    PENDULUM_R,
    HANGING,
    LinearPlant,
    NonlinearController,
    PendulumParams,
    PendulumPlant,
    QuadraticCost,
    guess_parameters,
    pendulum_constraints,
    pendulum_family,
    swing_up_guess,
)

from .closed_loop import DisturbanceSpec, make_rng, run_closed_loop
from .log import PlantDiverged
from .monitors import swing_up_success

logger = logging.getLogger("shiftmpc.sim")

EXPERIMENT_IC = 0
EXPERIMENT_ROBUSTNESS = 1

Row = Dict[Text, Any]


def parallel_map(fn: Callable, tasks: Sequence, workers: Optional[int] = None) -> List:
    """
    Map `fn` over `tasks` in worker processes, keeping the order. With one
    worker (or one task) everything runs in this process.
    """

    workers = workers or settings.WORKERS

    if workers == 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def random_initial_conditions(
    count: int,
    seed: int,
    n: int = 4,
    low: float = -0.5,
    high: float = 0.5,
) -> np.ndarray:
    """
    Initial states uniform in [low, high]^n, IC i using stream
    (EXPERIMENT_IC, i, 0).
    """

    return np.array(
        [
            make_rng(seed, EXPERIMENT_IC, i, 0).uniform(low, high, n)
            for i in range(count)
        ]
    )


def _lti_point(args: Tuple[LtiProblem, Dict, np.ndarray, int, Optional[int]]) -> Row:
    problem, family_config, ics, steps, nmax_start = args
    family = family_from_config(family_config)
    row = dict(family_config)

    try:
        controller = LtiController(problem, family, nmax_start=nmax_start)
    except NmaxCapReached as e:
        logger.warning("No admissible horizon for %s: %s", family_config, e)
        row.update(
            nmax=None,
            mean_cost=np.nan,
            feasible=0,
            infeasible=len(ics),
            mean_max_wall_time=np.nan,
        )
        return row

    plant = LinearPlant(problem.A, problem.B)
    costs, walls = [], []
    infeasible = 0

    for x0 in ics:
        log = run_closed_loop(plant, controller, x0, steps, ts=problem.ts)

        if log.feasible and log.final_state is not None:
            costs.append(log.closed_loop_cost)
            walls.append(max(r.wall_time for r in log.records))
        else:
            infeasible += 1

    row.update(
        nmax=controller.nmax,
        mean_cost=float(np.mean(costs)) if costs else np.nan,
        feasible=len(costs),
        infeasible=infeasible,
        mean_max_wall_time=float(np.mean(walls)) if walls else np.nan,
    )
    logger.info(
        "%s: nmax %s, mean cost %.6g, %d infeasible",
        family_config,
        row["nmax"],
        row["mean_cost"],
        infeasible,
    )

    return row


def sweep_nu(
    problem: LtiProblem,
    nu_grid: Iterable[float],
    ics: np.ndarray,
    s: int = 8,
    steps: int = 2000,
    workers: Optional[int] = None,
    nmax_start: Optional[int] = None,
) -> List[Row]:
    """
    Laguerre families with varying decay rate: mean closed-loop cost over
    the feasible initial conditions and count of infeasible ones, N_max
    being recomputed for every family.
    """

    tasks = [
        (
            problem,
            {"kind": "laguerre", "s": s, "nu": float(nu), "ts": problem.ts},
            ics,
            steps,
            nmax_start,
        )
        for nu in nu_grid
    ]

    return parallel_map(_lti_point, tasks, workers)


def sweep_s(
    problem: LtiProblem,
    s_grid: Iterable[int],
    ics: np.ndarray,
    nu: float = 1.0,
    steps: int = 2000,
    workers: Optional[int] = None,
    nmax_start: Optional[int] = None,
) -> List[Row]:
    """
    Laguerre families with a fixed decay rate and varying size.
    """

    tasks = [
        (
            problem,
            {"kind": "laguerre", "s": int(s), "nu": float(nu), "ts": problem.ts},
            ics,
            steps,
            nmax_start,
        )
        for s in s_grid
    ]

    return parallel_map(_lti_point, tasks, workers)


@dataclass(frozen=True, eq=False)
class PendulumSetup(object):
    """
    Everything needed to build a swing-up controller.
    """

    plant: PendulumPlant
    family: BasisFamily
    cost: QuadraticCost
    cons: AffineConstraintSet
    nmax: int
    guess: Tuple[ParamVector, ParamVector]

    def controller(self) -> NonlinearController:
        return NonlinearController(
            self.plant,
            self.family,
            self.cost,
            self.cons,
            self.guess,
            nmax=self.nmax,
        )


def build_pendulum_setup(
    ts: float = 0.02,
    params: PendulumParams = PendulumParams(),
    family: Optional[BasisFamily] = None,
    nmax: Optional[int] = None,
    nmax_start: Optional[int] = 0,
    guess_steps: int = 150,
    guess: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> PendulumSetup:
    """
    Swing-up problem with the default family, cost and constraints.

    :param guess: sampled (X, U) initial guess, generated when not given
    """

    plant = PendulumPlant(params, ts)
    family = family or pendulum_family(ts)
    cons = pendulum_constraints()

    if nmax is None:
        nmax = compute_nmax(family, cons, start=nmax_start).nmax

    if guess is None:
        X, U = swing_up_guess(plant, guess_steps)
    else:
        X, U = guess

        if X is None:
            X = _rollout(plant, U)

    return PendulumSetup(
        plant=plant,
        family=family,
        cost=QuadraticCost(PENDULUM_Q, PENDULUM_R),
        cons=cons,
        nmax=nmax,
        guess=guess_parameters(X, U, family),
    )


def _rollout(plant: PendulumPlant, U: np.ndarray) -> np.ndarray:
    X = np.empty((U.shape[0] + 1, plant.n))
    X[0] = HANGING

    for k in range(U.shape[0]):
        X[k + 1] = plant.f(k, X[k], U[k])

    return X


def _robustness_run(args) -> Row:
    setup, amplitude, index, run, seed, steps = args
    disturbance = DisturbanceSpec(amplitude=amplitude, seed=seed)
    controller = setup.controller()

    try:
        log = run_closed_loop(
            setup.plant,
            controller,
            HANGING,
            steps,
            disturbance=disturbance,
            disturbance_key=(EXPERIMENT_ROBUSTNESS, index, run, 1),
            constraints=setup.cons,
            ts=setup.plant.ts,
        )
    except PlantDiverged as e:
        log = e.log

    return {
        "amplitude": amplitude,
        "run": run,
        "cost": log.closed_loop_cost,
        "feasible": log.feasible,
        "success": swing_up_success(log, setup.plant.ts),
        "violation": log.constraint_violation,
        "max_iterations": max((r.iterations for r in log.records), default=0),
    }


def robustness_sweep(
    setup: PendulumSetup,
    amplitudes: Iterable[float],
    runs: Optional[int] = None,
    seed: int = 0,
    steps: int = 200,
    workers: Optional[int] = None,
) -> List[Row]:
    """
    Closed-loop swing-ups from the hanging position with random state
    disturbances of growing amplitude. One row per amplitude with the mean
    cost, the success rate and the worst rail violation.
    """

    runs = settings.ROBUSTNESS_RUNS if runs is None else runs
    amplitudes = [float(a) for a in amplitudes]
    runs_per_amp = 1 if not runs else runs

    tasks = [
        (setup, a, i, r, seed, steps)
        for i, a in enumerate(amplitudes)
        for r in range(1 if a == 0 else runs_per_amp)
    ]
    results = parallel_map(_robustness_run, tasks, workers)

    rows = []

    for a in amplitudes:
        mine = [r for r in results if r["amplitude"] == a]
        costs = [r["cost"] for r in mine if r["feasible"]]

        rows.append(
            {
                "amplitude": a,
                "runs": len(mine),
                "mean_cost": float(np.mean(costs)) if costs else np.nan,
                "success_rate": float(np.mean([r["success"] for r in mine])),
                "feasible": sum(1 for r in mine if r["feasible"]),
                "max_violation": max(r["violation"] for r in mine),
            }
        )

    return rows


def write_table_csv(rows: Sequence[Row], path: Text) -> None:
    """
    One line per row, columns in the order of the first row.
    """

    if not rows:
        raise ValueError("Nothing to write")

    columns = list(rows[0].keys())

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=columns, extrasaction="ignore")
        writer.writeheader()

        for row in rows:
            writer.writerow({k: _cell(row.get(k)) for k in columns})


def _cell(value):
    if isinstance(value, (float, np.floating)):
        return repr(float(value))

    if isinstance(value, (bool, np.bool_)):
        return int(value)

    return value
