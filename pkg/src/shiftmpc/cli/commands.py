"""
Implementation of the sub-commands. Each one takes a validated config and
the run directory, writes its artifacts there and returns what it printed.
"""
import logging
import os
from typing import Any, Dict, Optional, Text

import ujson

from shiftmpc.admissible import NmaxCapReached, compute_nmax
from shiftmpc.basis import inspect_family
from shiftmpc.lti import LtiController
from shiftmpc.nonlinear import LinearPlant
from shiftmpc.sim import (
    DisturbanceSpec,
    PlantDiverged,
    lyapunov_violations,
    random_initial_conditions,
    robustness_sweep,
    run_closed_loop,
    swing_up_success,
    sweep_nu,
    sweep_s,
    write_table_csv,
)
from shiftmpc.utils import to_jsonable

from .config import ConfigError, ExperimentConfig

logger = logging.getLogger("shiftmpc.cli")


def _dump(data: Any, path: Text) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(ujson.dumps(to_jsonable(data), indent=2))


def cmd_inspect(config: ExperimentConfig, out_dir: Text) -> Dict[Text, Any]:
    """
    Size, spectral radius, conditioning, decay and assumption verdicts of
    the configured family.
    """

    report = inspect_family(config.basis_family())
    _dump(report, os.path.join(out_dir, "inspect.json"))

    return report


def cmd_nmax(config: ExperimentConfig, out_dir: Text) -> Dict[Text, Any]:
    """
    Admissible horizon of the configured family and constraints. The
    certificate is written even when the cap is reached, before the error
    propagates.
    """

    family = config.basis_family()
    cons = config.constraint_set()
    dynamics = None

    if config.nmax_couple_dynamics:
        if config.is_pendulum:
            raise ConfigError(
                "Dynamics coupling needs a linear plant", "nmax_couple_dynamics"
            )

        dynamics = config.plant_matrices()

    path = os.path.join(out_dir, "nmax.json")

    try:
        result = compute_nmax(
            family, cons, start=config.nmax_start, dynamics=dynamics
        )
    except NmaxCapReached as e:
        e.result.write_certificate(path)
        raise

    result.write_certificate(path)

    return {"nmax": result.nmax, "iterations": result.iterations, "certificate": path}


def cmd_run(
    config: ExperimentConfig, out_dir: Text, seed: Optional[int] = None
) -> Dict[Text, Any]:
    """
    One closed-loop run from `x0`, logged to `log.csv` and `summary.json`.
    An infeasible start is data, not a failure.
    """

    seed = config.seed if seed is None else seed
    x0 = config.initial_state()
    disturbance = None

    if config.disturbance > 0:
        disturbance = DisturbanceSpec(amplitude=config.disturbance, seed=seed)

    if config.is_pendulum:
        setup = config.pendulum_setup()
        plant, controller, cons = setup.plant, setup.controller(), setup.cons
        nmax = setup.nmax
    else:
        problem = config.lti_problem()
        controller = LtiController(
            problem,
            config.basis_family(),
            nmax=config.nmax,
            nmax_start=config.nmax_start,
            couple_dynamics=config.nmax_couple_dynamics,
        )
        plant, cons = LinearPlant(problem.A, problem.B), problem.cons
        nmax = controller.nmax

        if not controller.regular:
            logger.warning("Equality constraints are not regular for this family")

    try:
        log = run_closed_loop(
            plant,
            controller,
            x0,
            config.steps,
            disturbance=disturbance,
            constraints=cons,
            ts=config.plant.ts,
        )
    except PlantDiverged as e:
        log = e.log

    log.metadata.update(name=config.name, nmax=nmax, seed=seed)

    if config.is_pendulum:
        log.metadata["swing_up_success"] = swing_up_success(log)
    elif disturbance is None:
        log.metadata["lyapunov_violations"] = lyapunov_violations(log)

    log.write_csv(os.path.join(out_dir, "log.csv"))
    log.write_summary(os.path.join(out_dir, "summary.json"))

    return log.summary()


def cmd_sweep(
    config: ExperimentConfig,
    out_dir: Text,
    seed: Optional[int] = None,
    workers: Optional[int] = None,
) -> Dict[Text, Any]:
    """
    Run the configured sweep and write its table to `sweep.csv`.
    """

    sweep = config.sweep

    if sweep is None:
        raise ConfigError("Field required", "sweep")

    seed = config.seed if seed is None else seed

    if sweep.kind == "robustness":
        if not config.is_pendulum:
            raise ConfigError("Robustness sweeps need the pendulum", "sweep.kind")

        rows = robustness_sweep(
            config.pendulum_setup(),
            sweep.grid,
            runs=sweep.runs,
            seed=seed,
            steps=config.steps,
            workers=workers,
        )
    else:
        if config.is_pendulum:
            raise ConfigError(f"{sweep.kind} sweeps need a linear plant", "sweep.kind")

        problem = config.lti_problem()
        ics = random_initial_conditions(sweep.ics, seed, problem.n)

        if sweep.kind == "nu":
            rows = sweep_nu(
                problem,
                sweep.grid,
                ics,
                s=sweep.s,
                steps=config.steps,
                workers=workers,
                nmax_start=config.nmax_start,
            )
        else:
            rows = sweep_s(
                problem,
                [int(round(s)) for s in sweep.grid],
                ics,
                nu=sweep.nu,
                steps=config.steps,
                workers=workers,
                nmax_start=config.nmax_start,
            )

    path = os.path.join(out_dir, "sweep.csv")
    write_table_csv(rows, path)

    return {"rows": len(rows), "table": path, "seed": seed}
