"""
Closed-loop simulation: at every step the controller is solved from the
current state, the first input is applied to the plant, and the resulting
state (optionally disturbed) is fed back.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence, Text

import numpy as np

from shiftmpc.admissible import AffineConstraintSet
from shiftmpc.conf import settings
from shiftmpc.lti import MpcError
from shiftmpc.nonlinear import NlpError, NonlinearPlant

from .log import ClosedLoopLog, PlantDiverged, SimulationError, StepRecord

logger = logging.getLogger("shiftmpc.sim")


class StepOutcome(Protocol):
    u0: np.ndarray
    cost: float
    iterations: int
    wall_time: float
    warm: bool


class Controller(Protocol):
    """
    What `run_closed_loop()` expects from a controller. Both
    `LtiController` and `NonlinearController` qualify.
    """

    n: int
    m: int

    def step(self, x0: np.ndarray) -> StepOutcome:
        ...

    def stage_cost(self, x: np.ndarray, u: np.ndarray) -> float:
        ...

    def reset(self) -> None:
        ...


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """
    Independent random stream for a given (seed, key) pair. Keys are
    (experiment, initial condition or run index, stream), stream 0 drawing
    initial conditions and stream 1 disturbances. Streams only depend on
    these integers, so results do not depend on scheduling or platform.
    """

    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=tuple(key)))
    )


@dataclass(frozen=True)
class DisturbanceSpec(object):
    """
    State disturbance scale * n(k), n(k) i.i.d. uniform in
    [-amplitude, amplitude] on each component.
    """

    amplitude: float = 0.0
    scale: Sequence[float] = field(
        default_factory=lambda: list(settings.DISTURBANCE_SCALE)
    )
    seed: int = 0

    def sampler(self, *key: int):
        rng = make_rng(self.seed, *key)
        scale = np.asarray(self.scale, dtype=float)

        def sample():
            return scale * rng.uniform(-self.amplitude, self.amplitude, scale.shape[0])

        return sample


def run_closed_loop(
    plant: NonlinearPlant,
    controller: Controller,
    x0: np.ndarray,
    steps: int,
    disturbance: Optional[DisturbanceSpec] = None,
    disturbance_key: Sequence[int] = (0, 0, 1),
    constraints: Optional[AffineConstraintSet] = None,
    ts: float = 0.0,
) -> ClosedLoopLog:
    """
    Simulate `steps` steps of the closed loop from x0.

    :param plant: true plant, may differ from the controller's model
    :param controller: see `Controller`
    :param disturbance: additive state disturbance, the controller does
        not know about it
    :param disturbance_key: stream key of the disturbance, see `make_rng()`
    :param constraints: used to record the largest violation
    :raise PlantDiverged: the plant state stopped being finite
    """

    if steps < 1:
        raise SimulationError(f"A run needs at least one step, got {steps}")

    x = np.asarray(x0, dtype=float).reshape(controller.n)
    log = ClosedLoopLog(ts=ts)
    noise = None

    if disturbance is not None and disturbance.amplitude > 0:
        noise = disturbance.sampler(*disturbance_key)

    controller.reset()

    for k in range(steps):
        try:
            outcome = controller.step(x)
        except (MpcError, NlpError) as e:
            logger.info("Closed loop stopped at k = %d: %s", k, e)
            log.records.append(
                StepRecord(
                    k=k,
                    x=x,
                    u=np.zeros(0),
                    cost=np.nan,
                    stage_cost=np.nan,
                    feasible=False,
                    iterations=0,
                    wall_time=0.0,
                    converged=False,
                )
            )
            log.stop_reason = f"{e.__class__.__name__}: {e}"
            return log

        u = np.asarray(outcome.u0, dtype=float).reshape(controller.m)

        log.records.append(
            StepRecord(
                k=k,
                x=x,
                u=u,
                cost=float(outcome.cost),
                stage_cost=controller.stage_cost(x, u),
                feasible=True,
                iterations=int(outcome.iterations),
                wall_time=float(outcome.wall_time),
                converged=bool(getattr(outcome, "converged", True)),
                warm=bool(outcome.warm),
            )
        )

        if constraints is not None and constraints.n_c:
            log.constraint_violation = max(
                log.constraint_violation,
                float(np.max(constraints.g(x, u))),
            )

        x = plant.f(k, x, u)

        if noise is not None:
            x = x + noise()

        if not np.all(np.isfinite(x)):
            log.stop_reason = "diverged"
            raise PlantDiverged(f"Plant state not finite after step {k}", log)

    log.final_state = x
    return log
