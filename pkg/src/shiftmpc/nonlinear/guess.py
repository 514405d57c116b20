"""
Rough swing-up trajectories used to start the very first SQP solve.

The pendulum is simulated from the hanging position with a short step kick,
then an energy-pumping bang-bang input, then a discrete LQR that catches it
once it gets close to upright. The rail length is ignored. The model is
symmetric under (x, v, phi, w, u) -> (-x, -v, 2 pi - phi, -w, -u), which is
used to make sure the result ends at phi = 0 rather than phi = 2 pi.
"""
import csv
import logging
from typing import Optional, Text, Tuple

import numpy as np

from shiftmpc.basis import BasisFamily, ParamVector
from shiftmpc.lti import dlqr

from .galerkin import project_trajectory
from .pendulum import (
    HANGING,
    PENDULUM_Q,
    PENDULUM_R,
    VOLTAGE_LIMIT,
    PendulumPlant,
    wrap_angle,
)
from .plant import NlpError

logger = logging.getLogger("shiftmpc.nonlinear")


def swing_up_guess(
    plant: PendulumPlant,
    steps: int = 150,
    kick_steps: int = 4,
    u_max: float = VOLTAGE_LIMIT,
    catch_angle: float = 0.5,
    pump_gain: float = 50.0,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Simulate the heuristic swing-up.

    :return: states (steps + 1, 4) and inputs (steps, 1)
    """

    p = plant.params
    omega2 = (p.M + p.m) * p.g / (p.M * p.l)
    A, B = plant.jacobians(0, np.zeros(4), np.zeros(1))
    K = dlqr(A, B, PENDULUM_Q, PENDULUM_R)

    X = np.empty((steps + 1, 4))
    U = np.empty((steps, 1))
    X[0] = HANGING
    caught = None

    for k in range(steps):
        x = X[k]
        phi = float(wrap_angle(x[2]))

        if caught is None and abs(phi) < catch_angle:
            caught = k

        if caught is not None:
            xw = np.array([x[0], x[1], phi, x[3]])
            u = float(np.clip((K @ xw).item(), -u_max, u_max))
        elif k < kick_steps:
            u = u_max
        else:
            energy = 0.5 * x[3] ** 2 - omega2 * (1.0 - np.cos(phi))
            push = -pump_gain * (0.0 - energy) * x[3] * np.cos(phi)
            u = float(np.clip(push, -u_max, u_max))

        U[k] = u
        X[k + 1] = plant.f(k, x, U[k])

    if caught is None:
        logger.warning("Swing-up guess never reached the catch region")
    else:
        logger.debug("Swing-up guess caught the pendulum at k = %d", caught)

    if X[-1, 2] > np.pi:
        X = np.column_stack([-X[:, 0], -X[:, 1], 2.0 * np.pi - X[:, 2], -X[:, 3]])
        U = -U

    return X, U


def guess_parameters(
    X: np.ndarray, U: np.ndarray, family: BasisFamily, method: Text = "lstsq"
) -> Tuple[ParamVector, ParamVector]:
    """
    Parameters of a sampled guess. Samples that have not settled are
    projected anyway, the SQP takes care of the rest.
    """

    return (
        project_trajectory(X[: U.shape[0]], family, method),
        project_trajectory(U, family, method),
    )


def save_guess_csv(path: Text, U: np.ndarray, X: Optional[np.ndarray] = None) -> None:
    """
    One row per step: u_0 .. u_{m-1}, then x_0 .. x_{n-1} when states are
    given.
    """

    U = np.asarray(U, dtype=float).reshape(U.shape[0], -1)
    header = [f"u{j}" for j in range(U.shape[1])]

    if X is not None:
        X = np.asarray(X, dtype=float)[: U.shape[0]]
        header += [f"x{j}" for j in range(X.shape[1])]

    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)

        for k in range(U.shape[0]):
            row = list(U[k])

            if X is not None:
                row += list(X[k])

            writer.writerow([repr(float(v)) for v in row])


def load_guess_csv(path: Text) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Read a file written by `save_guess_csv()` (or by hand). Returns
    (U, X), X being None when the file only has inputs.
    """

    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        header = next(reader, None)

        if not header:
            raise NlpError(f"Guess file {path} is empty")

        rows = [[float(v) for v in row] for row in reader if row]

    if not rows:
        raise NlpError(f"Guess file {path} has no data")

    data = np.array(rows)
    u_cols = [i for i, h in enumerate(header) if h.strip().startswith("u")]
    x_cols = [i for i, h in enumerate(header) if h.strip().startswith("x")]

    if not u_cols:
        raise NlpError(f"Guess file {path} has no input column")

    return data[:, u_cols], (data[:, x_cols] if x_cols else None)
