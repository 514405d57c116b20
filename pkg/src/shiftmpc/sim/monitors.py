from typing import List, Optional

import numpy as np

from shiftmpc.conf import settings
from shiftmpc.nonlinear import wrap_angle

from .log import ClosedLoopLog


def lyapunov_violations(log: ClosedLoopLog, rel_tol: float = 1e-6) -> List[int]:
    """
    Steps k at which J(x(k + 1)) - J(x(k)) <= -l(x(k), u(k)) fails by more
    than rel_tol (1 + J(x(k))). Only meaningful for undisturbed runs with
    the nominal model.
    """

    out = []
    recs = log.records

    for a, b in zip(recs, recs[1:]):
        if not (a.feasible and b.feasible):
            continue

        if b.cost - a.cost > -a.stage_cost + rel_tol * (1.0 + abs(a.cost)):
            out.append(a.k)

    return out


def feasibility_transitions(log: ClosedLoopLog) -> List[int]:
    """
    Steps k where the problem was feasible at k - 1 and is not anymore.
    """

    recs = log.records
    return [b.k for a, b in zip(recs, recs[1:]) if a.feasible and not b.feasible]


def swing_up_success(
    log: ClosedLoopLog,
    ts: Optional[float] = None,
    angle: Optional[float] = None,
    rate: Optional[float] = None,
    hold: Optional[float] = None,
    rail: Optional[float] = None,
) -> bool:
    """
    The pendulum counts as swung up when |phi| < angle and |phi'| < rate
    hold for `hold` seconds in a row, and the cart stays within the rail
    during the whole run. Defaults come from the settings.
    """

    ts = ts or log.ts
    angle = settings.SWING_UP_ANGLE if angle is None else angle
    rate = settings.SWING_UP_RATE if rate is None else rate
    hold = settings.SWING_UP_HOLD if hold is None else hold
    rail = settings.SWING_UP_RAIL if rail is None else rail

    X = log.states()

    if not X.size or not ts:
        return False

    if np.any(np.abs(X[:, 0]) > rail):
        return False

    upright = (np.abs(wrap_angle(X[:, 2])) < angle) & (np.abs(X[:, 3]) < rate)
    needed = int(np.ceil(hold / ts))
    streak = 0

    for ok in upright:
        streak = streak + 1 if ok else 0

        if streak >= needed:
            return True

    return False
