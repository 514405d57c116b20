import numpy as np

from shiftmpc.sim import (
    ClosedLoopLog,
    StepRecord,
    feasibility_transitions,
    lyapunov_violations,
    swing_up_success,
)


def _record(k, cost, stage_cost=0.0, feasible=True, x=None):
    return StepRecord(
        k=k,
        x=np.zeros(4) if x is None else np.asarray(x, dtype=float),
        u=np.zeros(1),
        cost=cost,
        stage_cost=stage_cost,
        feasible=feasible,
        iterations=1,
        wall_time=0.0,
    )


def test_lyapunov_decrease():
    log = ClosedLoopLog(
        records=[
            _record(0, 10.0, 2.0),
            _record(1, 8.0, 3.0),
            # increases, then does not decrease by the stage cost
            _record(2, 9.0, 1.0),
            _record(3, 8.5, 1.0),
        ]
    )

    assert lyapunov_violations(log) == [1, 2]


def test_lyapunov_skips_infeasible_steps():
    log = ClosedLoopLog(
        records=[_record(0, 1.0, 0.5), _record(1, np.nan, feasible=False)]
    )

    assert lyapunov_violations(log) == []


def test_feasibility_transitions():
    flags = [True, True, False, False, True, False]
    log = ClosedLoopLog(
        records=[_record(k, 0.0, feasible=f) for k, f in enumerate(flags)]
    )

    assert feasibility_transitions(log) == [2, 5]


def _pendulum_log(phis, xc=0.0, ts=0.1):
    return ClosedLoopLog(
        ts=ts,
        records=[_record(k, 0.0, x=[xc, 0.0, p, 0.0]) for k, p in enumerate(phis)],
    )


def test_swing_up_success():
    upright = [np.pi] * 10 + [0.01] * 6

    assert swing_up_success(_pendulum_log(upright), hold=0.5)
    assert not swing_up_success(_pendulum_log(upright), hold=1.0)
    # upright at 2 pi counts too
    assert swing_up_success(_pendulum_log([np.pi] * 3 + [2 * np.pi] * 6), hold=0.5)


def test_swing_up_needs_the_rail():
    upright = [0.0] * 20

    assert not swing_up_success(_pendulum_log(upright, xc=0.5), hold=0.5)
    assert swing_up_success(_pendulum_log(upright, xc=0.5), hold=0.5, rail=1.0)


def test_swing_up_without_data():
    assert not swing_up_success(ClosedLoopLog(ts=0.1))
    assert not swing_up_success(ClosedLoopLog(records=[_record(0, 0.0)]))
