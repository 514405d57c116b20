import csv
import os

import numpy as np
import pytest

from shiftmpc.admissible import AffineConstraintSet
from shiftmpc.conf import settings
from shiftmpc.lti import LtiProblem, quadruple_integrator, zoh
from shiftmpc.sim import (
    build_pendulum_setup,
    parallel_map,
    random_initial_conditions,
    robustness_sweep,
    sweep_nu,
    sweep_s,
    write_table_csv,
)


def _double_integrator():
    A, B = zoh([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], 0.1)
    return LtiProblem(
        A=A,
        B=B,
        Q=np.eye(2),
        R=[[0.1]],
        cons=AffineConstraintSet.from_bounds(2, 1, u_bounds={0: 1.0}),
        ts=0.1,
    )


def _square(x):
    return x * x


def test_initial_conditions_are_reproducible():
    a = random_initial_conditions(10, seed=3)
    b = random_initial_conditions(5, seed=3)

    assert a.shape == (10, 4)
    assert np.all(np.abs(a) <= 0.5)
    # IC i does not depend on how many are drawn
    assert np.array_equal(a[:5], b)
    assert not np.array_equal(a, random_initial_conditions(10, seed=4))


def test_parallel_map_in_process():
    assert parallel_map(_square, [1, 2, 3], workers=1) == [1, 4, 9]
    assert parallel_map(_square, [], workers=4) == []


def test_write_table_csv(tmp_path):
    path = os.path.join(tmp_path, "table.csv")
    rows = [
        {"nu": 0.5, "nmax": 12, "feasible": True, "mean_cost": np.float64(1.5)},
        {"nu": 0.6, "nmax": None, "feasible": False, "mean_cost": np.nan},
    ]
    write_table_csv(rows, path)

    with open(path, newline="", encoding="utf-8") as f:
        lines = list(csv.reader(f))

    assert lines == [
        ["nu", "nmax", "feasible", "mean_cost"],
        ["0.5", "12", "1", "1.5"],
        ["0.6", "", "0", "nan"],
    ]

    with pytest.raises(ValueError):
        write_table_csv([], path)


def test_small_sweeps():
    problem = _double_integrator()
    ics = random_initial_conditions(3, seed=0, n=2, low=-0.05, high=0.05)

    rows = sweep_nu(problem, [1.0, 2.0], ics, s=3, steps=50, workers=1)

    assert [r["nu"] for r in rows] == [1.0, 2.0]

    for row in rows:
        assert row["kind"] == "laguerre"
        assert row["s"] == 3
        assert row["nmax"] >= 9
        assert row["feasible"] + row["infeasible"] == 3

    rows = sweep_s(problem, [2, 3], ics, nu=1.0, steps=50, workers=1)

    assert [r["s"] for r in rows] == [2, 3]
    assert all(r["nmax"] >= 3 * r["s"] for r in rows)


@pytest.mark.skipif(
    not settings.RUN_SLOW_EXPERIMENTS, reason="set SHIFTMPC_SLOW=yes to run"
)
def test_robustness():
    setup = build_pendulum_setup()
    rows = robustness_sweep(setup, [0.0, 5.0], runs=10, steps=150)
    nominal, disturbed = rows

    assert nominal["runs"] == 1
    assert disturbed["runs"] == 10
    assert nominal["success_rate"] == disturbed["success_rate"] == 1.0
    assert 1.5 <= disturbed["mean_cost"] / nominal["mean_cost"] <= 2.5


def _quadruple_integrator():
    A, B = quadruple_integrator(0.02)
    return LtiProblem(
        A=A,
        B=B,
        Q=np.eye(4),
        R=[[0.05]],
        cons=AffineConstraintSet.from_bounds(4, 1, u_bounds={0: 0.5}),
        ts=0.02,
    )


# Recursive feasibility makes the first step decide whether an initial
# condition is feasible, so feasibility counts use a single step.


@pytest.mark.skipif(
    not settings.RUN_SLOW_EXPERIMENTS, reason="set SHIFTMPC_SLOW=yes to run"
)
def test_nu_sweep_feasibility():
    grid = np.round(np.arange(0.5, 2.05, 0.1), 1)
    ics = random_initial_conditions(100, seed=0)
    rows = sweep_nu(_quadruple_integrator(), grid, ics, s=8, steps=1)

    for row in rows:
        if row["nu"] <= 1.8:
            assert row["infeasible"] == 0, row

    assert sum(r["infeasible"] for r in rows if r["nu"] > 1.8) > 0


@pytest.mark.skipif(
    not settings.RUN_SLOW_EXPERIMENTS, reason="set SHIFTMPC_SLOW=yes to run"
)
def test_nu_sweep_cost_has_local_minimum():
    grid = np.round(np.arange(0.5, 1.15, 0.1), 1)
    ics = random_initial_conditions(20, seed=0)
    rows = sweep_nu(_quadruple_integrator(), grid, ics, s=8, steps=1000)
    cost = [r["mean_cost"] for r in rows]

    assert all(r["infeasible"] == 0 for r in rows)
    assert any(
        0.6 <= rows[i]["nu"] <= 1.0 and cost[i] <= min(cost[i - 1], cost[i + 1])
        for i in range(1, len(rows) - 1)
    )


@pytest.mark.skipif(
    not settings.RUN_SLOW_EXPERIMENTS, reason="set SHIFTMPC_SLOW=yes to run"
)
def test_s_sweep():
    problem = _quadruple_integrator()
    ics = random_initial_conditions(20, seed=0)
    rows = sweep_s(problem, range(8, 13), ics, nu=1.0, steps=1000)
    cost = [r["mean_cost"] for r in rows]

    assert all(r["infeasible"] == 0 for r in rows)
    # a richer basis never does noticeably worse
    assert all(b <= a * 1.01 for a, b in zip(cost, cost[1:]))

    rows = sweep_s(
        problem, range(4, 8), random_initial_conditions(100, seed=0), nu=1.0, steps=1
    )

    assert sum(r["infeasible"] for r in rows) > 0
