import os

import numpy as np
import pytest

from shiftmpc.conf import settings
from shiftmpc.nonlinear import (
    HANGING,
    VOLTAGE_LIMIT,
    NlpError,
    guess_parameters,
    load_guess_csv,
    pendulum_constraints,
    pendulum_family,
    pendulum_plant,
    save_guess_csv,
    swing_up_guess,
)
from shiftmpc.sim import build_pendulum_setup, run_closed_loop, swing_up_success


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(80)
    U = rng.normal(size=(20, 1))
    X = rng.normal(size=(21, 4))
    path = os.path.join(tmp_path, "guess.csv")

    save_guess_csv(path, U, X)
    U2, X2 = load_guess_csv(path)

    assert np.array_equal(U2, U)
    assert np.array_equal(X2, X[:20])

    save_guess_csv(path, U)
    U3, X3 = load_guess_csv(path)

    assert np.array_equal(U3, U)
    assert X3 is None


def test_hand_written_csv(tmp_path):
    path = os.path.join(tmp_path, "guess.csv")

    with open(path, "w", encoding="utf-8") as f:
        f.write("u0\n24\n-24\n0\n")

    U, X = load_guess_csv(path)

    assert U.shape == (3, 1)
    assert U[1, 0] == -24.0
    assert X is None


@pytest.mark.filterwarnings("error::DeprecationWarning")
def test_catch_controller_input_is_scalar():
    # A catch region wider than pi hands every step to the LQR catch
    plant = pendulum_plant()
    X, U = swing_up_guess(plant, steps=5, catch_angle=4.0)

    assert U.shape == (5, 1)
    assert np.all(np.abs(U) <= VOLTAGE_LIMIT)
    assert np.all(np.isfinite(X))


@pytest.mark.parametrize("content", ["", "u0\n", "x0\n1.0\n"])
def test_bad_csv(tmp_path, content):
    path = os.path.join(tmp_path, "guess.csv")

    with open(path, "w", encoding="utf-8") as f:
        f.write(content)

    with pytest.raises(NlpError):
        load_guess_csv(path)


def test_swing_up_guess_shape():
    X, U = swing_up_guess(pendulum_plant(), steps=60)

    assert X.shape == (61, 4)
    assert U.shape == (60, 1)
    assert np.all(np.abs(U) <= VOLTAGE_LIMIT)
    assert np.allclose(np.abs(X[0]), HANGING)
    assert X[-1, 2] <= np.pi


def test_guess_parameters():
    family = pendulum_family(0.02)
    X, U = swing_up_guess(pendulum_plant(), steps=60)
    eta_x, eta_u = guess_parameters(X, U, family)

    assert (eta_x.channels, eta_u.channels) == (4, 1)
    assert eta_x.s == eta_u.s == family.s


@pytest.mark.skipif(
    not settings.RUN_SLOW_EXPERIMENTS, reason="set SHIFTMPC_SLOW=yes to run"
)
def test_swing_up_guess_reaches_upright():
    X, _ = swing_up_guess(pendulum_plant(), steps=150)

    assert abs(X[-1, 2]) < 0.2


@pytest.mark.skipif(
    not settings.RUN_SLOW_EXPERIMENTS, reason="set SHIFTMPC_SLOW=yes to run"
)
def test_swing_up_closed_loop():
    setup = build_pendulum_setup()
    controller = setup.controller()
    log = run_closed_loop(
        setup.plant,
        controller,
        HANGING,
        150,
        constraints=pendulum_constraints(),
        ts=setup.plant.ts,
    )

    assert log.feasible
    assert swing_up_success(log)
    assert log.constraint_violation <= 1e-6
    assert all(r.iterations <= settings.SQP_WARM_MAX_ITER for r in log.records[1:])
