import numpy as np
import pytest

from shiftmpc.admissible import AffineConstraintSet
from shiftmpc.basis import ParamVector, make_classic, make_laguerre, trajectory
from shiftmpc.lti import LtiController, LtiProblem, zoh
from shiftmpc.nonlinear import (
    LinearPlant,
    NlpError,
    NlpSubproblemInfeasible,
    NonlinearController,
    NonlinearPlant,
    QuadraticCost,
    solve_nlp,
)

A, B = zoh([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], 0.1)
Q, R = np.eye(2), np.array([[0.01]])
CONS = AffineConstraintSet.from_bounds(2, 1, u_bounds={0: 1.0})


def _zeros(family):
    return ParamVector.zeros(2, family.s), ParamVector.zeros(1, family.s)


@pytest.mark.parametrize(
    "family, nmax",
    [
        (make_classic(30), 90),
        (make_laguerre(4, 1.0, 0.1), 60),
    ],
)
def test_linear_plant_matches_lti(family, nmax):
    plant = LinearPlant(A, B)
    lti = LtiController(LtiProblem(A, B, Q, R, CONS), family, nmax=nmax)

    for x0 in ([0.1, 0.0], [-0.05, 0.05]):
        expected = lti.step(np.array(x0))
        result = solve_nlp(
            plant,
            family,
            QuadraticCost(Q, R),
            CONS,
            nmax,
            np.array(x0),
            _zeros(family),
            k_trunc=400,
        )

        assert result.converged
        assert result.feasibility < 1e-6
        assert np.allclose(result.u0, expected.u0, atol=1e-6)
        assert result.cost == pytest.approx(expected.cost, rel=1e-6)


def test_infeasible_subproblem():
    family = make_classic(30)

    with pytest.raises(NlpSubproblemInfeasible) as info:
        solve_nlp(
            LinearPlant(A, B),
            family,
            QuadraticCost(Q, R),
            CONS,
            90,
            np.array([100.0, 0.0]),
            _zeros(family),
        )

    assert info.value.eta_u.channels == 1


class _CubicInput(NonlinearPlant):
    # The input has almost no authority around u = 0
    n, m = 1, 1

    def f_batch(self, ks, X, U):
        return X - 0.1 * (U**3 + 0.01 * U)


def test_elastic_step_leaves_inconsistent_linearization():
    family = make_classic(10)
    cons = AffineConstraintSet.from_bounds(1, 1, u_bounds={0: 1.0})
    guess = ParamVector.zeros(1, family.s), ParamVector.zeros(1, family.s)

    # Linearized at u = 0, bringing x from 0.2 to 0 in 10 samples takes a
    # total input of 200 while |u| <= 1. The cubic term makes it possible.
    result = solve_nlp(
        _CubicInput(),
        family,
        QuadraticCost([[1.0]], [[0.01]]),
        cons,
        10,
        np.array([0.2]),
        guess,
    )
    u = trajectory(result.eta_u, family, 10)[:, 0]

    assert result.elastic_steps >= 1
    assert result.converged
    assert result.feasibility < 1e-6
    assert np.max(np.abs(u)) <= 1.0 + 1e-8
    assert np.sum(0.1 * (u**3 + 0.01 * u)) == pytest.approx(0.2, abs=1e-5)


def test_bad_guess():
    family = make_classic(5)

    with pytest.raises(NlpError):
        solve_nlp(
            LinearPlant(A, B),
            family,
            QuadraticCost(Q, R),
            CONS,
            10,
            np.zeros(2),
            (ParamVector.zeros(2, 4), ParamVector.zeros(1, 4)),
        )


def test_bad_cost():
    with pytest.raises(NlpError):
        QuadraticCost(np.zeros((2, 2)), R)

    with pytest.raises(NlpError):
        QuadraticCost(Q, [[-1.0]])


def test_controller_warm_starts():
    family = make_classic(30)
    controller = NonlinearController(
        LinearPlant(A, B),
        family,
        QuadraticCost(Q, R),
        CONS,
        _zeros(family),
        nmax=90,
    )
    x = np.array([1.0, 0.0])

    first = controller.step(x)

    assert not first.warm
    assert first.converged

    for _ in range(10):
        x = A @ x + B @ controller.previous.u0
        result = controller.step(x)

        assert result.warm
        assert result.converged
        assert result.iterations <= controller.warm_budget

    controller.reset()

    assert not controller.step(x).warm


def test_controller_computes_nmax():
    family = make_classic(4)
    controller = NonlinearController(
        LinearPlant(A, B), family, QuadraticCost(Q, R), CONS, _zeros(family)
    )

    assert controller.nmax == 3 * 4
