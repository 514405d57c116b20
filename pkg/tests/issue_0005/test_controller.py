import numpy as np
import pytest

from shiftmpc.admissible import AffineConstraintSet
from shiftmpc.basis import make_classic, make_laguerre, make_lqr_family, orthonormalize
from shiftmpc.conf import settings
from shiftmpc.lti import (
    LtiController,
    LtiProblem,
    MpcInfeasible,
    dlqr,
    quadruple_integrator,
    zoh,
)
from shiftmpc.nonlinear import LinearPlant
from shiftmpc.sim import lyapunov_violations, random_initial_conditions, run_closed_loop


def riccati_iteration(A, B, Q, R, iterations=20000, tol=1e-14):
    """
    Value iteration on the Riccati recursion, kept independent from scipy's
    DARE solver on purpose.
    """

    P = Q.copy()

    for _ in range(iterations):
        S = R + B.T @ P @ B
        P_next = Q + A.T @ P @ A - A.T @ P @ B @ np.linalg.solve(S, B.T @ P @ A)

        if np.max(np.abs(P_next - P)) <= tol * max(1.0, np.max(np.abs(P))):
            P = P_next
            break

        P = P_next

    return -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)


def _double_integrator(ts=0.1):
    return zoh([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]], ts)


def _problem(A, B, Q, R, cons=None):
    n, m = B.shape
    return LtiProblem(
        A=A, B=B, Q=Q, R=R, cons=cons or AffineConstraintSet.empty(n, m)
    )


def test_oracle_agrees_with_scipy():
    A, B = _double_integrator()
    Q, R = np.eye(2), np.array([[1.0]])

    assert np.allclose(riccati_iteration(A, B, Q, R), dlqr(A, B, Q, R), atol=1e-8)


@pytest.mark.parametrize(
    "plant, R",
    [
        (_double_integrator(0.1), 1.0),
        (quadruple_integrator(0.2), 0.05),
    ],
)
def test_lqr_recovery(plant, R):
    A, B = plant
    n = A.shape[0]
    Q, R = np.eye(n), np.array([[R]])
    K = riccati_iteration(A, B, Q, R)
    family = orthonormalize(make_lqr_family(A, B, K))
    controller = LtiController(_problem(A, B, Q, R), family, nmax=0)

    x = np.linspace(0.5, -0.5, n)

    for _ in range(200):
        u = controller.step(x).u0

        assert np.allclose(u, K @ x, atol=1e-6)
        x = A @ x + B @ u


def test_origin():
    A, B = _double_integrator()
    cons = AffineConstraintSet.from_bounds(2, 1, u_bounds={0: 1.0})
    controller = LtiController(
        _problem(A, B, np.eye(2), [[0.01]], cons), make_classic(30)
    )
    result = controller.step(np.zeros(2))

    assert np.allclose(result.u0, 0.0)
    assert result.cost == pytest.approx(0.0, abs=1e-12)


def _constrained_double_integrator(s=30):
    A, B = _double_integrator()
    cons = AffineConstraintSet.from_bounds(2, 1, u_bounds={0: 1.0})
    return _problem(A, B, np.eye(2), [[0.01]], cons), make_classic(s)


def test_classic_family_nmax():
    problem, family = _constrained_double_integrator()
    controller = LtiController(problem, family)

    assert controller.nmax == 3 * 30
    assert controller.nmax_result.iterations == 1


def test_infeasible_initial_state():
    problem, family = _constrained_double_integrator()
    controller = LtiController(problem, family)

    # 30 steps of |u| <= 1 cannot move the mass by 100
    with pytest.raises(MpcInfeasible):
        controller.step(np.array([100.0, 0.0]))

    assert controller.previous is None


def test_warm_start_matches_cold():
    problem, family = _constrained_double_integrator()
    warm = LtiController(problem, family, nmax=90)
    cold = LtiController(problem, family, nmax=90, warm_start=False)
    x = np.array([1.0, 0.0])
    saturated = 0

    for k in range(40):
        a = warm.step(x)
        b = cold.step(x)

        assert a.warm == (k > 0)
        assert not b.warm
        assert np.allclose(a.u0, b.u0, atol=1e-6)
        assert a.cost == pytest.approx(b.cost, rel=1e-8, abs=1e-10)

        saturated += abs(a.u0[0]) >= 1.0 - 1e-6
        x = problem.next_state(x, a.u0)

    # the bound must have been active for the test to mean anything
    assert saturated > 0


def test_constraints_hold_on_prediction():
    problem, family = _constrained_double_integrator()
    controller = LtiController(problem, family)
    result = controller.step(np.array([1.0, -0.5]))
    X, U = result.prediction(60)

    assert np.all(np.abs(U) <= 1.0 + 1e-7)
    assert np.allclose(X[0], [1.0, -0.5])
    assert np.allclose(X[30:], 0.0)


def test_lyapunov_decrease():
    problem, family = _constrained_double_integrator()
    plant = LinearPlant(problem.A, problem.B)

    for x0 in ([1.0, 0.0], [-0.5, 0.8], [0.2, -1.0]):
        controller = LtiController(problem, family)
        log = run_closed_loop(plant, controller, np.array(x0), 150)

        assert log.feasible
        assert lyapunov_violations(log) == []
        assert log.converged


def test_quadruple_integrator_warm_start():
    A, B = quadruple_integrator(0.02)
    cons = AffineConstraintSet.from_bounds(4, 1, u_bounds={0: 0.5})
    problem = _problem(A, B, np.eye(4), [[0.05]], cons)
    family = make_laguerre(8, 0.8, 0.02)
    warm = LtiController(problem, family, nmax=60)
    cold = LtiController(problem, family, nmax=60, warm_start=False)
    x = np.full(4, 0.5)

    for _ in range(30):
        a, b = warm.step(x), cold.step(x)

        assert np.allclose(a.u0, b.u0, atol=1e-6)
        x = problem.next_state(x, a.u0)


@pytest.mark.skipif(
    not settings.RUN_SLOW_EXPERIMENTS, reason="set SHIFTMPC_SLOW=yes to run"
)
def test_recursive_feasibility_quadruple_integrator():
    A, B = quadruple_integrator(0.02)
    cons = AffineConstraintSet.from_bounds(4, 1, u_bounds={0: 0.5})
    problem = _problem(A, B, np.eye(4), [[0.05]], cons)
    controller = LtiController(problem, make_laguerre(8, 0.8, 0.02))
    plant = LinearPlant(A, B)

    for x0 in random_initial_conditions(100, seed=0):
        log = run_closed_loop(plant, controller, x0, 2000)

        assert log.feasible
        assert lyapunov_violations(log) == []
        assert np.max(np.abs(log.final_state)) < 1e-3
