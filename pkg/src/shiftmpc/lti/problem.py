from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import linalg

from shiftmpc.admissible import AffineConstraintSet
from shiftmpc.core import HealthCheckFail, ShiftMpcError
from shiftmpc.utils import frozen


class MpcError(ShiftMpcError):
    """
    Base of everything going wrong while building or running an MPC
    controller.
    """


class MpcInfeasible(MpcError):
    """
    The optimization problem has no solution for the given initial state,
    which lies outside the feasible region.
    """

    def __init__(self, x0, message=None):
        super().__init__(message or f"No admissible trajectory from x0 = {list(x0)}")
        self.x0 = np.array(x0)


class MpcSolverFailure(MpcError):
    """
    The solver gave up (iteration budget) or returned something unusable.
    """


def check_problem(
    A: np.ndarray,
    B: np.ndarray,
    Q: np.ndarray,
    R: np.ndarray,
    cons: AffineConstraintSet,
) -> Iterator[HealthCheckFail]:
    """
    - 40001: dimensions of A, B, Q, R and of the constraints agree
    - 40002: Q is symmetric positive definite
    - 40003: R is symmetric positive semi-definite
    """

    n, m = B.shape

    if (
        A.shape != (n, n)
        or Q.shape != (n, n)
        or R.shape != (m, m)
        or (cons.n, cons.m) != (n, m)
    ):
        yield HealthCheckFail(
            "40001",
            f"Inconsistent dimensions: A {A.shape}, B {B.shape}, Q {Q.shape}, "
            f"R {R.shape}, constraints on n={cons.n} m={cons.m}",
        )
        return

    if not np.allclose(Q, Q.T) or np.min(np.linalg.eigvalsh(Q)) <= 0.0:
        yield HealthCheckFail("40002", "Q must be symmetric positive definite")

    if not np.allclose(R, R.T) or np.min(np.linalg.eigvalsh(R)) < -1e-12:
        yield HealthCheckFail("40003", "R must be symmetric positive semi-definite")


@dataclass(frozen=True, eq=False)
class LtiProblem(object):
    """
    Regulation of x(k + 1) = A x(k) + B u(k) to the origin, with running
    cost x^T Q x + u^T R u and constraints g(x, u) <= 0.
    """

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    cons: AffineConstraintSet
    ts: float = 0.0

    def __post_init__(self):
        A = frozen(np.atleast_2d(self.A))
        B = frozen(np.asarray(self.B, dtype=float).reshape(A.shape[0], -1))
        Q = frozen(np.atleast_2d(self.Q))
        R = frozen(np.atleast_2d(self.R))

        failures = list(check_problem(A, B, Q, R, self.cons))

        if failures:
            raise MpcError("; ".join(f.reason for f in failures))

        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def stage_cost(self, x: np.ndarray, u: np.ndarray) -> float:
        return float(x @ self.Q @ x + u @ self.R @ u)

    def next_state(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.A @ x + self.B @ u


def zoh(Ac: np.ndarray, Bc: np.ndarray, ts: float):
    """
    Zero-order hold discretization, exact, through the exponential of the
    augmented matrix [[Ac, Bc], [0, 0]].
    """

    Ac = np.atleast_2d(np.asarray(Ac, dtype=float))
    Bc = np.asarray(Bc, dtype=float).reshape(Ac.shape[0], -1)
    n, m = Bc.shape

    aug = np.zeros((n + m, n + m))
    aug[:n, :n] = Ac
    aug[:n, n:] = Bc
    E = linalg.expm(aug * ts)

    return E[:n, :n], E[:n, n:]


def quadruple_integrator(ts: float):
    """
    x'''' = u with state (x, x', x'', x'''), discretized with a zero-order
    hold. Returns (A, B).
    """

    return zoh(np.eye(4, k=1), np.eye(4)[:, [3]], ts)


def dlqr(A: np.ndarray, B: np.ndarray, Q: np.ndarray, R: np.ndarray) -> np.ndarray:
    """
    Infinite-horizon discrete LQR gain, with the sign convention u = K x
    (so A + B K is the closed loop).
    """

    P = linalg.solve_discrete_are(A, B, Q, R)
    return -np.linalg.solve(R + B.T @ P @ B, B.T @ P @ A)
