"""
Discrete-time plants x(k + 1) = f(k, x(k), u(k)).

Everything here works on batches: the Galerkin residual evaluates f on a
whole trajectory at once, so plants implement `f_batch()` and
`jacobians_batch()` on (K, n) / (K, m) arrays. The single-point methods
are thin wrappers.
"""
from typing import Optional, Tuple

import numpy as np

from shiftmpc.conf import settings
from shiftmpc.core import ShiftMpcError
from shiftmpc.utils import frozen


class NlpError(ShiftMpcError):
    """
    Nonlinear plant or nonlinear program gone wrong.
    """


class NonlinearPlant(object):
    """
    Base class of plants. Subclasses implement `f_batch()`, and
    `jacobians_batch()` if they know their derivatives; otherwise central
    finite differences are used.

    The origin must be an equilibrium: f(k, 0, 0) = 0.
    """

    n: int = 0
    m: int = 0

    def f_batch(self, ks: np.ndarray, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def f(self, k: int, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        return self.f_batch(np.array([k]), x[None, :], u[None, :])[0]

    def jacobians_batch(
        self, ks: np.ndarray, X: np.ndarray, U: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        Stacks of df/dx (K, n, n) and df/du (K, n, m) along a trajectory.
        """

        return finite_difference_jacobians(self, ks, X, U)

    def jacobians(
        self, k: int, x: np.ndarray, u: np.ndarray
    ) -> Tuple[np.ndarray, np.ndarray]:
        A, B = self.jacobians_batch(np.array([k]), x[None, :], u[None, :])
        return A[0], B[0]

    def equilibrium_error(self) -> float:
        return float(
            np.max(np.abs(self.f(0, np.zeros(self.n), np.zeros(self.m))))
        )


def finite_difference_jacobians(
    plant: NonlinearPlant,
    ks: np.ndarray,
    X: np.ndarray,
    U: np.ndarray,
    step: Optional[float] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Central differences, perturbing one coordinate of every point of the
    batch at once.
    """

    h = settings.FD_STEP if step is None else step
    K, n = X.shape
    m = U.shape[1]
    A = np.empty((K, n, n))
    B = np.empty((K, n, m))

    for j in range(n):
        dx = np.zeros(n)
        dx[j] = h
        up, down = plant.f_batch(ks, X + dx, U), plant.f_batch(ks, X - dx, U)
        A[:, :, j] = (up - down) / (2 * h)

    for j in range(m):
        du = np.zeros(m)
        du[j] = h
        up, down = plant.f_batch(ks, X, U + du), plant.f_batch(ks, X, U - du)
        B[:, :, j] = (up - down) / (2 * h)

    return A, B


class LinearPlant(NonlinearPlant):
    """
    x(k + 1) = A x(k) + B u(k), seen as a nonlinear plant.
    """

    def __init__(self, A: np.ndarray, B: np.ndarray):
        self.A = frozen(np.atleast_2d(A))
        self.B = frozen(np.asarray(B, dtype=float).reshape(self.A.shape[0], -1))
        self.n, self.m = self.B.shape

    def f_batch(self, ks, X, U):
        return X @ self.A.T + U @ self.B.T

    def jacobians_batch(self, ks, X, U):
        K = X.shape[0]
        return (
            np.broadcast_to(self.A, (K, self.n, self.n)),
            np.broadcast_to(self.B, (K, self.n, self.m)),
        )


class Rk4Plant(NonlinearPlant):
    """
    Continuous-time model x' = F(x, u) integrated with one classical
    Runge-Kutta step of length `ts`, the input being held constant.

    When the subclass provides `ode_jacobians()`, the Jacobians of the
    discrete map are propagated exactly through the four stages.
    """

    ts: float = 0.0

    def ode(self, X: np.ndarray, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def ode_jacobians(
        self, X: np.ndarray, U: np.ndarray
    ) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        return None

    def f_batch(self, ks, X, U):
        h = self.ts
        k1 = self.ode(X, U)
        k2 = self.ode(X + 0.5 * h * k1, U)
        k3 = self.ode(X + 0.5 * h * k2, U)
        k4 = self.ode(X + h * k3, U)

        return X + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def jacobians_batch(self, ks, X, U):
        if self.ode_jacobians(X[:1], U[:1]) is None:
            return finite_difference_jacobians(self, ks, X, U)

        h = self.ts
        K = X.shape[0]
        eye = np.broadcast_to(np.eye(self.n), (K, self.n, self.n))

        def stage(Xs, dX, dU):
            Fx, Fu = self.ode_jacobians(Xs, U)
            return Fx @ dX, Fx @ dU + Fu

        k1 = self.ode(X, U)
        x2 = X + 0.5 * h * k1
        k2 = self.ode(x2, U)
        x3 = X + 0.5 * h * k2
        k3 = self.ode(x3, U)
        x4 = X + h * k3

        zero_u = np.zeros((K, self.n, self.m))
        a1, b1 = stage(X, eye, zero_u)
        a2, b2 = stage(x2, eye + 0.5 * h * a1, 0.5 * h * b1)
        a3, b3 = stage(x3, eye + 0.5 * h * a2, 0.5 * h * b2)
        a4, b4 = stage(x4, eye + h * a3, h * b3)

        A = eye + h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        B = h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)

        return A, B
