import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Text

import numpy as np
from scipy import linalg

from shiftmpc.conf import settings
from shiftmpc.core import ShiftMpcError
from shiftmpc.utils import array_hash, frozen

logger = logging.getLogger("shiftmpc.basis")

GramMatrix = np.ndarray


class BasisError(ShiftMpcError):
    """
    A basis family (or a parameter vector) is malformed or violates one of
    the assumptions the rest of the package relies on.
    """


@dataclass(frozen=True, eq=False)
class BasisFamily(object):
    """
    A family of s basis functions generated by tau(k) = M^k tau(0).

    Instances are immutable: M and tau0 are read-only copies. The `kind` and
    `params` fields remember how the family was built so it can be written
    back into a config.
    """

    M: np.ndarray
    tau0: np.ndarray
    kind: Text = "raw"
    params: Dict[Text, Any] = field(default_factory=dict)

    def __post_init__(self):
        M = frozen(self.M)
        tau0 = frozen(self.tau0).reshape(-1)
        tau0.setflags(write=False)

        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise BasisError(f"M must be square, got shape {M.shape}")

        if M.shape[0] < 1:
            raise BasisError("A family needs at least one basis function")

        if tau0.shape[0] != M.shape[0]:
            raise BasisError(
                f"tau0 has {tau0.shape[0]} entries but M is {M.shape[0]}x{M.shape[0]}"
            )

        if not (np.all(np.isfinite(M)) and np.all(np.isfinite(tau0))):
            raise BasisError("M and tau0 must be finite")

        object.__setattr__(self, "M", M)
        object.__setattr__(self, "tau0", tau0)

    def __repr__(self):
        return (
            f"BasisFamily(kind={self.kind!r}, s={self.s}, "
            f"rho={self.spectral_radius:.6g})"
        )

    @property
    def s(self) -> int:
        return self.M.shape[0]

    @cached_property
    def spectral_radius(self) -> float:
        if self.s == 1:
            return abs(float(self.M[0, 0]))

        return float(np.max(np.abs(np.linalg.eigvals(self.M))))

    @cached_property
    def hash(self) -> Text:
        """
        Content hash of (M, tau0), stable across runs and platforms.
        """

        return array_hash(self.M, self.tau0)

    def tau(self, k: int) -> np.ndarray:
        """
        Value of the basis functions at time k, iterating tau(k) = M tau(k-1).
        """

        if k < 0:
            raise BasisError("Basis functions are only defined for k >= 0")

        t = self.tau0

        for _ in range(k):
            t = self.M @ t

        return t

    def table(self, count: int) -> np.ndarray:
        """
        Stack tau(0), ..., tau(count - 1) as the rows of a (count, s) array.
        """

        out = np.empty((count, self.s))
        t = np.array(self.tau0)

        for k in range(count):
            out[k] = t
            t = self.M @ t

        return out


@dataclass(frozen=True, eq=False)
class ParamVector(object):
    """
    Stacked coefficients of a d-channel trajectory. Channel i owns the slice
    data[i * s:(i + 1) * s], which is the layout implied by the Kronecker
    product (I_d x tau(k))^T eta.
    """

    data: np.ndarray
    channels: int

    def __post_init__(self):
        data = frozen(self.data).reshape(-1)
        data.setflags(write=False)

        if self.channels < 1:
            raise BasisError("A parameter vector needs at least one channel")

        if data.shape[0] % self.channels:
            raise BasisError(
                f"Length {data.shape[0]} is not a multiple of {self.channels} channels"
            )

        object.__setattr__(self, "data", data)

    @property
    def s(self) -> int:
        return self.data.shape[0] // self.channels

    def blocks(self) -> np.ndarray:
        """
        (channels, s) view where row i holds the coefficients of channel i.
        """

        return self.data.reshape(self.channels, self.s)

    @classmethod
    def zeros(cls, channels: int, s: int) -> "ParamVector":
        return cls(np.zeros(channels * s), channels)


def _check_compatible(eta: ParamVector, family: BasisFamily) -> None:
    if eta.s != family.s or eta.data.shape[0] != eta.channels * family.s:
        raise BasisError(
            f"Parameter vector of length {eta.data.shape[0]} with {eta.channels} "
            f"channels does not match a family of size {family.s}"
        )


def shift(eta: ParamVector, family: BasisFamily) -> ParamVector:
    """
    Time shift of a trajectory: the returned vector describes at time k what
    `eta` describes at time k + 1. Computed as (I_d x M^T) eta.
    """

    _check_compatible(eta, family)
    return ParamVector((eta.blocks() @ family.M).reshape(-1), eta.channels)


def evaluate(eta: ParamVector, family: BasisFamily, k: int) -> np.ndarray:
    """
    Value (I_d x tau(k))^T eta of the trajectory at time k, as a d-vector.
    """

    _check_compatible(eta, family)
    return eta.blocks() @ family.tau(k)


def trajectory(eta: ParamVector, family: BasisFamily, count: int) -> np.ndarray:
    """
    Values of the trajectory for k = 0 .. count - 1, as a (count, d) array.
    """

    _check_compatible(eta, family)
    return family.table(count) @ eta.blocks().T


def truncated_gram(
    family: BasisFamily, tol: float = 1e-14, max_terms: int = 10_000_000
) -> GramMatrix:
    """
    Sum of tau(k) tau(k)^T, chunk by chunk, until |M^c|_2^2 <= tol. The tail
    left out after c terms is M^c J M^c^T, so its norm is at most
    |M^c|_2^2 |J|: the stop is relative to the Gram matrix itself, including
    for non-normal M whose powers grow before they decay. This is the slow
    reference the exact Gram matrix is checked against.
    """

    rho = family.spectral_radius

    if rho >= 1.0:
        raise BasisError(f"The Gram sum diverges, spectral radius is {rho}")

    chunk = max(64, family.s + 1)
    head = family.table(chunk)
    step = np.linalg.matrix_power(family.M, chunk)
    power = np.eye(family.s)
    J = np.zeros((family.s, family.s))
    count = 0

    while True:
        T = head @ power.T
        J += T.T @ T
        count += chunk
        power = step @ power

        if np.linalg.norm(power, 2) ** 2 <= tol:
            return J

        if count >= max_terms:
            raise BasisError(f"The Gram sum did not settle after {count} terms")


def gram(family: BasisFamily) -> GramMatrix:
    """
    Exact Gram matrix sum_k tau(k) tau(k)^T, as the solution of the discrete
    Lyapunov equation J = M J M^T + tau(0) tau(0)^T.
    """

    rho = family.spectral_radius

    if rho >= 1.0:
        raise BasisError(
            f"Gram matrix only exists for decaying families, spectral radius is {rho}"
        )

    q = np.outer(family.tau0, family.tau0)

    if family.s <= settings.GRAM_DIRECT_MAX_SIZE:
        J = linalg.solve_discrete_lyapunov(family.M, q, method="direct")
    else:
        J = linalg.solve_discrete_lyapunov(family.M, q, method="bilinear")

    J = 0.5 * (J + J.T)
    J.setflags(write=False)
    return J


def orthonormalize(family: BasisFamily) -> BasisFamily:
    """
    Change of coordinates tau'(k) = L^-1 tau(k), with J = L L^T the Cholesky
    factorization of the Gram matrix. The spanned trajectories don't change
    and the new Gram matrix is the identity.
    """

    J = gram(family)
    eig = np.linalg.eigvalsh(J)

    if eig[0] <= 1e-13 * max(1.0, float(eig[-1])):
        raise BasisError(
            "Gram matrix is singular: the basis functions are not linearly "
            "independent"
        )

    L = linalg.cholesky(J, lower=True)

    M = linalg.solve_triangular(L, family.M @ L, lower=True)
    tau0 = linalg.solve_triangular(L, family.tau0, lower=True)

    return BasisFamily(
        M=M,
        tau0=tau0,
        kind=family.kind,
        params=dict(family.params, orthonormal=True),
    )


def orthonormal_change(family: BasisFamily) -> np.ndarray:
    """
    Return the lower-triangular L such that `orthonormalize(family)` maps a
    parameter block eta to L^T eta.
    """

    return linalg.cholesky(gram(family), lower=True)


def dynamics_matrix(family: BasisFamily, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """
    Matrix of the linear map (eta_x, eta_u) -> eta of the residual
    x(k + 1) - A x(k) - B u(k), i.e. [I_n x M^T - A x I_s, -B x I_s]. It is
    zero exactly when the parametrized trajectories satisfy the dynamics at
    every time step.
    """

    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    n, m, s = A.shape[0], B.shape[1], family.s
    eye_s = np.eye(s)

    return np.hstack(
        [
            np.kron(np.eye(n), family.M.T) - np.kron(A, eye_s),
            -np.kron(B, eye_s),
        ]
    )


def initial_value_matrix(family: BasisFamily, n: int) -> np.ndarray:
    """
    (I_n x tau(0))^T, the map from eta_x to the value of the trajectory at
    k = 0.
    """

    return np.kron(np.eye(n), family.tau0[None, :])
