"""
Dynamics of nonlinear plants imposed in a weak (Galerkin) sense: the
one-step prediction error of the parametrized trajectories is required to
be orthogonal to every basis function,

    sum_k (I_n x tau(k)) (x(k + 1) - f(k, x(k), u(k))) = 0,

the infinite sum being truncated after K_trunc terms. For linear plants
this is the exact dynamics equality premultiplied by I_n x J.
"""
import logging
from typing import Optional, Sequence, Text, Tuple, Union

import numpy as np
from scipy import linalg

from shiftmpc.basis import BasisFamily, ParamVector, gram
from shiftmpc.conf import settings

from .plant import NlpError, NonlinearPlant

logger = logging.getLogger("shiftmpc.nonlinear")


def truncation(family: BasisFamily, k_trunc: Optional[int] = None) -> int:
    """
    Resolve the truncation length, warning when the basis functions have
    not decayed enough by then.
    """

    if k_trunc is None:
        k_trunc = settings.GALERKIN_TRUNCATION

    tail = family.spectral_radius ** k_trunc

    if tail > settings.GALERKIN_DECAY_WARNING:
        logger.warning(
            "Galerkin sum truncated at k = %d where rho(M)^k = %.3g, the "
            "dropped terms may matter",
            k_trunc,
            tail,
        )

    return k_trunc


def _trajectories(eta_x, eta_u, family, k_trunc):
    T = family.table(k_trunc + 2)
    X = T @ eta_x.blocks().T
    U = T[: k_trunc + 1] @ eta_u.blocks().T
    return T, X, U


def _check_finite(values: np.ndarray, what: Text) -> None:
    bad = ~np.all(np.isfinite(values.reshape(values.shape[0], -1)), axis=1)

    if np.any(bad):
        raise NlpError(f"Non-finite {what} at k = {int(np.flatnonzero(bad)[0])}")


def galerkin_residual(
    eta_x: ParamVector,
    eta_u: ParamVector,
    plant: NonlinearPlant,
    family: BasisFamily,
    k_trunc: Optional[int] = None,
) -> np.ndarray:
    """
    Truncated Galerkin residual, an (n s)-vector laid out like eta_x.
    """

    k_trunc = truncation(family, k_trunc)
    T, X, U = _trajectories(eta_x, eta_u, family, k_trunc)
    ks = np.arange(k_trunc + 1)

    F = plant.f_batch(ks, X[:-1], U)
    _check_finite(F, "plant output")

    E = X[1:] - F
    return (E.T @ T[: k_trunc + 1]).reshape(-1)


def residual_jacobian(
    eta_x: ParamVector,
    eta_u: ParamVector,
    plant: NonlinearPlant,
    family: BasisFamily,
    k_trunc: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Derivatives of `galerkin_residual()` with respect to eta_x (n s x n s)
    and eta_u (n s x m s), by the chain rule through the trajectory
    evaluation.
    """

    k_trunc = truncation(family, k_trunc)
    T, X, U = _trajectories(eta_x, eta_u, family, k_trunc)
    T0, T1 = T[: k_trunc + 1], T[1 : k_trunc + 2]
    ks = np.arange(k_trunc + 1)

    Ak, Bk = plant.jacobians_batch(ks, X[:-1], U)
    _check_finite(Ak, "state Jacobian")
    _check_finite(Bk, "input Jacobian")

    n, m, s = plant.n, plant.m, family.s

    Jx = np.kron(np.eye(n), T0.T @ T1) - np.einsum(
        "kij,ka,kb->iajb", Ak, T0, T0, optimize=True
    ).reshape(n * s, n * s)
    Ju = -np.einsum("kij,ka,kb->iajb", Bk, T0, T0, optimize=True).reshape(
        n * s, m * s
    )

    return Jx, Ju


def project_trajectory(
    samples: Union[np.ndarray, Sequence[Sequence[float]]],
    family: BasisFamily,
    method: Text = "lstsq",
) -> ParamVector:
    """
    Parameter vector whose trajectory best matches sampled values.

    :param samples: (K, d) array, one row per time step
    :param family: basis family
    :param method: "lstsq" minimizes the squared error over the K samples,
        "galerkin" computes J^-1 sum_k tau(k) u(k), which is the same thing
        for samples that have decayed to zero (and the plain sum for an
        orthonormal family).
    """

    U = np.asarray(samples, dtype=float)

    if U.ndim == 1:
        U = U[:, None]

    if U.shape[0] == 0:
        raise NlpError("Cannot project an empty trajectory")

    T = family.table(U.shape[0])

    if method == "lstsq":
        coefs = np.linalg.lstsq(T, U, rcond=None)[0]
    elif method == "galerkin":
        coefs = linalg.solve(gram(family), T.T @ U, assume_a="pos")
    else:
        raise NlpError(f"Unknown projection method {method!r}")

    return ParamVector(coefs.T.reshape(-1), U.shape[1])
