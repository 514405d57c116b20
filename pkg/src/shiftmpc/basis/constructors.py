"""
The shipped basis families. Each constructor returns an immutable
`BasisFamily` that remembers its kind and parameters.
"""
from math import factorial
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from .family import BasisError, BasisFamily


def make_classic(s: int) -> BasisFamily:
    """
    The impulse family: M is the down-shift matrix and tau(0) = e_1, so the
    first s samples of a trajectory are free and everything after is zero.
    This is plain finite-horizon MPC.
    """

    if int(s) != s or s < 1:
        raise BasisError(f"The classic family needs s >= 1, got {s}")

    s = int(s)
    tau0 = np.zeros(s)
    tau0[0] = 1.0

    return BasisFamily(M=np.eye(s, k=-1), tau0=tau0, kind="classic", params={"s": s})


def laguerre_matrix(s: int, nu: float, ts: float) -> np.ndarray:
    """
    Closed form of exp(M_c ts) where M_c has -nu on the diagonal and -2 nu
    below it. M_c = -nu I + N with N strictly lower triangular, and since N
    is nilpotent and commutes with the identity, the exponential series of N
    stops after s terms.
    """

    N = np.tril(np.full((s, s), -2.0 * nu * ts), k=-1)
    out = np.zeros((s, s))
    term = np.eye(s)

    for j in range(s):
        out += term / factorial(j)
        term = term @ N

    return np.exp(-nu * ts) * out


def make_laguerre(s: int, nu: float, ts: float) -> BasisFamily:
    """
    Discrete-time sampled Laguerre functions: exponentially decaying
    polynomials with decay rate nu (1/s) sampled every ts seconds.
    """

    if int(s) != s or s < 1:
        raise BasisError(f"The Laguerre family needs s >= 1, got {s}")

    if not nu > 0:
        raise BasisError(f"The decay rate must be positive, got {nu}")

    if not ts > 0:
        raise BasisError(f"The sampling time must be positive, got {ts}")

    s = int(s)

    return BasisFamily(
        M=laguerre_matrix(s, nu, ts),
        tau0=np.sqrt(2.0 * nu) * np.ones(s),
        kind="laguerre",
        params={"s": s, "nu": float(nu), "ts": float(ts)},
    )


def make_damped_fourier(s: int, nu: float, omega: float, ts: float) -> BasisFamily:
    """
    Exponentially damped harmonics e^{-nu k ts} (1, cos(j omega k ts),
    sin(j omega k ts)) for j = 1 .. (s - 1) / 2, realized with real 2x2
    rotation blocks.
    """

    if int(s) != s or s < 1 or s % 2 == 0:
        raise BasisError(f"The damped Fourier family needs an odd s, got {s}")

    if not nu > 0:
        raise BasisError(f"The decay rate must be positive, got {nu}")

    if not omega > 0:
        raise BasisError(f"The frequency must be positive, got {omega}")

    if not ts > 0:
        raise BasisError(f"The sampling time must be positive, got {ts}")

    s = int(s)
    decay = np.exp(-nu * ts)
    blocks = [np.array([[decay]])]
    tau0 = [1.0]

    for j in range(1, (s - 1) // 2 + 1):
        theta = j * omega * ts
        c, sn = np.cos(theta), np.sin(theta)
        blocks.append(decay * np.array([[c, -sn], [sn, c]]))
        tau0 += [1.0, 0.0]

    return BasisFamily(
        M=linalg.block_diag(*blocks),
        tau0=np.array(tau0),
        kind="damped_fourier",
        params={"s": s, "nu": float(nu), "omega": float(omega), "ts": float(ts)},
    )


def make_lqr_family(
    A: np.ndarray,
    B: np.ndarray,
    K: np.ndarray,
    tau0: Optional[Sequence[float]] = None,
) -> BasisFamily:
    """
    Family generated by the closed loop M = A + B K. With K the
    infinite-horizon LQR gain and no constraints, the optimal trajectories
    lie in its span.

    The trajectories starting at x0 are only spanned when x0 lies in the
    Krylov space of tau(0) under M, so tau(0) must be a cyclic vector. By
    default it is the sum of the columns of B, which is cyclic whenever
    (A, B) is controllable with a single input. Pass your own otherwise.
    """

    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    K = np.asarray(K, dtype=float).reshape(B.shape[1], A.shape[0])

    M = A + B @ K
    rho = float(np.max(np.abs(np.linalg.eigvals(M))))

    if rho >= 1.0:
        raise BasisError(
            f"A + B K must be stable to generate basis functions, its "
            f"spectral radius is {rho:.6g}"
        )

    if tau0 is None:
        seed = B.sum(axis=1)
    else:
        seed = np.asarray(tau0, dtype=float).reshape(-1)

    if seed.shape[0] != M.shape[0]:
        raise BasisError(f"tau0 must have {M.shape[0]} entries")

    krylov = np.column_stack(
        [np.linalg.matrix_power(M, j) @ seed for j in range(M.shape[0])]
    )

    if np.linalg.matrix_rank(krylov) < M.shape[0]:
        raise BasisError(
            "tau0 is not a cyclic vector of A + B K: the basis functions "
            "would be linearly dependent"
        )

    return BasisFamily(
        M=M,
        tau0=seed,
        kind="lqr",
        params={
            "A": A.tolist(),
            "B": B.tolist(),
            "K": K.tolist(),
            "tau0": seed.tolist(),
        },
    )


def block_union(families: Sequence[BasisFamily]) -> BasisFamily:
    """
    Superposition of several families, with a block-diagonal M and the seeds
    stacked in the same order.
    """

    families = list(families)

    if not families:
        raise BasisError("Cannot build the union of zero families")

    if len(families) == 1:
        return families[0]

    return BasisFamily(
        M=linalg.block_diag(*[f.M for f in families]),
        tau0=np.concatenate([f.tau0 for f in families]),
        kind="union",
        params={"members": [f for f in families]},
    )


def shift_family_cascade(first: BasisFamily, second: BasisFamily) -> BasisFamily:
    """
    Chain two families: the last function of `first` feeds the seed of
    `second` at the next step instead of both starting at k = 0.

    M = [[M_1, 0], [tau_2(0) e_last^T, M_2]] and tau(0) = (tau_1(0), 0). With
    a classic first member, the first samples are free and a smooth tail
    follows them.
    """

    s1, s2 = first.s, second.s
    M = np.zeros((s1 + s2, s1 + s2))
    M[:s1, :s1] = first.M
    M[s1:, s1:] = second.M
    M[s1:, s1 - 1] = second.tau0

    tau0 = np.concatenate([first.tau0, np.zeros(s2)])

    return BasisFamily(
        M=M,
        tau0=tau0,
        kind="cascade",
        params={"members": [first, second]},
    )
