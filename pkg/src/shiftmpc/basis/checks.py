from typing import Any, Dict, Iterator, Text

import numpy as np

from shiftmpc.conf import settings
from shiftmpc.core import HealthCheckFail

from .family import BasisFamily, gram


def decay_envelope(family: BasisFamily, k_max: int) -> np.ndarray:
    """
    Spectral norms |M^k|_2 for k = 0 .. k_max. Bounds the decay of any
    trajectory: |eval(eta, k)| <= |M^k|_2 |eta| for a single channel.
    """

    out = np.empty(k_max + 1)
    P = np.eye(family.s)

    for k in range(k_max + 1):
        out[k] = np.linalg.norm(P, 2)
        P = family.M @ P

    return out


def gram_condition(family: BasisFamily) -> float:
    """
    Condition number of the Gram matrix. Large values mean nearly dependent
    basis functions and a badly scaled QP.
    """

    eig = np.linalg.eigvalsh(gram(family))

    if eig[0] <= 0.0:
        return np.inf

    return float(eig[-1] / eig[0])


def check_family(family: BasisFamily) -> Iterator[HealthCheckFail]:
    """
    Verify the two assumptions the whole approach rests on:

    - 10001: the functions decay (spectral radius of M below 1)
    - 10002: they are linearly independent (Gram matrix positive definite)
    - 10003: the shift relation holds numerically
    """

    rho = family.spectral_radius

    if rho >= 1.0:
        yield HealthCheckFail(
            "10001",
            f"Spectral radius of M is {rho:.6g}, basis functions do not decay.",
        )
        return

    J = gram(family)
    eig_min = float(np.min(np.linalg.eigvalsh(J)))

    if eig_min <= 1e-13 * max(1.0, float(np.max(np.abs(J)))):
        yield HealthCheckFail(
            "10002",
            f"Gram matrix is not positive definite (smallest eigenvalue "
            f"{eig_min:.3g}), basis functions are linearly dependent.",
        )

    T = family.table(min(202, 2 * family.s + 50))
    err = float(np.max(np.abs(T[1:] - T[:-1] @ family.M.T)))

    if err > 1e3 * settings.BASIS_TOLERANCE * max(1.0, float(np.max(np.abs(T)))):
        yield HealthCheckFail(
            "10003", f"Shift relation violated by {err:.3g} on the first samples."
        )


def inspect_family(family: BasisFamily, k_max: int = 200) -> Dict[Text, Any]:
    """
    Summary of a family: size, decay, conditioning and assumption verdicts.
    """

    checks = list(check_family(family))
    codes = {c.code for c in checks}
    out = {
        "kind": family.kind,
        "s": family.s,
        "hash": family.hash,
        "spectral_radius": family.spectral_radius,
        "a2_decaying": "10001" not in codes,
        "a1_independent": "10001" not in codes and "10002" not in codes,
        "failures": [{"code": c.code, "reason": c.reason} for c in checks],
    }

    if out["a2_decaying"]:
        J = gram(family)
        eig = np.linalg.eigvalsh(J)
        out["gram_min_eig"] = float(eig[0])
        out["gram_condition"] = gram_condition(family)
        out["decay_envelope"] = decay_envelope(family, k_max)[
            [k for k in (0, 1, 10, 50, 100, 200) if k <= k_max]
        ].tolist()

    return out
