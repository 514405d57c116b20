import numpy as np

from shiftmpc.basis import BasisFamily, ParamVector, trajectory

from .constraints import AdmissibleSetError


def characteristic_coefficients(family: BasisFamily) -> np.ndarray:
    """
    Coefficients c_0 .. c_{s-1} of M^s = sum_j c_j M^j (Cayley-Hamilton).
    """

    poly = np.real(np.poly(family.M))
    s = family.s

    return np.array([-poly[s - j] for j in range(s)])


def companion_form(family: BasisFamily, d: int) -> np.ndarray:
    """
    Autonomous system followed by any d-channel trajectory of the family.
    The state is the window (z(k), z(k + 1), ..., z(k + s - 1)) stacked
    time-major, and the last block row applies z(k + s) = sum_j c_j z(k + j).

    This is for analysis only, admissible horizons are computed from M and
    tau directly.
    """

    s = family.s
    C = np.eye(s, k=1)
    C[s - 1] = characteristic_coefficients(family)

    return np.kron(C, np.eye(d))


def lifted_state(eta: ParamVector, family: BasisFamily, d: int) -> np.ndarray:
    """
    Initial state of `companion_form()` for a parameter vector.
    """

    if eta.channels != d:
        raise AdmissibleSetError(f"Expected {d} channels, got {eta.channels}")

    return trajectory(eta, family, family.s).reshape(-1)
