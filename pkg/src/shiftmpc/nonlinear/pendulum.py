"""
Pendulum on a cart, driven by a DC motor through a belt.

State (x_c, x_c', phi, phi'), phi = 0 is the upright position and the
regulation target, phi = pi the hanging one. The input is the motor
voltage. Friction is not modelled.
"""
from dataclasses import asdict, dataclass

import numpy as np

from shiftmpc.admissible import AffineConstraintSet
from shiftmpc.basis import (
    BasisFamily,
    block_union,
    make_classic,
    make_laguerre,
    orthonormalize,
)

from .plant import NlpError, Rk4Plant

# Running cost 20 x_c^2 + 2 x_c'^2 + 50 phi^2 + 2 phi'^2 + 10 u^2
PENDULUM_Q = np.diag([20.0, 2.0, 50.0, 2.0])
PENDULUM_R = np.array([[10.0]])

RAIL_HALF_LENGTH = 0.45
VOLTAGE_LIMIT = 24.0

HANGING = np.array([0.0, 0.0, np.pi, 0.0])


@dataclass(frozen=True)
class PendulumParams(object):
    m: float = 0.17
    M: float = 0.74
    l: float = 0.30
    k_m: float = 0.011
    k_n: float = 20.62
    R_m: float = 0.30
    r_zr: float = 0.018
    g: float = 9.81

    def __post_init__(self):
        bad = [k for k, v in asdict(self).items() if not v > 0]

        if bad:
            raise NlpError(f"Pendulum parameters must be positive: {bad}")

    @property
    def alpha(self) -> float:
        """
        Force per volt.
        """

        return self.k_m / (self.r_zr * self.R_m)

    @property
    def beta(self) -> float:
        """
        Back-EMF voltage per m/s of cart speed.
        """

        return 1.0 / (self.k_n * self.r_zr)


class PendulumPlant(Rk4Plant):
    n = 4
    m = 1

    def __init__(self, params: PendulumParams = PendulumParams(), ts: float = 0.02):
        if not ts > 0:
            raise NlpError(f"Sampling time must be positive, got {ts}")

        self.params = params
        self.ts = float(ts)

    def ode(self, X, U):
        p = self.params
        v, phi, w = X[:, 1], X[:, 2], X[:, 3]
        s, c = np.sin(phi), np.cos(phi)
        F = p.alpha * (U[:, 0] - p.beta * v)
        D = p.M / p.m + s**2

        acc = (F / p.m - p.g * s * c + p.l * w**2 * s) / D
        ang = (
            -F * c / (p.m * p.l) + (p.M + p.m) * p.g * s / (p.m * p.l) - w**2 * s * c
        ) / D

        return np.column_stack([v, acc, w, ang])

    def ode_jacobians(self, X, U):
        p = self.params
        K = X.shape[0]
        v, phi, w = X[:, 1], X[:, 2], X[:, 3]
        s, c = np.sin(phi), np.cos(phi)
        F = p.alpha * (U[:, 0] - p.beta * v)
        D = p.M / p.m + s**2
        dD = 2.0 * s * c
        ml = p.m * p.l

        num_acc = F / p.m - p.g * s * c + p.l * w**2 * s
        num_ang = -F * c / ml + (p.M + p.m) * p.g * s / ml - w**2 * s * c

        Fx = np.zeros((K, 4, 4))
        Fu = np.zeros((K, 4, 1))

        Fx[:, 0, 1] = 1.0
        Fx[:, 2, 3] = 1.0

        Fx[:, 1, 1] = -p.alpha * p.beta / (p.m * D)
        Fx[:, 1, 2] = (
            (-p.g * (c**2 - s**2) + p.l * w**2 * c) * D - num_acc * dD
        ) / D**2
        Fx[:, 1, 3] = 2.0 * p.l * w * s / D
        Fu[:, 1, 0] = p.alpha / (p.m * D)

        Fx[:, 3, 1] = p.alpha * p.beta * c / (ml * D)
        Fx[:, 3, 2] = (
            (F * s / ml + (p.M + p.m) * p.g * c / ml - w**2 * (c**2 - s**2)) * D
            - num_ang * dD
        ) / D**2
        Fx[:, 3, 3] = -2.0 * w * s * c / D
        Fu[:, 3, 0] = -p.alpha * c / (ml * D)

        return Fx, Fu


def pendulum_plant(params: PendulumParams = PendulumParams(), ts: float = 0.02):
    return PendulumPlant(params, ts)


def pendulum_constraints() -> AffineConstraintSet:
    """
    Rail |x_c| <= 0.45 m and voltage |u| <= 24 V.
    """

    return AffineConstraintSet.from_bounds(
        4, 1, x_bounds={0: RAIL_HALF_LENGTH}, u_bounds={0: VOLTAGE_LIMIT}
    )


def pendulum_family(ts: float = 0.02) -> BasisFamily:
    """
    12 free samples for the bang-bang part of the swing-up plus 7 fast
    Laguerre functions (nu = 14 1/s) for the catch, orthonormalized.
    """

    return orthonormalize(block_union([make_classic(12), make_laguerre(7, 14.0, ts)]))


def wrap_angle(phi):
    """
    Angle brought back to [-pi, pi).
    """

    return (np.asarray(phi) + np.pi) % (2.0 * np.pi) - np.pi
