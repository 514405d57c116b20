from dataclasses import dataclass
from typing import Iterator, Mapping, Optional

import numpy as np

from shiftmpc.basis import BasisFamily
from shiftmpc.core import HealthCheckFail, ShiftMpcError
from shiftmpc.utils import frozen


class AdmissibleSetError(ShiftMpcError):
    """
    Constraint set malformed or admissible horizon impossible to establish.
    """


def check_constraints(
    Cx: np.ndarray, Cu: np.ndarray, b: np.ndarray
) -> Iterator[HealthCheckFail]:
    """
    Requirements on g(x, u) = Cx x + Cu u - b <= 0:

    - 30001: Cx, Cu and b have the same number of rows
    - 30002: the origin is strictly inside the set (b > 0)
    - 30003: everything is finite
    """

    if not (Cx.shape[0] == Cu.shape[0] == b.shape[0]):
        yield HealthCheckFail(
            "30001",
            f"Cx has {Cx.shape[0]} rows, Cu {Cu.shape[0]} and b {b.shape[0]}",
        )
        return

    if np.any(b <= 0.0):
        rows = np.flatnonzero(b <= 0.0).tolist()
        yield HealthCheckFail(
            "30002",
            f"Rows {rows} have b <= 0: the origin must strictly satisfy "
            f"every constraint",
        )

    if not all(np.all(np.isfinite(a)) for a in (Cx, Cu, b)):
        yield HealthCheckFail("30003", "Constraint data must be finite")


def _rows(a, count: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)

    if a.ndim == 1:
        a = a.reshape(count, -1)

    return a


@dataclass(frozen=True, eq=False)
class AffineConstraintSet(object):
    """
    Rows g_i(x, u) = (Cx x + Cu u - b)_i <= 0. An empty set (n_c = 0) is
    allowed and means "unconstrained".
    """

    Cx: np.ndarray
    Cu: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        b = frozen(self.b).reshape(-1)
        b.setflags(write=False)
        Cx = frozen(_rows(self.Cx, b.shape[0]))
        Cu = frozen(_rows(self.Cu, b.shape[0]))

        failures = list(check_constraints(Cx, Cu, b))

        if failures:
            raise AdmissibleSetError("; ".join(f.reason for f in failures))

        object.__setattr__(self, "Cx", Cx)
        object.__setattr__(self, "Cu", Cu)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.Cx.shape[1]

    @property
    def m(self) -> int:
        return self.Cu.shape[1]

    @property
    def n_c(self) -> int:
        return self.b.shape[0]

    @classmethod
    def empty(cls, n: int, m: int) -> "AffineConstraintSet":
        return cls(np.zeros((0, n)), np.zeros((0, m)), np.zeros(0))

    @classmethod
    def from_bounds(
        cls,
        n: int,
        m: int,
        x_bounds: Optional[Mapping[int, float]] = None,
        u_bounds: Optional[Mapping[int, float]] = None,
    ) -> "AffineConstraintSet":
        """
        Symmetric box constraints |x_i| <= x_bounds[i], |u_j| <= u_bounds[j].
        Each bound produces two rows, upper one first.
        """

        Cx, Cu, b = [], [], []

        for target, width, bounds in ((Cx, n, x_bounds), (Cu, m, u_bounds)):
            other = Cu if target is Cx else Cx
            other_width = m if target is Cx else n

            for i, limit in sorted((bounds or {}).items()):
                i = int(i)

                if not 0 <= i < width:
                    raise AdmissibleSetError(f"Bound on index {i} out of range")

                for sign in (1.0, -1.0):
                    row = np.zeros(width)
                    row[i] = sign
                    target.append(row)
                    other.append(np.zeros(other_width))
                    b.append(float(limit))

        return cls(
            np.array(Cx).reshape(-1, n),
            np.array(Cu).reshape(-1, m),
            np.array(b),
        )

    def g(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """
        Constraint values; the point is admissible when all are <= 0.
        Works on (n,)/(m,) vectors and on (K, n)/(K, m) batches.
        """

        return x @ self.Cx.T + u @ self.Cu.T - self.b

    def stacked_rows(self, family: BasisFamily, start: int, count: int) -> np.ndarray:
        """
        Constraint rows acting on the parameters (eta_x, eta_u) for the time
        steps start .. start + count - 1, stacked k-major: row
        (k - start) * n_c + i holds g_i at time k.
        """

        s = family.s
        T = family.table(start + count)[start:]
        Rx = self.Cx[None, :, :, None] * T[:, None, None, :]
        Ru = self.Cu[None, :, :, None] * T[:, None, None, :]

        return np.concatenate(
            [
                Rx.reshape(count * self.n_c, self.n * s),
                Ru.reshape(count * self.n_c, self.m * s),
            ],
            axis=1,
        )

    def to_config(self):
        return {"Cx": self.Cx.tolist(), "Cu": self.Cu.tolist(), "b": self.b.tolist()}
