"""
Admissible horizon of a family under affine constraints.

Since the parametrized trajectories are generated by an autonomous linear
system, satisfying the constraints at k = 0 .. N_max is enough to satisfy
them forever, provided N_max is large enough. N_max is found by increasing
j until, for every constraint row, the largest value it can take at j + 1
over all parameters satisfying the constraints at 0 .. j is <= 0.

Once that holds for j, it holds for every later index too: a parameter
satisfying the constraints at 0 .. j has a shifted version that does as
well, and evaluating the shifted one at j + 1 gives the original one at
j + 2. That is why the search may start at any index.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Text, Tuple

import numpy as np
import ujson

from shiftmpc.basis import BasisFamily, dynamics_matrix
from shiftmpc.conf import settings
from shiftmpc.solvers import QpProblem, Status, solve_lp
from shiftmpc.utils import to_jsonable

from .constraints import AdmissibleSetError, AffineConstraintSet

logger = logging.getLogger("shiftmpc.admissible")


@dataclass
class NmaxResult(object):
    """
    Outcome of `compute_nmax()`. `certificates` holds the final J_i, and
    `table` one `(j, [J_1, ..., J_nc])` entry per iteration. `nmax` is None
    when the cap was reached.
    """

    nmax: Optional[int]
    iterations: int
    certificates: List[float]
    start: int
    cap: int
    tol: float
    family_hash: Text
    constraints: Dict[Text, Any]
    coupled: bool = False
    table: List[Tuple[int, List[float]]] = field(default_factory=list)

    def certificate(self) -> Dict[Text, Any]:
        return to_jsonable(
            {
                "schema_version": settings.SCHEMA_VERSION,
                "family_hash": self.family_hash,
                "constraints": self.constraints,
                "nmax": self.nmax,
                "cap_reached": self.nmax is None,
                "start": self.start,
                "cap": self.cap,
                "tol": self.tol,
                "coupled_dynamics": self.coupled,
                "iterations": self.iterations,
                "J": [{"j": j, "values": values} for j, values in self.table],
            }
        )

    def write_certificate(self, path: Text) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(ujson.dumps(self.certificate(), indent=2))


class NmaxCapReached(AdmissibleSetError):
    """
    No admissible horizon found below the cap. The partial result (with its
    J table) is attached.
    """

    def __init__(self, result: NmaxResult):
        super().__init__(
            f"N_max not established up to j = {result.cap} "
            f"(last J = {result.certificates})"
        )
        self.result = result


def inner_lp(
    family: BasisFamily,
    cons: AffineConstraintSet,
    j: int,
    i: int,
    dynamics: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> QpProblem:
    """
    LP whose optimum is -(J_i + b_i): maximize row i of the constraints at
    time j + 1 subject to all rows at 0 .. j. Parameter columns that play
    no role are removed, unless the dynamics couple them.
    """

    Ain = cons.stacked_rows(family, 0, j + 1)
    bin_ = np.tile(cons.b, j + 1)
    objective = cons.stacked_rows(family, j + 1, 1)[i]

    if dynamics is None:
        keep = np.any(Ain != 0.0, axis=0) | (objective != 0.0)
        Aeq = None
    else:
        keep = np.ones(Ain.shape[1], dtype=bool)
        Aeq = dynamics_matrix(family, *dynamics)

    size = int(np.sum(keep))

    return QpProblem(
        H=np.zeros((size, size)),
        f=-objective[keep],
        Aeq=None if Aeq is None else Aeq[:, keep],
        beq=None if Aeq is None else np.zeros(Aeq.shape[0]),
        Ain=Ain[:, keep],
        bin=bin_,
    )


def compute_nmax(
    family: BasisFamily,
    cons: AffineConstraintSet,
    n: Optional[int] = None,
    m: Optional[int] = None,
    j_cap: Optional[int] = None,
    start: Optional[int] = None,
    dynamics: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> NmaxResult:
    """
    Smallest j >= start such that no parameter satisfying the constraints at
    k = 0 .. j violates them at j + 1 (and therefore at any later time).

    :param family: basis family shared by states and inputs
    :param cons: constraints g(x, u) <= 0
    :param n: state dimension, defaults to the one of `cons`
    :param m: input dimension, defaults to the one of `cons`
    :param j_cap: give up after this index (default from settings)
    :param start: first index tried, (n + m) s by default
    :param dynamics: optional (A, B) restricting parameters to trajectories
        of x(k + 1) = A x(k) + B u(k)
    :raise NmaxCapReached: when j_cap is exceeded
    """

    n = cons.n if n is None else n
    m = cons.m if m is None else m

    if (n, m) != (cons.n, cons.m):
        raise AdmissibleSetError(
            f"Constraints act on n={cons.n}, m={cons.m} but n={n}, m={m} was given"
        )

    size = (n + m) * family.s

    if start is None:
        start = size

    if j_cap is None:
        j_cap = settings.NMAX_CAP_FACTOR * size

    if start < 0 or j_cap < start:
        raise AdmissibleSetError(f"Invalid search range start={start}, cap={j_cap}")

    if family.spectral_radius >= 1.0:
        raise AdmissibleSetError("The family must decay to have an admissible horizon")

    scale = max(1.0, float(np.max(np.abs(cons.b)))) if cons.n_c else 1.0
    tol = settings.NMAX_TOL * scale

    result = NmaxResult(
        nmax=None,
        iterations=0,
        certificates=[],
        start=start,
        cap=j_cap,
        tol=tol,
        family_hash=family.hash,
        constraints=cons.to_config(),
        coupled=dynamics is not None,
    )

    j = start

    while j <= j_cap:
        values = []

        for i in range(cons.n_c):
            sol = solve_lp(inner_lp(family, cons, j, i, dynamics))

            if sol.status == Status.UNBOUNDED:
                logger.warning(
                    "Unbounded LP for constraint %d at j = %d, counted as J = +inf",
                    i,
                    j,
                )
                values.append(np.inf)
            elif sol.status == Status.OPTIMAL:
                values.append(-sol.objective - float(cons.b[i]))
            else:
                raise AdmissibleSetError(
                    f"LP for constraint {i} at j = {j} ended with {sol.status.value}"
                )

        result.iterations += 1
        result.table.append((j, values))
        result.certificates = values
        logger.debug("j = %d, max J = %s", j, max(values, default=-np.inf))

        if all(v <= tol for v in values):
            result.nmax = j
            logger.info("N_max = %d after %d iterations", j, result.iterations)
            return result

        j += 1

    raise NmaxCapReached(result)
