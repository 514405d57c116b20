from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Dict, Optional, Text, Tuple

import numpy as np

from shiftmpc.conf import settings
from shiftmpc.core import ShiftMpcError
from shiftmpc.utils import frozen


class SolverError(ShiftMpcError):
    """
    The problem handed to a solver is malformed (inconsistent dimensions,
    non-symmetric Hessian, ...). Infeasibility and friends are not errors,
    they are reported through `QpSolution.status`.
    """


class Status(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITER = "max_iter"


@dataclass(frozen=True)
class Tolerances(object):
    primal: float = None
    dual: float = None
    max_iter: int = None

    def __post_init__(self):
        if self.primal is None:
            object.__setattr__(self, "primal", settings.QP_PRIMAL_TOL)

        if self.dual is None:
            object.__setattr__(self, "dual", settings.QP_DUAL_TOL)

        if self.max_iter is None:
            object.__setattr__(self, "max_iter", settings.QP_MAX_ITER)


def _matrix(a, cols: int) -> np.ndarray:
    if a is None:
        return frozen(np.zeros((0, cols)))

    return frozen(np.asarray(a, dtype=float).reshape(-1, cols))


def _vector(a, rows: int) -> np.ndarray:
    if a is None:
        return frozen(np.zeros(rows))

    return frozen(np.asarray(a, dtype=float).reshape(rows))


@dataclass(frozen=True, eq=False)
class QpProblem(object):
    """
    min 1/2 z^T H z + f^T z  s.t.  Aeq z = beq,  Ain z <= bin

    An LP is a QP with H = 0. All arrays are read-only.
    """

    H: np.ndarray
    f: Optional[np.ndarray] = None
    Aeq: Optional[np.ndarray] = None
    beq: Optional[np.ndarray] = None
    Ain: Optional[np.ndarray] = None
    bin: Optional[np.ndarray] = None

    def __post_init__(self):
        H = frozen(np.atleast_2d(self.H))

        if H.shape[0] != H.shape[1]:
            raise SolverError(f"H must be square, got {H.shape}")

        n = H.shape[0]

        if not np.allclose(H, H.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(H).max())):
            raise SolverError("H must be symmetric")

        f = _vector(self.f, n)
        Aeq = _matrix(self.Aeq, n)
        beq = _vector(self.beq, Aeq.shape[0])
        Ain = _matrix(self.Ain, n)
        bin_ = _vector(self.bin, Ain.shape[0])

        object.__setattr__(self, "H", H)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "Aeq", Aeq)
        object.__setattr__(self, "beq", beq)
        object.__setattr__(self, "Ain", Ain)
        object.__setattr__(self, "bin", bin_)

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def p(self) -> int:
        return self.Aeq.shape[0]

    @property
    def q(self) -> int:
        return self.Ain.shape[0]

    def objective(self, z: np.ndarray) -> float:
        return float(0.5 * z @ self.H @ z + self.f @ z)

    def with_beq(self, beq: np.ndarray) -> "QpProblem":
        """
        Same problem with another equality right-hand side. The matrices are
        shared, which lets the solver reuse its factorizations.
        """

        out = replace(self, beq=beq)

        for name in ("H", "f", "Aeq", "Ain", "bin"):
            object.__setattr__(out, name, getattr(self, name))

        return out


@dataclass(frozen=True, eq=False)
class QpSolution(object):
    z: np.ndarray
    status: Status
    objective: float
    eq_multipliers: np.ndarray
    in_multipliers: np.ndarray
    iterations: int
    active_set: Tuple[int, ...] = ()
    diagnostics: Dict[Text, Any] = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == Status.OPTIMAL


def kkt_residuals(problem: QpProblem, solution: QpSolution) -> Dict[Text, float]:
    """
    Independent certificate of a solution, computed from the problem data
    only (nothing from the solver internals):

    - primal_eq: |Aeq z - beq|_inf
    - primal_in: |(Ain z - bin)_+|_inf
    - dual: |H z + f + Aeq^T mu + Ain^T lambda|_inf
    - dual_sign: |(-lambda)_+|_inf
    - complementarity: max_i |lambda_i (Ain z - bin)_i|
    """

    z = solution.z
    mu = solution.eq_multipliers
    lam = solution.in_multipliers

    def norm(v):
        return float(np.max(np.abs(v))) if v.size else 0.0

    slack = problem.Ain @ z - problem.bin

    return {
        "primal_eq": norm(problem.Aeq @ z - problem.beq),
        "primal_in": norm(np.maximum(slack, 0.0)),
        "dual": norm(
            problem.H @ z + problem.f + problem.Aeq.T @ mu + problem.Ain.T @ lam
        ),
        "dual_sign": norm(np.maximum(-lam, 0.0)),
        "complementarity": norm(lam * slack),
    }


def dump_problem(problem: QpProblem, path: Text) -> None:
    """
    Write a problem into a plain-text file that any external solver (or a
    person) can read back: one `# name rows cols` header per matrix followed
    by its rows, with full float precision.
    """

    with open(path, "w", encoding="utf-8") as f:
        f.write("# min 1/2 z'Hz + f'z  s.t.  Aeq z = beq, Ain z <= bin\n")

        for name in ("H", "f", "Aeq", "beq", "Ain", "bin"):
            a = np.atleast_2d(getattr(problem, name))

            if name in ("f", "beq", "bin"):
                a = a.reshape(-1, 1)

            f.write(f"# {name} {a.shape[0]} {a.shape[1]}\n")
            np.savetxt(f, a, fmt="%.17g")


def load_problem(path: Text) -> QpProblem:
    """
    Read back a file written by `dump_problem`.
    """

    parts = {}

    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()

    i = 1

    while i < len(lines):
        _, name, rows, cols = lines[i].split()
        rows, cols = int(rows), int(cols)
        data = [list(map(float, lines[i + 1 + r].split())) for r in range(rows)]
        parts[name] = np.array(data, dtype=float).reshape(rows, cols)
        i += 1 + rows

    n = parts["H"].shape[1]

    return QpProblem(
        H=parts["H"].reshape(n, n),
        f=parts["f"].reshape(-1),
        Aeq=parts["Aeq"].reshape(-1, n),
        beq=parts["beq"].reshape(-1),
        Ain=parts["Ain"].reshape(-1, n),
        bin=parts["bin"].reshape(-1),
    )
