from .lp import solve_lp
from .problem import (
    QpProblem,
    QpSolution,
    SolverError,
    Status,
    Tolerances,
    dump_problem,
    kkt_residuals,
    load_problem,
)
from .qp import QpSolver, solve_qp
