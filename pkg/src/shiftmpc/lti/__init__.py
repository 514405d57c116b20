from .assembly import (
    assemble,
    bind_initial_state,
    check_regularity,
    cost_hessian,
    dynamics_residual,
    equality_matrix,
    split,
)
from .controller import LtiController, MpcStepResult
from .problem import (
    LtiProblem,
    MpcError,
    MpcInfeasible,
    MpcSolverFailure,
    check_problem,
    dlqr,
    quadruple_integrator,
    zoh,
)
