from .controller import NonlinearController
from .galerkin import galerkin_residual, project_trajectory, residual_jacobian
from .guess import guess_parameters, load_guess_csv, save_guess_csv, swing_up_guess
from .pendulum import (
    HANGING,
    PENDULUM_Q,
    PENDULUM_R,
    RAIL_HALF_LENGTH,
    VOLTAGE_LIMIT,
    PendulumParams,
    PendulumPlant,
    pendulum_constraints,
    pendulum_family,
    pendulum_plant,
    wrap_angle,
)
from .plant import (
    LinearPlant,
    NlpError,
    NonlinearPlant,
    Rk4Plant,
    finite_difference_jacobians,
)
from .sqp import NlpStepResult, NlpSubproblemInfeasible, QuadraticCost, solve_nlp
