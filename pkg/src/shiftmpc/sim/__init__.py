from .closed_loop import Controller, DisturbanceSpec, make_rng, run_closed_loop
from .experiments import (
    EXPERIMENT_IC,
    EXPERIMENT_ROBUSTNESS,
    PendulumSetup,
    build_pendulum_setup,
    parallel_map,
    random_initial_conditions,
    robustness_sweep,
    sweep_nu,
    sweep_s,
    write_table_csv,
)
from .log import (
    CSV_COLUMNS,
    ClosedLoopLog,
    PlantDiverged,
    SimulationError,
    StepRecord,
)
from .monitors import feasibility_transitions, lyapunov_violations, swing_up_success
