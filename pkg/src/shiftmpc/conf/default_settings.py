import os

# Are we in debug mode?
DEBUG = os.getenv("DEBUG") == "yes"

# Root logging level used by the command line
LOG_LEVEL = "DEBUG" if DEBUG else os.getenv("SHIFTMPC_LOG_LEVEL", "INFO")

# Full-scale studies (100 initial conditions times 2000 steps, full grids)
# take minutes to hours. They only run in the test suite when this is set.
RUN_SLOW_EXPERIMENTS = os.getenv("SHIFTMPC_SLOW") == "yes"

# Sentry configuration. Left empty, nothing gets reported.
SENTRY_DSN = os.getenv("SENTRY_DSN")

# Where the command line writes its per-run directories
OUTPUT_DIR = "runs"

# Number of worker processes for sweeps. None means one per core.
WORKERS = None

# Version of the JSON documents emitted (certificates, summaries, configs)
SCHEMA_VERSION = 1

# --- Basis functions ---

# Above this size the Gram matrix is not obtained through the Kronecker
# (vectorized) Lyapunov solve anymore, which needs s^2 x s^2 storage.
GRAM_DIRECT_MAX_SIZE = 64

# Tolerance on the shift property and on the orthonormality of a family
BASIS_TOLERANCE = 1e-10

# --- QP / LP solvers ---

QP_PRIMAL_TOL = 1e-8
QP_DUAL_TOL = 1e-8

# Budget of active-set changes for a single QP
QP_MAX_ITER = 5000

# Added to the reduced Hessian when it is not numerically positive definite
QP_REGULARIZATION = 1e-10

# Singular values below this (relative to the largest) count as zero when
# eliminating the equality constraints
QP_RANK_TOL = 1e-10

LP_PIVOT_TOL = 1e-9
LP_MAX_PIVOTS = 50000

# After this many consecutive degenerate pivots the simplex switches from
# Dantzig's rule to Bland's rule until progress is made again
LP_BLAND_AFTER = 20

# --- N_max ---

# J_i <= NMAX_TOL * max(1, |b|_inf) counts as J_i <= 0
NMAX_TOL = 1e-9

# Default cap on j is NMAX_CAP_FACTOR * (n + m) * s
NMAX_CAP_FACTOR = 50

# --- LTI MPC ---

# Relative singular-value threshold for the regularity (rank) check
REGULARITY_RANK_TOL = 1e-9

# --- Nonlinear MPC ---

# Truncation of the Galerkin sum
GALERKIN_TRUNCATION = 150

# Warn when rho(M)^K_trunc is above this
GALERKIN_DECAY_WARNING = 1e-8

# Central difference step for the Jacobian fallback
FD_STEP = 1e-6

SQP_COLD_MAX_ITER = 100
SQP_WARM_MAX_ITER = 8
SQP_TOL = 1e-6
SQP_FEASIBILITY_TOL = 1e-6
SQP_PENALTY_FACTOR = 10.0
SQP_BACKTRACK = 0.5
SQP_MAX_BACKTRACKS = 20
SQP_ARMIJO = 1e-4

# When a linearized problem is infeasible, the equality and inequality rows
# get l1 slacks priced at this multiple of the largest cost Hessian entry.
# The slacks also get a small curvature (same relative scale) so the
# subproblem stays strictly convex.
SQP_ELASTIC_PENALTY = 1e4
SQP_ELASTIC_CURVATURE = 1e-6

# The elastic step has to cut the linearized infeasibility by this fraction,
# otherwise the iterate is a stationary point of the infeasibility.
SQP_ELASTIC_MIN_DECREASE = 1e-3

# --- Simulation harness ---

# Scale of the state disturbance, per unit of n(k):
# 0.02 m, 0.005 m/s, 1 deg, 0.5 deg/s
DISTURBANCE_SCALE = [0.02, 0.005, 0.017453292519943295, 0.008726646259971648]

# Swing-up success: the pendulum stays within these bounds for
# SWING_UP_HOLD seconds, and the cart never leaves the rail.
SWING_UP_ANGLE = 0.08726646259971647  # 5 deg
SWING_UP_RATE = 0.5235987755982988  # 30 deg/s
SWING_UP_HOLD = 0.5
SWING_UP_RAIL = 0.45

# Closed loop considered converged below this state norm
CONVERGENCE_NORM = 1e-3

# Independent swing-ups per disturbance amplitude
ROBUSTNESS_RUNS = 10
