from .companion import characteristic_coefficients, companion_form, lifted_state
from .constraints import AdmissibleSetError, AffineConstraintSet, check_constraints
from .nmax import NmaxCapReached, NmaxResult, compute_nmax, inner_lp
