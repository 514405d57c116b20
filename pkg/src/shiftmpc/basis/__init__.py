from .checks import check_family, decay_envelope, gram_condition, inspect_family
from .constructors import (
    block_union,
    make_classic,
    make_damped_fourier,
    make_laguerre,
    make_lqr_family,
    shift_family_cascade,
)
from .family import (
    BasisError,
    BasisFamily,
    GramMatrix,
    ParamVector,
    dynamics_matrix,
    evaluate,
    gram,
    initial_value_matrix,
    orthonormal_change,
    orthonormalize,
    shift,
    trajectory,
    truncated_gram,
)
from .serialize import family_from_config, family_to_config
