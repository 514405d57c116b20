from ._base import (
    EXIT_BAD_CONFIG,
    EXIT_CAP_REACHED,
    EXIT_FAILURE,
    EXIT_OK,
    main,
    make_parser,
)
from .config import ConfigError, ExperimentConfig, config_schema, load_config
