"""Modified asset exchange model: yard-sale exchange plus gamma-weighted growth."""

from maem.engine import (
    ModelParams,
    WealthState,
    advance,
    advance_unit,
    exchange_step,
    growth_shares,
    growth_step,
    init_state,
)
from maem.errors import ConfigError, DegenerateStateError, InsufficientDataError, MaemError
from maem.rng import PhiloxStream

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DegenerateStateError",
    "InsufficientDataError",
    "MaemError",
    "ModelParams",
    "PhiloxStream",
    "WealthState",
    "advance",
    "advance_unit",
    "exchange_step",
    "growth_shares",
    "growth_step",
    "init_state",
    "__version__",
]
