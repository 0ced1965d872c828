"""Twin-field QKD key rates with two-, three- and four-decoy yield bounds."""

from .core import (
    ChannelParams,
    DomainError,
    GainTable,
    IntensitySet,
    KeyRatePoint,
    ProtocolParams,
    UsageError,
    YieldBoundSet,
)
from .optimize import FluctuationSpec, Scenario, max_tolerated_loss, maximize_rate, sweep, worst_case_rate
from .security import key_rate, yield_bounds

__version__ = "0.1.0"

__all__ = [
    "ChannelParams", "DomainError", "FluctuationSpec", "GainTable", "IntensitySet", "KeyRatePoint",
    "ProtocolParams", "Scenario", "UsageError", "YieldBoundSet", "key_rate", "max_tolerated_loss",
    "maximize_rate", "sweep", "worst_case_rate", "yield_bounds",
]
