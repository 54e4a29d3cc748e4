"""Meta distribution of the SIR in Poisson cellular networks under fractional power control."""

from .core import (
    Direction,
    LinkGeometry,
    MomentValue,
    PowerModel,
    SystemConfig,
    conditional_ps,
    transmit_power,
    validate_config,
)

__version__ = "0.1.0"

__all__ = [
    "Direction",
    "LinkGeometry",
    "MomentValue",
    "PowerModel",
    "SystemConfig",
    "conditional_ps",
    "transmit_power",
    "validate_config",
    "__version__",
]
