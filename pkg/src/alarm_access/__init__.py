"""Achievability bounds, spectral efficiency and minimum-power operating points
for alarm random access on the Gaussian multiple-access channel."""

from .bounds import (
    BoundEvaluator,
    BoundSet,
    ChannelConfig,
    ExponentSearchConfig,
    eps_bounds,
    p0,
)
from .model import (
    CorrelationModel,
    joint_entropy,
    mean_entropy_per_active_device,
    spectral_efficiency,
)
from .optimizer import (
    OperatingPoint,
    ReliabilityTargets,
    min_power,
    min_power_uncorrelated,
    sweep_tradeoff,
)
from .simulator import TrialTally, run_campaign

__all__ = [
    "BoundEvaluator", "BoundSet", "ChannelConfig", "CorrelationModel", "ExponentSearchConfig",
    "OperatingPoint", "ReliabilityTargets", "TrialTally", "eps_bounds", "joint_entropy",
    "mean_entropy_per_active_device", "min_power", "min_power_uncorrelated", "p0",
    "run_campaign", "spectral_efficiency", "sweep_tradeoff",
]

__version__ = "0.1.0"
