"""Saturated target-point path following for car-like vehicles: simulation and certification."""

from .controller import Gains, GainError, synthesize_gains
from .path import PathSpec, validate_h1
from .model import SpeedProfile
from .sim import SimConfig, InitialErrors, ReferencePose, run, sweep

__all__ = [
    "Gains", "GainError", "synthesize_gains", "PathSpec", "validate_h1", "SpeedProfile",
    "SimConfig", "InitialErrors", "ReferencePose", "run", "sweep",
]
__version__ = "0.1.0"
