"""Core application configuration and utilities."""

from app.core.config import settings
from app.core.errors import (
    BaselineSolveError,
    BlowUpError,
    ConfigError,
    EnergyOverflowError,
    SimulationError,
    SingularOperatorError,
    SnapshotFormatError,
)

__all__ = [
    "settings",
    "BaselineSolveError",
    "BlowUpError",
    "ConfigError",
    "EnergyOverflowError",
    "SimulationError",
    "SingularOperatorError",
    "SnapshotFormatError",
]
