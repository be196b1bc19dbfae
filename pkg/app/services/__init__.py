"""Numerical and I/O services."""

from app.services.harness import compare, convergence_study, make_ic, observed_rate, run
from app.services.presets import PRESET_NAMES, get_preset

__all__ = [
    "compare",
    "convergence_study",
    "make_ic",
    "observed_rate",
    "run",
    "PRESET_NAMES",
    "get_preset",
]
