"""Exception hierarchy shared by the solver services, the CLI and the API."""
from typing import Optional


class ConfigError(ValueError):
    """Invalid experiment parameters or a malformed configuration file."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SnapshotFormatError(ValueError):
    """A snapshot file does not follow the binary layout."""


class SimulationError(RuntimeError):
    """Base class for numerical failures during a run."""


class SingularOperatorError(SimulationError):
    """The shifted linear operator has a zero or non-finite mode."""


class EnergyOverflowError(SimulationError):
    """Energy or field values became non-finite."""


class BlowUpError(SimulationError):
    """The exponent ln R - E/S left the admissible window."""


class BaselineSolveError(SimulationError):
    """The scalar equation of the traditional E-SAV step did not converge."""
