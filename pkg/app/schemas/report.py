"""Pydantic schemas for run diagnostics, convergence tables and manifests."""
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.experiment import ExperimentConfig


class StepReport(BaseModel):
    """
    Diagnostics recorded after every accepted time step.

    Attributes:
        step: Step index n + 1
        time: Time reached by the step
        energy_original: E(phi^{n+1})
        ln_r_scaled: Modified energy S * ln R^{n+1}
        xi: Consistency ratio R / exp(E / S)
        u_of_xi: Factor U_k(xi) applied to the predicted field
        lambda0: Relaxation parameter (RE-SAV only)
        dissipation: (G mu_bar, mu_bar)
        mass: Integral of phi^{n+1} over the domain
    """

    model_config = ConfigDict(allow_inf_nan=False, frozen=True)

    step: int = Field(..., ge=0)
    time: float
    energy_original: float
    ln_r_scaled: float
    xi: float
    u_of_xi: float
    lambda0: Optional[float] = Field(None, ge=0.0, le=1.0)
    dissipation: float = Field(..., ge=0.0)
    mass: float


class ConvergenceReport(BaseModel):
    """
    Errors against a fine-step reference and the observed orders between halvings.

    A rate is None when it is undefined (one of the two errors is zero).
    """

    dt_list: List[float]
    dt_ref: float
    errors: List[float]
    rates: List[Optional[float]]


class EmittedFile(BaseModel):
    """One artifact written by a run, with its SHA-256 checksum."""

    path: str
    sha256: str


class RunManifest(BaseModel):
    """Everything needed to audit a CLI invocation after the fact."""

    artifact_version: str
    command: str
    config: Dict
    timings: Dict[str, float] = Field(default_factory=dict)
    extras: Dict[str, float] = Field(default_factory=dict)
    files: List[EmittedFile] = Field(default_factory=list)


class ConvergenceRequest(BaseModel):
    """Request body for a convergence study over HTTP."""

    config: ExperimentConfig
    dt_list: List[float] = Field(..., min_length=2)
    dt_ref: float = Field(..., gt=0)


class SimulationResponse(BaseModel):
    """Summary and full trace of a run executed over HTTP."""

    steps: int
    final_time: float
    final_energy: float
    final_ln_r_scaled: float
    max_xi_deviation: float
    trace: List[StepReport]
