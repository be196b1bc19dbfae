"""Pydantic schemas for configuration, diagnostics and request/response validation."""

from app.schemas.experiment import (
    AllenCahn,
    BuiltinModel,
    CahnHilliard,
    CircleArray,
    CosCos,
    Crystallites,
    ExperimentConfig,
    GridSpec,
    InitialCondition,
    Patch,
    RandomUniform,
    StabilizedCahnHilliard,
    SwiftHohenberg,
)
from app.schemas.report import (
    ConvergenceReport,
    ConvergenceRequest,
    EmittedFile,
    RunManifest,
    SimulationResponse,
    StepReport,
)

__all__ = [
    "AllenCahn",
    "BuiltinModel",
    "CahnHilliard",
    "CircleArray",
    "CosCos",
    "Crystallites",
    "ExperimentConfig",
    "GridSpec",
    "InitialCondition",
    "Patch",
    "RandomUniform",
    "StabilizedCahnHilliard",
    "SwiftHohenberg",
    "ConvergenceReport",
    "ConvergenceRequest",
    "EmittedFile",
    "RunManifest",
    "SimulationResponse",
    "StepReport",
]
