"""Pydantic schemas describing models, initial conditions and experiments."""
import math
from typing import Annotated, List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, model_validator


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class AllenCahn(_Strict):
    """L2 gradient flow of the Ginzburg-Landau energy (G = I)."""

    kind: Literal["allen_cahn"] = "allen_cahn"
    epsilon: float = Field(..., gt=0, description="Interface width parameter")


class CahnHilliard(_Strict):
    """H^-1 gradient flow of the Ginzburg-Landau energy (G = -Laplacian)."""

    kind: Literal["cahn_hilliard"] = "cahn_hilliard"
    epsilon: float = Field(..., gt=0, description="Interface width parameter")


class StabilizedCahnHilliard(_Strict):
    """Cahn-Hilliard with L = -eps^2 Laplacian + beta I and a shifted double well."""

    kind: Literal["stabilized_cahn_hilliard"] = "stabilized_cahn_hilliard"
    epsilon: float = Field(..., gt=0, description="Interface width parameter")
    beta: float = Field(..., ge=0, description="Stabilization constant moved into L")


class SwiftHohenberg(_Strict):
    """Swift-Hohenberg / phase field crystal model with quadratic-cubic nonlinearity."""

    kind: Literal["swift_hohenberg"] = "swift_hohenberg"
    epsilon: float = Field(..., gt=0, description="Undercooling parameter")
    g: float = Field(0.0, ge=0, description="Quadratic nonlinearity strength")


BuiltinModel = Annotated[
    Union[AllenCahn, CahnHilliard, StabilizedCahnHilliard, SwiftHohenberg],
    Field(discriminator="kind"),
]


class CosCos(_Strict):
    """phi0 = amplitude * cos(x) cos(y)."""

    kind: Literal["coscos"] = "coscos"
    amplitude: float = Field(0.5, description="Amplitude of the product mode")


class CircleArray(_Strict):
    """Rectangular array of circles, background - sum tanh((r - r0) / (sqrt(2) eps))."""

    kind: Literal["circle_array"] = "circle_array"
    n_rows: int = Field(9, gt=0)
    n_cols: int = Field(9, gt=0)
    spacing: float = Field(0.2, gt=0, description="Center spacing; centers at spacing * i, i >= 1")
    r0: float = Field(0.085, gt=0, description="Circle radius")
    eps: float = Field(0.01, gt=0, description="Interface width")
    background: float = Field(80.0, description="Constant the tanh sum is subtracted from")


class RandomUniform(_Strict):
    """mean + amplitude * u with u uniform on [-1, 1], corrected to zero sample mean."""

    kind: Literal["random_uniform"] = "random_uniform"
    mean: float = 0.07
    amplitude: float = Field(0.07, ge=0)


class Patch(_Strict):
    """Axis-aligned square patch holding one crystallite."""

    cx: float
    cy: float
    half_width: float = Field(20.0, gt=0)
    theta: float = Field(0.0, description="Lattice orientation in radians")


class Crystallites(_Strict):
    """Uniform density phibar with one-mode triangular crystallites inside square patches."""

    kind: Literal["crystallites"] = "crystallites"
    phibar: float = 0.285
    c: float = Field(0.446, gt=0)
    q: float = Field(0.66, gt=0)
    patches: List[Patch] = Field(default_factory=list)


InitialCondition = Annotated[
    Union[CosCos, CircleArray, RandomUniform, Crystallites],
    Field(discriminator="kind"),
]


class GridSpec(_Strict):
    """Periodic rectangle [0, lx) x [0, ly) with nx x ny Fourier modes."""

    lx: float = Field(..., gt=0)
    ly: float = Field(..., gt=0)
    nx: int = Field(..., ge=2)
    ny: int = Field(..., ge=2)

    @model_validator(mode="after")
    def _even_modes(self) -> "GridSpec":
        if self.nx % 2 or self.ny % 2:
            raise ValueError(f"mode counts must be even, got nx={self.nx}, ny={self.ny}")
        return self


SchemeName = Literal["esav", "resav", "traditional_esav"]


class ExperimentConfig(_Strict):
    """
    One simulation: model, grid, scheme and time horizon.

    Defaults follow the documented presets: RE-SAV, BDF2, S = 1, kappa = 1.
    """

    model: BuiltinModel
    grid: GridSpec
    scheme: SchemeName = "resav"
    order: int = Field(2, ge=1, le=4, description="BDF order k")
    dt: float = Field(..., gt=0)
    t_end: float = Field(..., gt=0)
    s_scale: float = Field(1.0, gt=0, description="Exponential scaling constant S")
    kappa: float = Field(1.0, ge=0, le=1, description="Relaxation parameter")
    ic: InitialCondition
    seed: int = Field(0, ge=0)
    snapshot_times: List[float] = Field(default_factory=list)
    output_dir: Optional[str] = None
    dealias: bool = False
    startup_substeps: int = Field(1, ge=1, description="Substeps per step for the BDF start-up ramp")

    @model_validator(mode="after")
    def _consistent(self) -> "ExperimentConfig":
        if self.t_end < self.dt:
            raise ValueError(f"t_end={self.t_end} is shorter than dt={self.dt}")
        for t in self.snapshot_times:
            if not (0.0 <= t <= self.t_end) or not math.isfinite(t):
                raise ValueError(f"snapshot time {t} outside [0, {self.t_end}]")
        if self.scheme == "traditional_esav" and self.order != 1:
            raise ValueError("traditional_esav is first order only")
        return self

    @property
    def n_steps(self) -> int:
        """Number of steps of size dt needed to reach t_end."""
        return max(1, int(round(self.t_end / self.dt)))
