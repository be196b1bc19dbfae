"""Gradient-flow models: energy, chemical potential and the log-space auxiliary variable.

Every model is written as E(phi) = 1/2 (phi, L phi) + integral F(phi) with L a
non-negative Fourier multiplier and the mobility G a non-negative multiplier.
"""
import logging
from dataclasses import dataclass
from functools import partial
from typing import Callable

import numpy as np

from app.core.errors import ConfigError, EnergyOverflowError
from app.schemas.experiment import (
    AllenCahn,
    BuiltinModel,
    CahnHilliard,
    StabilizedCahnHilliard,
    SwiftHohenberg,
)
from app.services.spectral import Field, Grid, Symbol

logger = logging.getLogger(__name__)

Pointwise = Callable[[np.ndarray], np.ndarray]


def double_well(phi: np.ndarray, shift: float = 0.0) -> np.ndarray:
    """F = 1/4 (phi^2 - 1 - shift)^2."""
    return 0.25 * (phi * phi - 1.0 - shift) ** 2


def double_well_prime(phi: np.ndarray, shift: float = 0.0) -> np.ndarray:
    return phi * (phi * phi - 1.0 - shift)


def quadratic_cubic(phi: np.ndarray, epsilon: float, g: float) -> np.ndarray:
    """Swift-Hohenberg density with the -epsilon part moved out of L."""
    phi2 = phi * phi
    return 0.25 * phi2 * phi2 - (g / 3.0) * phi2 * phi - 0.5 * epsilon * phi2


def quadratic_cubic_prime(phi: np.ndarray, epsilon: float, g: float) -> np.ndarray:
    return phi * phi * phi - g * phi * phi - epsilon * phi


@dataclass(frozen=True)
class ModelSpec:
    """
    A gradient flow phi_t = -G mu, mu = L phi + F'(phi) on a fixed grid.

    Attributes:
        name: Model identifier
        grid: Grid the symbols are tabulated on
        l_symbol: Symbol of L (>= 0)
        g_symbol: Symbol of G (>= 0)
        f: Energy density F
        f_prime: Its derivative F'
        s_scale: Exponential scaling S of R = exp(E / S)
        nonlinear_symbol: Symbol applied to the explicit F' term (G, optionally dealiased)
        energy_shift: Constant separating E from the plain Ginzburg-Landau energy
    """

    name: str
    grid: Grid
    l_symbol: Symbol
    g_symbol: Symbol
    f: Pointwise
    f_prime: Pointwise
    s_scale: float
    nonlinear_symbol: Symbol
    energy_shift: float = 0.0


def build_model(variant: BuiltinModel, grid: Grid, s_scale: float = 1.0, dealias: bool = False) -> ModelSpec:
    """
    Tabulate the operators of a built-in model on a grid.

    Args:
        variant: Model variant and parameters
        grid: Target grid
        s_scale: Exponential scaling S > 0
        dealias: Apply the 2/3 rule to the explicit nonlinear term

    Returns:
        ModelSpec ready for the steppers

    Raises:
        ConfigError: Parameter violations
    """
    if not (np.isfinite(s_scale) and s_scale > 0):
        raise ConfigError(f"s_scale must be positive, got {s_scale}")

    k2 = grid.k2
    shift = 0.0
    if isinstance(variant, AllenCahn):
        eps2 = variant.epsilon ** 2
        l_symbol = grid.symbol(lambda kx, ky: eps2 * (kx * kx + ky * ky))
        g_symbol = grid.symbol(lambda kx, ky: np.ones_like(kx))
        f, f_prime = double_well, double_well_prime
    elif isinstance(variant, CahnHilliard):
        eps2 = variant.epsilon ** 2
        l_symbol = grid.symbol(lambda kx, ky: eps2 * (kx * kx + ky * ky))
        g_symbol = grid.symbol(lambda kx, ky: kx * kx + ky * ky)
        f, f_prime = double_well, double_well_prime
    elif isinstance(variant, StabilizedCahnHilliard):
        eps2, beta = variant.epsilon ** 2, variant.beta
        l_symbol = grid.symbol(lambda kx, ky: eps2 * (kx * kx + ky * ky) + beta)
        g_symbol = grid.symbol(lambda kx, ky: kx * kx + ky * ky)
        f = partial(double_well, shift=beta)
        f_prime = partial(double_well_prime, shift=beta)
        # 1/2 beta phi^2 + 1/4 (phi^2 - 1 - beta)^2 = 1/4 (phi^2 - 1)^2 + beta/2 + beta^2/4
        shift = (0.5 * beta + 0.25 * beta * beta) * grid.area
    elif isinstance(variant, SwiftHohenberg):
        l_symbol = grid.symbol(lambda kx, ky: (1.0 - (kx * kx + ky * ky)) ** 2)
        g_symbol = grid.symbol(lambda kx, ky: kx * kx + ky * ky)
        f = partial(quadratic_cubic, epsilon=variant.epsilon, g=variant.g)
        f_prime = partial(quadratic_cubic_prime, epsilon=variant.epsilon, g=variant.g)
    else:
        raise ConfigError(f"Unknown model: {variant!r}")

    if np.any(l_symbol < 0) or np.any(g_symbol < 0):
        raise ConfigError(f"{variant.kind}: operator symbols must be non-negative")

    nonlinear = g_symbol * grid.dealias_mask if dealias else g_symbol
    nonlinear.setflags(write=False)
    logger.debug(f"Built {variant.kind} on {grid.nx}x{grid.ny}, S={s_scale}, max|k|^2={k2.max():.4g}")
    return ModelSpec(
        name=variant.kind,
        grid=grid,
        l_symbol=l_symbol,
        g_symbol=g_symbol,
        f=f,
        f_prime=f_prime,
        s_scale=float(s_scale),
        nonlinear_symbol=nonlinear,
        energy_shift=shift,
    )


def quadratic_energy(phi: Field, m: ModelSpec) -> float:
    """1/2 (phi, L phi)."""
    return 0.5 * m.grid.quadratic_form(phi, m.l_symbol)


def nonlinear_energy(phi: Field, m: ModelSpec) -> float:
    """E_1(phi) = integral F(phi)."""
    return m.grid.integral(m.f(phi))


def free_energy(phi: Field, m: ModelSpec) -> float:
    """
    E(phi) = 1/2 (phi, L phi) + integral F(phi).

    Raises:
        EnergyOverflowError: The energy is not finite
    """
    with np.errstate(over="ignore", invalid="ignore"):
        energy = quadratic_energy(phi, m) + nonlinear_energy(phi, m)
    if not np.isfinite(energy):
        raise EnergyOverflowError(f"{m.name}: free energy overflowed ({energy})")
    return energy


def chemical_potential(phi: Field, m: ModelSpec) -> Field:
    """mu = L phi + F'(phi)."""
    with np.errstate(over="ignore", invalid="ignore"):
        mu = m.grid.apply_symbol(phi, m.l_symbol) + m.f_prime(phi)
    if not np.all(np.isfinite(mu)):
        raise EnergyOverflowError(f"{m.name}: chemical potential overflowed")
    return mu


def log_sav(phi: Field, m: ModelSpec) -> float:
    """ln R = E(phi) / S; R itself is never formed."""
    return free_energy(phi, m) / m.s_scale
