"""Periodic Fourier spectral discretization on a uniform rectangular grid.

Fields are real ``(ny, nx)`` float arrays (row-major over (y, x)); symbols are
real ``(ny, nx)`` arrays in FFT layout. All operators in scope are diagonal in
Fourier space, so every linear solve is a modewise division.
"""
import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import numpy.typing as npt
from scipy import fft

from app.core.errors import ConfigError, EnergyOverflowError, SingularOperatorError

logger = logging.getLogger(__name__)

Field = npt.NDArray[np.float64]
Symbol = npt.NDArray[np.float64]

# Below this relative size a negative quadratic form is treated as roundoff
_ROUNDOFF = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """
    Periodic domain [0, lx) x [0, ly) with nx x ny nodes.

    Wavenumber tables use the standard DFT ordering
    (2 pi / L) * {0, 1, ..., n/2 - 1, -n/2, ..., -1}. Writing the Nyquist entry as
    +n/2 instead gives the same symbols, since every symbol depends on k^2 only.
    """

    lx: float
    ly: float
    nx: int
    ny: int

    @property
    def shape(self) -> tuple:
        return (self.ny, self.nx)

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    @property
    def area(self) -> float:
        return self.lx * self.ly

    @cached_property
    def kx(self) -> np.ndarray:
        return _frozen(_wavenumbers(self.nx, self.lx))

    @cached_property
    def ky(self) -> np.ndarray:
        return _frozen(_wavenumbers(self.ny, self.ly))

    @cached_property
    def k2(self) -> Symbol:
        """|k|^2 on the full Fourier layout."""
        kx, ky = np.meshgrid(self.kx, self.ky)
        return _frozen(kx * kx + ky * ky)

    @cached_property
    def coords(self) -> tuple:
        """Nodal coordinates (x, y), each of shape (ny, nx)."""
        x, y = np.meshgrid(np.arange(self.nx) * self.dx, np.arange(self.ny) * self.dy)
        return _frozen(x), _frozen(y)

    @cached_property
    def dealias_mask(self) -> Symbol:
        """2/3-rule truncation: 1 on retained modes, 0 on the top third."""
        keep_x = np.abs(np.fft.fftfreq(self.nx) * self.nx) <= self.nx / 3
        keep_y = np.abs(np.fft.fftfreq(self.ny) * self.ny) <= self.ny / 3
        return _frozen(np.outer(keep_y, keep_x).astype(np.float64))

    def symbol(self, fn: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> Symbol:
        """Evaluate fn(kx, ky) once per mode and cache it as a read-only array."""
        kx, ky = np.meshgrid(self.kx, self.ky)
        values = np.broadcast_to(np.asarray(fn(kx, ky), dtype=np.float64), self.shape).copy()
        if not np.all(np.isfinite(values)):
            raise ConfigError("operator symbol has non-finite entries")
        return _frozen(values)

    def constant(self, value: float) -> Field:
        return np.full(self.shape, float(value))

    def check(self, f: np.ndarray) -> None:
        if f.shape != self.shape:
            raise ValueError(f"field of shape {f.shape} does not live on a {self.shape} grid")

    # -- quadratures -----------------------------------------------------

    def inner_product(self, f: Field, g: Field) -> float:
        """Rectangle-rule L2 inner product, sum f_ij g_ij dx dy."""
        self.check(f)
        self.check(g)
        return float(np.vdot(f, g)) * self.cell_area

    def integral(self, f: Field) -> float:
        self.check(f)
        return float(np.sum(f)) * self.cell_area

    def quadratic_form(self, f: Field, s: Symbol) -> float:
        """(S f, f) evaluated in Fourier space; equals inner_product(apply_symbol(f, s), f)."""
        self.check(f)
        f_hat = fft.fft2(f)
        weight = self.cell_area / (self.nx * self.ny)
        return float(np.sum(s * (f_hat.real ** 2 + f_hat.imag ** 2))) * weight

    # -- diagonal operators ----------------------------------------------

    def apply_symbol(self, f: Field, s: Symbol) -> Field:
        """Fourier multiplier: inverse-DFT(s * DFT(f)), real part."""
        self.check(f)
        out = fft.ifft2(s * fft.fft2(f)).real
        if not np.all(np.isfinite(out)):
            raise EnergyOverflowError("non-finite values after applying an operator symbol")
        return out

    def solve_shifted(self, alpha: float, dt: float, g: Symbol, l: Symbol, rhs: Field) -> Field:
        """Solve (alpha I + dt G L) u = rhs modewise."""
        self.check(rhs)
        denom = alpha + dt * g * l
        bad = ~np.isfinite(denom) | (denom == 0.0)
        if np.any(bad):
            iy, ix = np.argwhere(bad)[0]
            raise SingularOperatorError(
                f"shifted operator is singular at mode (kx={self.kx[ix]:.6g}, ky={self.ky[iy]:.6g}), "
                f"denominator={denom[iy, ix]}"
            )
        out = fft.ifft2(fft.fft2(rhs) / denom).real
        if not np.all(np.isfinite(out)):
            raise EnergyOverflowError("non-finite solution of the shifted linear system")
        return out

    def residual(self, alpha: float, dt: float, g: Symbol, l: Symbol, u: Field, rhs: Field) -> float:
        """Relative max-norm residual of (alpha I + dt G L) u = rhs."""
        lhs = alpha * u + dt * self.apply_symbol(u, g * l)
        scale = max(float(np.max(np.abs(rhs))), np.finfo(float).tiny)
        return float(np.max(np.abs(lhs - rhs))) / scale

    def dissipation_quadratic(self, mu: Field, g: Symbol) -> float:
        """(G mu, mu) >= 0, with roundoff-level negatives clamped to zero."""
        value = self.quadratic_form(mu, g)
        if value < 0.0:
            floor = _ROUNDOFF * max(self.inner_product(mu, mu), 1.0)
            if value < -floor:
                raise ValueError(f"dissipation {value:.3e} is negative; mobility symbol is not non-negative")
            logger.debug(f"Clamped dissipation {value:.3e} to zero")
            value = 0.0
        return value


def _wavenumbers(n: int, length: float) -> np.ndarray:
    return (2.0 * np.pi / length) * (np.fft.fftfreq(n) * n)


def make_grid(lx: float, ly: float, nx: int, ny: int) -> Grid:
    """
    Build a periodic grid.

    Args:
        lx, ly: Domain edge lengths
        nx, ny: Even mode counts, at least 2

    Raises:
        ConfigError: Odd or too small mode counts, non-positive lengths
    """
    for name, n in (("nx", nx), ("ny", ny)):
        if int(n) != n or n < 2 or n % 2:
            raise ConfigError(f"{name} must be an even integer >= 2, got {n}")
    for name, length in (("lx", lx), ("ly", ly)):
        if not (np.isfinite(length) and length > 0):
            raise ConfigError(f"{name} must be positive, got {length}")
    return Grid(float(lx), float(ly), int(nx), int(ny))


def laplacian(grid: Grid) -> Symbol:
    """Symbol of the Laplacian, -(kx^2 + ky^2)."""
    return grid.symbol(lambda kx, ky: -(kx * kx + ky * ky))


def identity(grid: Grid) -> Symbol:
    return grid.symbol(lambda kx, ky: np.ones_like(kx))
