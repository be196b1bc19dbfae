"""Tests for the periodic Fourier grid."""
import math

import numpy as np
import pytest

from app.core.errors import ConfigError, SingularOperatorError
from app.services.spectral import identity, laplacian, make_grid

TWO_PI = 2 * math.pi


def test_wavenumbers_follow_dft_ordering():
    """Test kx = [0, 1, -2, -1] on a 4-point 2pi grid."""
    grid = make_grid(TWO_PI, TWO_PI, 4, 4)
    assert grid.kx == pytest.approx([0.0, 1.0, -2.0, -1.0])
    assert grid.k2.shape == (4, 4)
    # the Nyquist mode squares to (n/2)^2 whichever sign it is listed with
    assert grid.k2[0, 2] == pytest.approx(4.0)
    assert grid.k2[2, 2] == pytest.approx(8.0)


def test_example_grids():
    """Test the grids of the Allen-Cahn and crystal growth benchmarks."""
    grid = make_grid(TWO_PI, TWO_PI, 256, 256)
    assert grid.shape == (256, 256)
    assert grid.area == pytest.approx(4 * math.pi ** 2)

    grid = make_grid(400.0, 400.0, 512, 512)
    assert grid.dx == pytest.approx(400.0 / 512)
    assert grid.kx[1] == pytest.approx(2 * math.pi / 400.0)


@pytest.mark.parametrize("nx, ny, lx", [(5, 4, 1.0), (4, 0, 1.0), (4, 4, 0.0), (4, 4, -1.0)])
def test_make_grid_rejects_invalid(nx, ny, lx):
    """Test odd or zero mode counts and non-positive lengths are rejected."""
    with pytest.raises(ConfigError):
        make_grid(lx, 1.0, nx, ny)


def test_inner_product_examples():
    """Test quadrature of constants and of cos^2."""
    grid = make_grid(TWO_PI, TWO_PI, 8, 8)
    x, _ = grid.coords
    ones = grid.constant(1.0)
    assert grid.inner_product(ones, ones) == pytest.approx(4 * math.pi ** 2, rel=1e-12)
    assert grid.inner_product(np.cos(x), np.cos(x)) == pytest.approx(2 * math.pi ** 2, rel=1e-12)
    assert grid.inner_product(grid.constant(0.0), ones) == 0.0


def test_inner_product_rejects_grid_mismatch():
    """Test fields from another grid are refused."""
    grid = make_grid(TWO_PI, TWO_PI, 8, 8)
    with pytest.raises(ValueError):
        grid.inner_product(np.zeros((8, 8)), np.zeros((4, 4)))


def test_apply_symbol_examples():
    """Test identity, Laplacian eigenfunction and constant kernel."""
    grid = make_grid(TWO_PI, TWO_PI, 16, 16)
    x, y = grid.coords
    f = np.sin(x) * np.cos(2 * y) + 0.3

    assert np.max(np.abs(grid.apply_symbol(f, identity(grid)) - f)) <= 1e-12
    assert np.max(np.abs(grid.apply_symbol(np.cos(x), laplacian(grid)) + np.cos(x))) <= 1e-12
    assert np.max(np.abs(grid.apply_symbol(grid.constant(3.0), grid.k2))) <= 1e-12


def test_solve_shifted_examples():
    """Test trivial right-hand sides and a single-mode solve."""
    grid = make_grid(TWO_PI, TWO_PI, 16, 16)
    x, _ = grid.coords
    eps2 = 0.01
    g = identity(grid)
    l = eps2 * grid.k2

    assert np.all(grid.solve_shifted(1.5, 0.1, g, l, grid.constant(0.0)) == 0.0)

    rhs = np.cos(x) + 0.25
    assert np.max(np.abs(grid.solve_shifted(1.0, 0.0, g, l, rhs) - rhs)) <= 1e-14

    u = grid.solve_shifted(1.5, 0.1, g, l, np.cos(x))
    assert np.max(np.abs(u - np.cos(x) / (1.5 + 0.1 * eps2))) <= 1e-13


def test_solve_shifted_names_singular_mode():
    """Test a zero denominator raises with the offending mode."""
    grid = make_grid(TWO_PI, TWO_PI, 8, 8)
    with pytest.raises(SingularOperatorError, match="kx=0"):
        grid.solve_shifted(0.0, 1.0, grid.k2, grid.k2, grid.constant(1.0))


@pytest.mark.parametrize(
    "lx, g_fn, l_fn",
    [
        (TWO_PI, lambda k2: np.ones_like(k2), lambda k2: 1e-4 * k2),
        (TWO_PI, lambda k2: k2, lambda k2: 1e-4 * k2 + 2.0),
        (100.0, lambda k2: k2, lambda k2: (1.0 - k2) ** 2),
    ],
)
def test_solve_shifted_residual(lx, g_fn, l_fn):
    """Test the relative residual stays below 1e-10 for random right-hand sides."""
    grid = make_grid(lx, lx, 64, 64)
    rng = np.random.default_rng(7)
    g, l = g_fn(grid.k2), l_fn(grid.k2)
    for alpha in (1.0, 1.5, 25 / 12):
        rhs = rng.uniform(-1.0, 1.0, grid.shape)
        u = grid.solve_shifted(alpha, 0.1, g, l, rhs)
        assert grid.residual(alpha, 0.1, g, l, u, rhs) <= 1e-10


def test_parseval_consistency():
    """Test the Fourier-side quadratic form with s = 1 equals the nodal inner product."""
    grid = make_grid(3.0, 5.0, 32, 16)
    f = np.random.default_rng(1).normal(size=grid.shape)
    assert grid.quadratic_form(f, identity(grid)) == pytest.approx(grid.inner_product(f, f), rel=1e-12)


def test_symbols_are_self_adjoint():
    """Test (S f, g) = (f, S g) for a real even symbol."""
    grid = make_grid(TWO_PI, TWO_PI, 32, 32)
    rng = np.random.default_rng(2)
    f, g = rng.normal(size=grid.shape), rng.normal(size=grid.shape)
    s = (1.0 - grid.k2) ** 2
    sf, sg = grid.apply_symbol(f, s), grid.apply_symbol(g, s)
    scale = np.linalg.norm(sf) * np.linalg.norm(g) * grid.cell_area
    assert abs(grid.inner_product(sf, g) - grid.inner_product(f, sg)) <= 1e-12 * scale


def test_dissipation_examples():
    """Test constants do not dissipate under -Laplacian and the cos(x) values."""
    grid = make_grid(TWO_PI, TWO_PI, 16, 16)
    x, _ = grid.coords
    assert grid.dissipation_quadratic(grid.constant(5.0), grid.k2) == pytest.approx(0.0, abs=1e-10)
    assert grid.dissipation_quadratic(np.cos(x), identity(grid)) == pytest.approx(2 * math.pi ** 2, rel=1e-12)
    assert grid.dissipation_quadratic(np.cos(x), grid.k2) == pytest.approx(2 * math.pi ** 2, rel=1e-12)


def test_dissipation_rejects_negative_symbol():
    """Test a genuinely negative quadratic form is reported."""
    grid = make_grid(TWO_PI, TWO_PI, 8, 8)
    mu = np.random.default_rng(3).normal(size=grid.shape)
    with pytest.raises(ValueError):
        grid.dissipation_quadratic(mu, -identity(grid))


def test_dealias_mask_keeps_lower_two_thirds():
    """Test the 2/3-rule mask keeps the mean mode and drops the Nyquist mode."""
    grid = make_grid(TWO_PI, TWO_PI, 12, 12)
    mask = grid.dealias_mask
    assert mask[0, 0] == 1.0
    assert mask[0, 4] == 1.0
    assert mask[0, 5] == 0.0
    assert mask[6, 0] == 0.0
