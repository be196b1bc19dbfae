"""Tests for the gradient-flow models."""
import math

import numpy as np
import pytest

from app.core.errors import ConfigError, EnergyOverflowError
from app.schemas.experiment import AllenCahn, CahnHilliard, StabilizedCahnHilliard, SwiftHohenberg
from app.services.models import build_model, chemical_potential, free_energy, log_sav
from app.services.spectral import make_grid

TWO_PI = 2 * math.pi

BUILTINS = [
    AllenCahn(epsilon=0.1),
    CahnHilliard(epsilon=0.4),
    StabilizedCahnHilliard(epsilon=0.1, beta=2.0),
    SwiftHohenberg(epsilon=0.25, g=1.0),
]


def _grid(n=16):
    return make_grid(TWO_PI, TWO_PI, n, n)


def _smooth(grid):
    x, y = grid.coords
    return 0.4 * np.cos(x) * np.sin(2 * y) + 0.2 * np.sin(3 * x) + 0.1


def test_allen_cahn_symbols():
    """Test G = I and L = eps^2 |k|^2 for Allen-Cahn."""
    grid = _grid()
    m = build_model(AllenCahn(epsilon=0.01), grid)
    assert np.all(m.g_symbol == 1.0)
    assert np.allclose(m.l_symbol, 1e-4 * grid.k2, rtol=1e-14, atol=0.0)


def test_stabilized_double_well():
    """Test F = 1/4 (phi^2 - 3)^2 for beta = 2."""
    m = build_model(StabilizedCahnHilliard(epsilon=0.01, beta=2.0), _grid())
    assert m.f(np.array([0.0]))[0] == pytest.approx(9 / 4)
    assert m.f(np.array([math.sqrt(3.0)]))[0] == pytest.approx(0.0, abs=1e-14)


def test_swift_hohenberg_symbol_vanishes_on_unit_circle():
    """Test (1 - |k|^2)^2 is zero at k = (1, 0)."""
    m = build_model(SwiftHohenberg(epsilon=0.25, g=0.0), _grid(8))
    assert m.l_symbol[0, 1] == pytest.approx(0.0, abs=1e-14)
    assert m.l_symbol[0, 0] == pytest.approx(1.0)


def test_free_energy_examples():
    """Test energies of constant states."""
    grid = _grid()
    ac = build_model(AllenCahn(epsilon=0.01), grid)
    assert free_energy(grid.constant(1.0), ac) == pytest.approx(0.0, abs=1e-14)
    assert free_energy(grid.constant(0.0), ac) == pytest.approx(math.pi ** 2, rel=1e-12)

    square = make_grid(2.0, 2.0, 16, 16)
    sch = build_model(StabilizedCahnHilliard(epsilon=0.01, beta=2.0), square)
    assert free_energy(square.constant(1.0), sch) == pytest.approx(2 * square.area, rel=1e-12)


def test_stabilized_energy_shift_recovers_plain_energy():
    """Test E - energy_shift is the plain Ginzburg-Landau energy."""
    grid = make_grid(2.0, 2.0, 16, 16)
    sch = build_model(StabilizedCahnHilliard(epsilon=0.01, beta=2.0), grid)
    ch = build_model(CahnHilliard(epsilon=0.01), grid)
    phi = 0.8 * np.cos(np.pi * grid.coords[0])
    assert sch.energy_shift == pytest.approx(2 * grid.area)
    assert free_energy(phi, sch) - sch.energy_shift == pytest.approx(free_energy(phi, ch), rel=1e-12)


def test_chemical_potential_examples():
    """Test mu for constant states."""
    grid = _grid()
    ac = build_model(AllenCahn(epsilon=0.01), grid)
    sch = build_model(StabilizedCahnHilliard(epsilon=0.01, beta=2.0), grid)
    assert np.max(np.abs(chemical_potential(grid.constant(1.0), ac))) <= 1e-14
    assert np.allclose(chemical_potential(grid.constant(2.0), ac), 6.0, rtol=0, atol=1e-12)
    assert np.max(np.abs(chemical_potential(grid.constant(1.0), sch))) <= 1e-12


def test_log_sav_scaling():
    """Test ln R = E / S."""
    grid = _grid()
    phi = grid.constant(0.0)
    assert log_sav(phi, build_model(AllenCahn(epsilon=0.01), grid)) == pytest.approx(math.pi ** 2)
    assert log_sav(phi, build_model(AllenCahn(epsilon=0.01), grid, s_scale=10.0)) == pytest.approx(
        math.pi ** 2 / 10
    )
    one = log_sav(_smooth(grid), build_model(AllenCahn(epsilon=0.1), grid, s_scale=3.0))
    two = log_sav(_smooth(grid), build_model(AllenCahn(epsilon=0.1), grid, s_scale=6.0))
    assert two == pytest.approx(one / 2, rel=1e-14)


@pytest.mark.parametrize("variant", BUILTINS, ids=lambda s: s.kind)
def test_f_prime_matches_finite_differences(variant):
    """Test F' against central differences at random points in [-2, 2]."""
    m = build_model(variant, _grid(8))
    phi = np.random.default_rng(0).uniform(-2.0, 2.0, 100)
    h = 1e-5
    fd = (m.f(phi + h) - m.f(phi - h)) / (2 * h)
    assert fd == pytest.approx(m.f_prime(phi), rel=1e-6, abs=1e-8)


@pytest.mark.parametrize("variant", BUILTINS, ids=lambda s: s.kind)
def test_chemical_potential_is_energy_gradient(variant):
    """Test the directional derivative of E equals (mu, psi)."""
    grid = _grid()
    m = build_model(variant, grid)
    x, y = grid.coords
    phi = _smooth(grid)
    psi = np.cos(x + 2 * y) + 0.5 * np.sin(3 * y)
    h = 1e-5
    fd = (free_energy(phi + h * psi, m) - free_energy(phi - h * psi, m)) / (2 * h)
    assert fd == pytest.approx(grid.inner_product(chemical_potential(phi, m), psi), rel=1e-5, abs=1e-9)


def test_swift_hohenberg_splitting():
    """Test L phi + F'(phi) = (1 + Laplacian)^2 phi - eps phi + phi^3 - g phi^2."""
    grid = _grid(32)
    eps, g = 0.25, 1.0
    m = build_model(SwiftHohenberg(epsilon=eps, g=g), grid)
    phi = _smooth(grid)
    expected = grid.apply_symbol(phi, (1.0 - grid.k2) ** 2) - eps * phi + phi ** 3 - g * phi ** 2
    assert np.max(np.abs(chemical_potential(phi, m) - expected)) <= 1e-12


@pytest.mark.parametrize("variant", BUILTINS, ids=lambda s: s.kind)
def test_linear_operator_is_non_negative(variant):
    """Test (phi, L phi) >= 0 for random fields."""
    grid = _grid(32)
    m = build_model(variant, grid)
    rng = np.random.default_rng(4)
    for _ in range(5):
        phi = rng.normal(size=grid.shape)
        assert grid.quadratic_form(phi, m.l_symbol) >= -1e-12 * grid.inner_product(phi, phi)


def test_build_model_rejects_bad_scale():
    """Test S must be positive."""
    with pytest.raises(ConfigError):
        build_model(AllenCahn(epsilon=0.01), _grid(), s_scale=0.0)


def test_free_energy_overflow():
    """Test a non-finite energy is reported as overflow."""
    grid = _grid(8)
    m = build_model(AllenCahn(epsilon=0.01), grid)
    with pytest.raises(EnergyOverflowError):
        free_energy(grid.constant(1e100), m)
