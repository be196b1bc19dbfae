"""Desk-scale benchmark runs: stability sweeps, convergence orders and long runs.

Deselected by default; run with ``pytest -m slow``.
"""
import pytest

from app.core.errors import BlowUpError, EnergyOverflowError
from app.services import harness
from app.services.presets import get_preset
from app.services.schemes import bdf_table, bootstrap, make_stepper, predict

pytestmark = pytest.mark.slow


def _desk(name, n=None, **update):
    config = get_preset(name, desk=True).config
    if n is not None:
        update["grid"] = config.grid.model_copy(update={"nx": n, "ny": n})
    return config.model_copy(update=update)


# Runs of the sweep below that the blow-up guard may stop: Example 2 at any
# tested dt, the other examples at dt >= 0.1. Once phi_bar is polluted by the
# explicit F' term, xi collapses towards 0, and for even k U_k(0) = 2 does not
# damp it. Every other combination must complete all 50 steps.
def _may_abort(name, dt):
    return name == "2" or dt >= 0.1


@pytest.mark.parametrize("dt", [0.01, 0.1, 1.0])
@pytest.mark.parametrize("k", [1, 2, 3, 4])
@pytest.mark.parametrize("scheme", ["esav", "resav"])
@pytest.mark.parametrize("name", ["1", "1ch", "2", "3"])
def test_unconditional_stability(name, scheme, k, dt):
    """Test S ln R never increases and every linear solve is accurate on every accepted step."""
    model, phi0 = harness.setup(_desk(name, n=64))
    table = bdf_table(k)
    stepper = make_stepper(scheme)
    accepted = 0
    try:
        state = bootstrap(phi0, model, k, dt, relaxed=scheme == "resav")
        for _ in range(50):
            p = predict(state, model, table, dt)
            residual = model.grid.residual(table.alpha, dt, model.g_symbol, model.l_symbol, p.phi_bar, p.rhs)
            assert residual <= 1e-10
            before = state.ln_r
            state, report = stepper(state, model, table, dt)
            assert report.ln_r_scaled / model.s_scale <= before + 1e-12
            accepted += 1
    except (BlowUpError, EnergyOverflowError) as exc:
        assert _may_abort(name, dt), f"unexpected abort after {accepted} steps: {exc}"
        pytest.xfail(f"stopped by the guard after {accepted} steps")
    assert accepted == 50


@pytest.mark.parametrize("k, tolerance", [(1, 0.25), (2, 0.25), (3, 0.25), (4, 0.35)])
def test_allen_cahn_convergence_orders(k, tolerance):
    """Test RE-SAV BDFk reaches order k on the Allen-Cahn benchmark at 128^2."""
    preset = get_preset("1", desk=True)
    config = _desk("1", n=128, order=k)
    report = harness.convergence_study(config, preset.dt_list, preset.dt_ref)
    assert abs(report.rates[-1] - k) <= tolerance


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_cahn_hilliard_convergence_orders(k):
    """Test RE-SAV BDFk reaches order k on the Cahn-Hilliard benchmark at 128^2."""
    preset = get_preset("1ch", desk=True)
    config = _desk("1ch", n=128, order=k)
    report = harness.convergence_study(config, preset.dt_list, preset.dt_ref)
    assert abs(report.rates[-1] - k) <= 0.3


def test_first_order_schemes():
    """Test E-SAV (S = 1, 10) and RE-SAV are first order and S = 10 is more accurate."""
    preset = get_preset("1", desk=True)
    config = _desk("1")
    reports = {
        label: harness.convergence_study(harness.with_variant(config, label, 1), preset.dt_list, preset.dt_ref)
        for label in ("esav", "esav:10", "resav")
    }
    for report in reports.values():
        assert 0.9 <= report.rates[-1] <= 1.1
    for s1, s10 in zip(reports["esav"].errors, reports["esav:10"].errors):
        assert s10 < s1


def test_relaxation_improves_consistency():
    """Test RE-SAV keeps S ln R closer to E than E-SAV at dt = 0.1."""
    config = _desk("1", dt=0.1)
    traces = harness.compare(config, ["esav", "resav"])
    assert harness.consistency_gap(traces["resav"]) < harness.consistency_gap(traces["esav"])


@pytest.mark.parametrize("name", ["2", "3", "4"])
def test_long_runs_dissipate_energy(name):
    """Test the reduced long runs finish, S ln R never increases and the original energy decays after start-up."""
    config = _desk(name, snapshot_times=[])
    trace, _ = harness.run(config)
    assert trace[-1].time == pytest.approx(config.t_end)
    scaled = [r.ln_r_scaled for r in trace]
    for a, b in zip(scaled, scaled[1:]):
        assert b <= a + 1e-12 * abs(a)
    energies = [r.energy_original for r in trace[config.order - 1:]]
    for a, b in zip(energies, energies[1:]):
        assert b <= a + 1e-10 * abs(a)


def test_esav_xi_deviation_is_first_order():
    """Test max |xi - 1| of first-order E-SAV halves with dt on the Allen-Cahn benchmark."""
    preset = get_preset("1", desk=True)
    config = harness.with_variant(_desk("1"), "esav", 1)
    deviations = []
    for dt in preset.dt_list:
        trace, _ = harness.run(config.model_copy(update={"dt": dt}))
        deviations.append(max(abs(r.xi - 1.0) for r in trace))
    ratios = [a / b for a, b in zip(deviations, deviations[1:])]
    for ratio in ratios:
        assert 1.7 <= ratio <= 2.3
    assert ratios[-1] == pytest.approx(2.0, abs=0.15)
