"""E-SAV / RE-SAV BDFk time steppers and the traditional E-SAV baseline.

The auxiliary variable R = exp(E / S) is carried exclusively as ln R. Every
update of R is rewritten in log space so that no raw exp(E) is ever formed.
"""
import logging
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import optimize
from scipy.special import logsumexp

from app.core.config import settings
from app.core.errors import BaselineSolveError, BlowUpError, EnergyOverflowError
from app.schemas.report import StepReport
from app.services.models import (
    ModelSpec,
    chemical_potential,
    free_energy,
    log_sav,
    nonlinear_energy,
    quadratic_energy,
)
from app.services.spectral import Field

logger = logging.getLogger(__name__)

_F = Fraction

# (alpha, history weights, extrapolation weights), newest level first
_BDF = {
    1: (_F(1), (_F(1),), (_F(1),)),
    2: (_F(3, 2), (_F(2), _F(-1, 2)), (_F(2), _F(-1))),
    3: (_F(11, 6), (_F(3), _F(-3, 2), _F(1, 3)), (_F(3), _F(-3), _F(1))),
    4: (_F(25, 12), (_F(4), _F(-3), _F(4, 3), _F(-1, 4)), (_F(4), _F(-6), _F(4), _F(-1))),
}

# U_k(xi) = 1 - (xi - 1)^(k+1), ascending powers of xi
_U = {
    1: (0, 2, -1),
    2: (2, -3, 3, -1),
    3: (0, 4, -6, 4, -1),
    4: (2, -5, 10, -10, 5, -1),
}


@dataclass(frozen=True)
class BdfTable:
    """Coefficients of the k-step BDF scheme and its U_k polynomial."""

    k: int
    alpha: float
    hist_weights: Tuple[float, ...]
    extrap_weights: Tuple[float, ...]
    u_coeffs: Tuple[float, ...]
    alpha_exact: Fraction
    hist_exact: Tuple[Fraction, ...]
    extrap_exact: Tuple[Fraction, ...]


@dataclass(frozen=True)
class SchemeState:
    """
    Time-stepping state.

    history holds the most recent fields newest first, at most ``depth`` of
    them; ln_r is ln R^n (or ln r^n for the traditional baseline).
    """

    history: Tuple[Field, ...]
    ln_r: float
    step: int = 0
    time: float = 0.0
    depth: int = 1


@dataclass(frozen=True)
class Prediction:
    """Intermediate quantities of the predictor, shared by E-SAV and RE-SAV."""

    phi_hat: Field
    phi_star: Field
    rhs: Field
    phi_bar: Field
    mu_bar: Field
    dissipation: float
    dt_d: float
    ln_r_tilde: float
    energy_bar_scaled: float
    xi: float
    u: float
    phi_new: Field


Stepper = Callable[[SchemeState, ModelSpec, BdfTable, float], Tuple[SchemeState, StepReport]]


def bdf_table(k: int) -> BdfTable:
    """
    Coefficients for BDF order k.

    Raises:
        ValueError: k outside 1..4
    """
    if k not in _BDF:
        raise ValueError(f"Unsupported BDF order {k}; expected 1, 2, 3 or 4")
    alpha, hist, extrap = _BDF[k]
    hist_weights = tuple(float(w) for w in hist)
    # sum(hist_weights) == alpha exactly in floating point
    return BdfTable(
        k=k,
        alpha=sum(hist_weights),
        hist_weights=hist_weights,
        extrap_weights=tuple(float(w) for w in extrap),
        u_coeffs=tuple(float(c) for c in _U[k]),
        alpha_exact=alpha,
        hist_exact=hist,
        extrap_exact=extrap,
    )


def u_poly(k: int, xi: float) -> float:
    """U_k(xi), with U_k(1 + c) = 1 - c^(k+1)."""
    if k not in _U:
        raise ValueError(f"Unsupported BDF order {k}")
    return float(P.polyval(xi, _U[k]))


def initial_state(phi0: Field, m: ModelSpec, depth: int = 1, nonlinear_only: bool = False) -> SchemeState:
    """
    State at t = 0: ln R^0 = E(phi^0) / S.

    With nonlinear_only the auxiliary variable tracks E_1 only (traditional baseline).
    """
    m.grid.check(phi0)
    if nonlinear_only:
        ln_r = nonlinear_energy(phi0, m) / m.s_scale
    else:
        ln_r = log_sav(phi0, m)
    return SchemeState(history=(np.array(phi0, dtype=np.float64),), ln_r=ln_r, depth=depth)


def _combine(weights: Tuple[float, ...], fields: Tuple[Field, ...]) -> Field:
    out = weights[0] * fields[0]
    for w, f in zip(weights[1:], fields[1:]):
        out = out + w * f
    return out


def predict(state: SchemeState, m: ModelSpec, t: BdfTable, dt: float) -> Prediction:
    """
    Semi-implicit BDFk predictor, log-space R update and U_k correction.

    Raises:
        ValueError: Too short a history or a non-positive step
        BlowUpError: |ln R~ - E(phi_bar)/S| exceeds the guard
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if len(state.history) < t.k:
        raise ValueError(f"BDF{t.k} needs {t.k} history levels, state has {len(state.history)}")

    grid = m.grid
    levels = state.history[: t.k]
    phi_hat = _combine(t.hist_weights, levels)
    phi_star = _combine(t.extrap_weights, levels)

    with np.errstate(over="ignore", invalid="ignore"):
        nonlinear = m.f_prime(phi_star)
    if not np.all(np.isfinite(nonlinear)):
        raise EnergyOverflowError("non-finite nonlinear term at the extrapolated state")

    rhs = phi_hat - dt * grid.apply_symbol(nonlinear, m.nonlinear_symbol)
    phi_bar = grid.solve_shifted(t.alpha, dt, m.g_symbol, m.l_symbol, rhs)
    mu_bar = chemical_potential(phi_bar, m)
    dissipation = grid.dissipation_quadratic(mu_bar, m.g_symbol)

    # R~ = R^n / (1 + dt d / S)
    dt_d = dt * dissipation / m.s_scale
    ln_r_tilde = state.ln_r - math.log1p(dt_d)
    energy_bar_scaled = log_sav(phi_bar, m)

    exponent = ln_r_tilde - energy_bar_scaled
    if not math.isfinite(exponent) or abs(exponent) > settings.BLOWUP_EXPONENT:
        raise BlowUpError(
            f"ln R~ - E(phi_bar)/S = {exponent:.6g} outside +/-{settings.BLOWUP_EXPONENT:g}; "
            f"reduce dt or increase S"
        )
    xi = math.exp(exponent)
    u = float(P.polyval(xi, t.u_coeffs))
    return Prediction(
        phi_hat=phi_hat,
        phi_star=phi_star,
        rhs=rhs,
        phi_bar=phi_bar,
        mu_bar=mu_bar,
        dissipation=dissipation,
        dt_d=dt_d,
        ln_r_tilde=ln_r_tilde,
        energy_bar_scaled=energy_bar_scaled,
        xi=xi,
        u=u,
        phi_new=u * phi_bar,
    )


def _advance(state: SchemeState, phi_new: Field, ln_r: float, dt: float) -> SchemeState:
    return replace(
        state,
        history=((phi_new,) + state.history)[: state.depth],
        ln_r=ln_r,
        step=state.step + 1,
        time=state.time + dt,
    )


def _report(
    state: SchemeState,
    m: ModelSpec,
    phi_new: Field,
    energy: float,
    ln_r: float,
    xi: float,
    u: float,
    dissipation: float,
    lambda0: Optional[float] = None,
) -> StepReport:
    return StepReport(
        step=state.step,
        time=state.time,
        energy_original=energy,
        ln_r_scaled=m.s_scale * ln_r,
        xi=xi,
        u_of_xi=u,
        lambda0=lambda0,
        dissipation=dissipation,
        mass=m.grid.integral(phi_new),
    )


def esav_step(state: SchemeState, m: ModelSpec, t: BdfTable, dt: float) -> Tuple[SchemeState, StepReport]:
    """
    One E-SAV BDFk step.

    Returns:
        The advanced state and its diagnostics; ln R^{n+1} <= ln R^n always.
    """
    p = predict(state, m, t, dt)
    energy = free_energy(p.phi_new, m)
    new_state = _advance(state, p.phi_new, p.ln_r_tilde, dt)
    report = _report(new_state, m, p.phi_new, energy, p.ln_r_tilde, p.xi, p.u, p.dissipation)
    return new_state, report


def relaxation_lambda(
    ln_r_tilde: float,
    e_new_scaled: float,
    ln_r_prev: float,
    dt_d: float,
    kappa: float,
) -> float:
    """
    Smallest lambda in [0, 1] keeping the relaxed R inside the dissipation constraint.

    With R~ < exp(E): a = kappa dt_d R^n / ((1 + dt_d) |R~ - exp(E)|) and
    lambda0 = max(0, 1 - a); otherwise lambda0 = 0. Evaluated with ln a so the
    exponentials never overflow.
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError(f"kappa must lie in [0, 1], got {kappa}")
    if dt_d < 0:
        raise ValueError(f"dt_d must be non-negative, got {dt_d}")
    if ln_r_tilde >= e_new_scaled:
        return 0.0
    # |R~ - exp(E)| = exp(E) * (1 - exp(ln R~ - E))
    gap = -math.expm1(ln_r_tilde - e_new_scaled)
    if gap <= 0.0:
        return 0.0
    if kappa == 0.0 or dt_d == 0.0:
        return 1.0
    log_a = (
        math.log(kappa) + math.log(dt_d) + ln_r_prev
        - math.log1p(dt_d) - e_new_scaled - math.log(gap)
    )
    if log_a >= 0.0:
        return 0.0
    return min(1.0, max(0.0, -math.expm1(log_a)))


def relaxed_log(ln_r_tilde: float, e_new_scaled: float, lambda0: float) -> float:
    """ln(lambda0 R~ + (1 - lambda0) exp(E)) with a shared exponent shift."""
    if lambda0 == 0.0:
        return e_new_scaled
    if lambda0 == 1.0:
        return ln_r_tilde
    return float(logsumexp([ln_r_tilde, e_new_scaled], b=[lambda0, 1.0 - lambda0]))


def resav_step(
    state: SchemeState,
    m: ModelSpec,
    t: BdfTable,
    dt: float,
    kappa: float = 1.0,
) -> Tuple[SchemeState, StepReport]:
    """
    One RE-SAV BDFk step: the E-SAV predictor followed by the relaxation of R.

    Guarantees ln R^{n+1} - ln R^n <= ln(1 + kappa dt_d) - ln(1 + dt_d) <= 0.
    """
    p = predict(state, m, t, dt)
    energy = free_energy(p.phi_new, m)
    e_new_scaled = energy / m.s_scale
    lambda0 = relaxation_lambda(p.ln_r_tilde, e_new_scaled, state.ln_r, p.dt_d, kappa)
    ln_r = relaxed_log(p.ln_r_tilde, e_new_scaled, lambda0)
    logger.debug(f"step {state.step + 1}: xi={p.xi:.12g} lambda0={lambda0:.6g} ln R={ln_r:.12g}")
    new_state = _advance(state, p.phi_new, ln_r, dt)
    report = _report(new_state, m, p.phi_new, energy, ln_r, p.xi, p.u, p.dissipation, lambda0)
    return new_state, report


def _solve_baseline_scalar(
    residual: Callable[[float], float],
    derivative: Callable[[float], float],
) -> float:
    """Positive root of the baseline scalar equation: Newton from s = 1, bracketing fallback."""
    try:
        sol = optimize.root_scalar(
            residual, x0=1.0, fprime=derivative, method="newton", xtol=1e-12, maxiter=50
        )
        if sol.converged and math.isfinite(sol.root) and sol.root > 0:
            return float(sol.root)
    except (ArithmeticError, ValueError, RuntimeError):
        pass

    logger.warning("Newton did not converge for the baseline scalar equation; bracketing")
    lo, hi = 1.0, 1.0
    for _ in range(200):
        if residual(lo) < 0:
            break
        lo *= 0.5
    for _ in range(200):
        if residual(hi) > 0:
            break
        hi *= 2.0
    if not (residual(lo) < 0 < residual(hi)):
        raise BaselineSolveError("could not bracket the scalar auxiliary equation")
    return float(optimize.brentq(residual, lo, hi, xtol=1e-14, maxiter=200))


def traditional_esav_step(state: SchemeState, m: ModelSpec, dt: float) -> Tuple[SchemeState, StepReport]:
    """
    First-order E-SAV step with r = exp(E_1(phi) / S) tracking the nonlinear energy only.

    Solves (I + dt G L) phi^{n+1} = phi^n - dt s G F'(phi^n) jointly with
    S (ln r^{n+1} - ln r^n) = s (F'(phi^n), phi^{n+1} - phi^n), s = r^{n+1} / exp(E_1(phi^n) / S),
    through phi^{n+1} = phi_1 + s phi_2 and a scalar equation for s.
    ``state.ln_r`` holds ln r, not ln R.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")

    grid, S = m.grid, m.s_scale
    phi = state.history[0]
    with np.errstate(over="ignore", invalid="ignore"):
        f_prime = m.f_prime(phi)
    if not np.all(np.isfinite(f_prime)):
        raise EnergyOverflowError("non-finite nonlinear term")

    phi_1 = grid.solve_shifted(1.0, dt, m.g_symbol, m.l_symbol, phi)
    phi_2 = grid.solve_shifted(
        1.0, dt, m.g_symbol, m.l_symbol, -dt * grid.apply_symbol(f_prime, m.nonlinear_symbol)
    )
    e1 = nonlinear_energy(phi, m)
    b = grid.inner_product(f_prime, phi_1 - phi)
    c = grid.inner_product(f_prime, phi_2)
    offset = e1 - S * state.ln_r

    def residual(s: float) -> float:
        return S * math.log(s) + offset - b * s - c * s * s if s > 0 else -math.inf

    def derivative(s: float) -> float:
        return S / s - b - 2.0 * c * s

    s = _solve_baseline_scalar(residual, derivative)
    phi_new = phi_1 + s * phi_2
    ln_r = math.log(s) + e1 / S

    energy = free_energy(phi_new, m)
    modified = quadratic_energy(phi_new, m) + S * ln_r
    exponent = ln_r - nonlinear_energy(phi_new, m) / S
    if not math.isfinite(exponent) or abs(exponent) > settings.BLOWUP_EXPONENT:
        raise BlowUpError(f"ln r - E_1/S = {exponent:.6g} outside +/-{settings.BLOWUP_EXPONENT:g}")
    mu = grid.apply_symbol(phi_new, m.l_symbol) + s * f_prime
    dissipation = grid.dissipation_quadratic(mu, m.g_symbol)

    new_state = _advance(state, phi_new, ln_r, dt)
    report = StepReport(
        step=new_state.step,
        time=new_state.time,
        energy_original=energy,
        ln_r_scaled=modified,
        xi=math.exp(exponent),
        u_of_xi=s,
        lambda0=None,
        dissipation=dissipation,
        mass=grid.integral(phi_new),
    )
    return new_state, report


def _traditional_stepper(
    state: SchemeState, m: ModelSpec, t: BdfTable, dt: float
) -> Tuple[SchemeState, StepReport]:
    if t.k != 1:
        raise ValueError("the traditional E-SAV baseline is first order only")
    return traditional_esav_step(state, m, dt)


def make_stepper(scheme: str, kappa: float = 1.0) -> Stepper:
    """Uniform (state, model, table, dt) stepper for a scheme name."""
    if scheme == "esav":
        return esav_step
    if scheme == "resav":
        return lambda state, m, t, dt: resav_step(state, m, t, dt, kappa)
    if scheme == "traditional_esav":
        return _traditional_stepper
    raise ValueError(f"Unknown scheme {scheme!r}")


def bootstrap(
    ic: Field,
    m: ModelSpec,
    k: int,
    dt: float,
    kappa: float = 1.0,
    relaxed: bool = True,
    substeps: int = 1,
    reports: Optional[List[StepReport]] = None,
) -> SchemeState:
    """
    Fill a BDFk history by order ramping: BDF1 for the first step, BDF2 for the second, ...

    With substeps > 1 the ramp runs on the finer step dt / substeps and the
    history is sampled at multiples of dt. Reports of the sampled steps are
    appended to ``reports`` when given.

    Returns:
        State with k history levels at t = (k - 1) dt
    """
    bdf_table(k)
    if substeps < 1:
        raise ValueError(f"substeps must be >= 1, got {substeps}")
    state = initial_state(ic, m, depth=k)
    if k == 1:
        return state

    stepper = make_stepper("resav" if relaxed else "esav", kappa)
    h = dt / substeps
    samples = [state.history[0]]
    for j in range(1, (k - 1) * substeps + 1):
        state, report = stepper(state, m, bdf_table(min(j, k)), h)
        if j % substeps == 0:
            samples.append(state.history[0])
            if reports is not None:
                n = j // substeps
                reports.append(report.model_copy(update={"step": n, "time": n * dt}))
    logger.debug(f"Bootstrapped BDF{k} with {(k - 1) * substeps} ramp steps of size {h:.3g}")
    return SchemeState(
        history=tuple(reversed(samples)),
        ln_r=state.ln_r,
        step=k - 1,
        time=(k - 1) * dt,
        depth=k,
    )
