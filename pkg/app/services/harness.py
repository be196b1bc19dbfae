"""Experiment driver: initial conditions, runs, comparisons and convergence studies."""
import logging
import math
import time as _time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.errors import ConfigError, SimulationError
from app.schemas.experiment import (
    CircleArray,
    CosCos,
    Crystallites,
    ExperimentConfig,
    InitialCondition,
    RandomUniform,
)
from app.schemas.report import ConvergenceReport, StepReport
from app.services.models import ModelSpec, build_model
from app.services.schemes import SchemeState, bdf_table, bootstrap, initial_state, make_stepper
from app.services.spectral import Field, Grid, make_grid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Snapshot:
    """Field recorded at the completed step nearest to a requested time."""

    time: float
    step: int
    values: Field


def make_ic(ic: InitialCondition, grid: Grid, seed: int = 0) -> Field:
    """
    Evaluate an initial condition on the grid nodes.

    Raises:
        ConfigError: A crystallite patch does not fit inside the domain
    """
    x, y = grid.coords
    if isinstance(ic, CosCos):
        return ic.amplitude * np.cos(x) * np.cos(y)

    if isinstance(ic, CircleArray):
        phi = np.full(grid.shape, ic.background)
        width = math.sqrt(2.0) * ic.eps
        for i in range(1, ic.n_rows + 1):
            for j in range(1, ic.n_cols + 1):
                r = np.hypot(x - ic.spacing * i, y - ic.spacing * j)
                phi -= np.tanh((r - ic.r0) / width)
        return phi

    if isinstance(ic, RandomUniform):
        # PCG64 stream; bit-identical for a given numpy version and seed
        rng = np.random.default_rng(seed)
        u = rng.uniform(-1.0, 1.0, size=grid.shape)
        u -= u.mean()
        return ic.mean + ic.amplitude * u

    if isinstance(ic, Crystallites):
        phi = np.full(grid.shape, ic.phibar)
        for patch in ic.patches:
            hw = patch.half_width
            if not (hw <= patch.cx <= grid.lx - hw and hw <= patch.cy <= grid.ly - hw):
                raise ConfigError(
                    f"crystallite patch at ({patch.cx}, {patch.cy}) with half width {hw} "
                    f"leaves the domain [0, {grid.lx}] x [0, {grid.ly}]"
                )
            inside = (np.abs(x - patch.cx) <= hw) & (np.abs(y - patch.cy) <= hw)
            s, c = math.sin(patch.theta), math.cos(patch.theta)
            xl = x * s + y * c
            yl = -x * c + y * s
            q3 = ic.q / math.sqrt(3.0)
            crystal = ic.phibar + ic.c * (
                np.cos(q3 * yl) * np.cos(ic.q * xl) - 0.5 * np.cos(2.0 * q3 * yl)
            )
            phi = np.where(inside, crystal, phi)
        return phi

    raise ConfigError(f"Unknown initial condition: {ic!r}")


def setup(config: ExperimentConfig) -> Tuple[ModelSpec, Field]:
    """Grid, model and initial field for a configuration."""
    g = config.grid
    grid = make_grid(g.lx, g.ly, g.nx, g.ny)
    model = build_model(config.model, grid, s_scale=config.s_scale, dealias=config.dealias)
    return model, make_ic(config.ic, grid, config.seed)


def _initial(
    config: ExperimentConfig, model: ModelSpec, phi0: Field, order: int, trace: List[StepReport]
) -> SchemeState:
    if config.scheme == "traditional_esav":
        return initial_state(phi0, model, depth=1, nonlinear_only=True)
    return bootstrap(
        phi0,
        model,
        order,
        config.dt,
        kappa=config.kappa,
        relaxed=config.scheme == "resav",
        substeps=config.startup_substeps,
        reports=trace,
    )


def run(config: ExperimentConfig) -> Tuple[List[StepReport], List[Snapshot]]:
    """
    Bootstrap and march a configuration to t_end.

    Returns:
        One StepReport per step (start-up steps included) and the snapshots

    Raises:
        SimulationError: Re-raised with the failing step index and time
    """
    started = _time.perf_counter()
    model, phi0 = setup(config)
    n_steps = config.n_steps
    wanted: Dict[int, float] = {}
    for t in config.snapshot_times:
        wanted.setdefault(min(n_steps, int(round(t / config.dt))), t)

    trace: List[StepReport] = []
    snapshots: List[Snapshot] = []
    if 0 in wanted:
        snapshots.append(Snapshot(0.0, 0, phi0.copy()))

    logger.info(
        f"Running {config.model.kind} with {config.scheme} BDF{config.order}, "
        f"dt={config.dt:g}, {n_steps} steps on {config.grid.nx}x{config.grid.ny}"
    )
    # the start-up ramp must not run past t_end
    order = min(config.order, n_steps)
    if order < config.order:
        logger.warning(f"Only {n_steps} steps; running BDF{order} instead of BDF{config.order}")
    stepper = make_stepper(config.scheme, config.kappa)
    table = bdf_table(order)
    n = 0
    try:
        state = _initial(config, model, phi0, order, trace)
        for report in trace:
            n = report.step
            if n in wanted and n > 0:
                # history is newest first: level 0 is step order - 1
                snapshots.append(Snapshot(n * config.dt, n, state.history[state.step - n].copy()))
        n = state.step
        while n < n_steps:
            state, report = stepper(state, model, table, config.dt)
            n = state.step
            trace.append(report.model_copy(update={"time": n * config.dt}))
            if n in wanted:
                snapshots.append(Snapshot(n * config.dt, n, state.history[0].copy()))
    except SimulationError as e:
        logger.error(f"Run aborted at step {n + 1} (t={(n + 1) * config.dt:.6g}): {e}")
        raise type(e)(f"step {n + 1} (t={(n + 1) * config.dt:.6g}): {e}") from e

    logger.info(f"Finished {n_steps} steps in {_time.perf_counter() - started:.2f}s")
    return trace, snapshots


def final_field(config: ExperimentConfig) -> Field:
    """phi at t_end (the snapshot machinery with a single requested time)."""
    _, snapshots = run(config.model_copy(update={"snapshot_times": [config.t_end]}))
    return snapshots[-1].values


def observed_rate(e_coarse: float, e_fine: float) -> Optional[float]:
    """log2(e_coarse / e_fine); None when either error is zero."""
    if e_coarse < 0 or e_fine < 0:
        raise ValueError("errors must be non-negative")
    if e_coarse == 0.0 or e_fine == 0.0:
        return None
    return math.log2(e_coarse / e_fine)


def startup_substeps(dt: float, k: int) -> int:
    """Ramp refinement keeping the first-order start below the dt^k error level."""
    if k <= 2:
        return 1
    return max(1, math.ceil(dt ** (1.0 - 0.5 * k) - 1e-9))


def _steps_for(t_end: float, dt: float) -> int:
    n = t_end / dt
    if abs(n - round(n)) > 1e-8 * max(1.0, n):
        raise ConfigError(f"dt={dt} does not divide t_end={t_end}")
    return int(round(n))


def convergence_study(
    base: ExperimentConfig,
    dt_list: Sequence[float],
    dt_ref: float,
    refined_startup: bool = True,
) -> ConvergenceReport:
    """
    Max-norm errors at t_end against a run with the finer step dt_ref.

    Args:
        base: Configuration whose dt is replaced by each entry of dt_list
        dt_list: Coarse steps, normally successive halvings
        dt_ref: Reference step, smaller than every entry of dt_list
        refined_startup: Ramp the BDF start-up on refined substeps (see startup_substeps)
    """
    dt_list = [float(dt) for dt in dt_list]
    if len(dt_list) < 1:
        raise ConfigError("dt_list is empty")
    if not dt_ref < min(dt_list):
        raise ConfigError(f"dt_ref={dt_ref} must be smaller than every dt in {dt_list}")
    for dt in dt_list + [dt_ref]:
        _steps_for(base.t_end, dt)

    def solve(dt: float) -> Field:
        substeps = startup_substeps(dt, base.order) if refined_startup else base.startup_substeps
        cfg = base.model_copy(update={"dt": dt, "startup_substeps": substeps, "snapshot_times": []})
        return final_field(cfg)

    with ThreadPoolExecutor(max_workers=max(1, settings.MAX_WORKERS)) as pool:
        futures = [pool.submit(solve, dt) for dt in [dt_ref] + dt_list]
        results = [f.result() for f in futures]

    reference, coarse = results[0], results[1:]
    errors = [float(np.max(np.abs(phi - reference))) for phi in coarse]
    rates = [observed_rate(a, b) for a, b in zip(errors[:-1], errors[1:])]
    for dt, err, rate in zip(dt_list, errors, [None] + rates):
        logger.info(f"{base.scheme} BDF{base.order} dt={dt:.6g} error={err:.4e} rate={rate}")
    return ConvergenceReport(dt_list=dt_list, dt_ref=dt_ref, errors=errors, rates=rates)


def parse_variant(label: str) -> Tuple[str, Optional[float]]:
    """Split a comparison label ``scheme[:S]``."""
    name, _, scale = label.partition(":")
    if name not in ("esav", "resav", "traditional_esav"):
        raise ConfigError(f"Unknown scheme {name!r} in {label!r}")
    try:
        return name, float(scale) if scale else None
    except ValueError as e:
        raise ConfigError(f"Bad S value in {label!r}") from e


def with_variant(config: ExperimentConfig, label: str, order: Optional[int] = None) -> ExperimentConfig:
    """Copy of config running the scheme named by label, optionally at another BDF order."""
    scheme, scale = parse_variant(label)
    update = {"scheme": scheme, "snapshot_times": []}
    if scale is not None:
        update["s_scale"] = scale
    if order is not None:
        update["order"] = order
    if scheme == "traditional_esav":
        update["order"] = 1
    try:
        return ExperimentConfig.model_validate({**config.model_dump(), **update})
    except ValueError as e:
        raise ConfigError(f"variant {label!r}: {e}") from e


def compare(config: ExperimentConfig, labels: Sequence[str]) -> Dict[str, List[StepReport]]:
    """Run one problem under several schemes; returns a trace per label."""
    traces = {}
    for label in labels:
        traces[label], _ = run(with_variant(config, label))
    return traces


def consistency_gap(trace: Sequence[StepReport]) -> float:
    """max over steps of |S ln R^n - E(phi^n)|."""
    return max((abs(r.ln_r_scaled - r.energy_original) for r in trace), default=0.0)
