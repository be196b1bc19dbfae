"""
Command-line front end.

Usage:
    python -m app run configs/example1.cfg
    python -m app converge configs/example1.cfg --dts 1/16 1/32 1/64 1/128 --dt-ref 1/2048 --orders 1 2 3 4
    python -m app compare configs/example1.cfg --schemes esav esav:10 resav
    python -m app examples 1 --desk

Exit codes: 0 on success, 2 for configuration or usage errors, 3 when a run
aborts (blow-up guard, overflow, singular operator), 1 on I/O failures.
"""
import argparse
import hashlib
import logging
import sys
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from app.core.config import settings
from app.core.errors import ConfigError, SimulationError
from app.schemas.experiment import ExperimentConfig
from app.schemas.report import ConvergenceReport, StepReport
from app.services import artifacts, harness
from app.services.config_file import emit_config, parse_config, parse_number, write_config
from app.services.models import build_model
from app.services.presets import PRESET_NAMES, Preset, get_preset
from app.services.spectral import make_grid

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SIMULATION = 3
EXIT_IO = 1


def resolve_output_dir(cli_value: Optional[str], config: Optional[ExperimentConfig] = None) -> Path:
    """--output-dir, then the config's output_dir, then settings.OUTPUT_DIR."""
    if cli_value:
        return Path(cli_value)
    if config is not None and config.output_dir:
        return Path(config.output_dir)
    return Path(settings.OUTPUT_DIR)


def _time_value(text: str) -> float:
    try:
        value = float(parse_number(text))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e
    if value <= 0:
        raise argparse.ArgumentTypeError(f"time step must be positive, got {text}")
    return value


def _safe(label: str) -> str:
    return label.replace(":", "_S")


class _Outputs:
    """Collects emitted files and timings for the run manifest."""

    def __init__(self, root: Path) -> None:
        self.root = root
        self.files: List[Path] = []
        self.timings: Dict[str, float] = {}
        self.extras: Dict[str, float] = {}

    def add(self, path: Path) -> Path:
        self.files.append(path)
        return path

    def manifest(self, command: str, config: ExperimentConfig) -> Path:
        return artifacts.write_manifest(
            self.root, command, config.model_dump(), self.files, self.timings, self.extras
        )


def _run_and_emit(config: ExperimentConfig, out: _Outputs, name: str) -> List[StepReport]:
    started = time.perf_counter()
    trace, snapshots = harness.run(config)
    out.timings[name] = time.perf_counter() - started
    out.add(artifacts.emit_trace(trace, out.root / f"{name}.csv"))

    if snapshots:
        g = config.grid
        grid = make_grid(g.lx, g.ly, g.nx, g.ny)
        model = build_model(config.model, grid, s_scale=config.s_scale)
        checksum = hashlib.sha256(emit_config(config).encode("utf-8")).hexdigest()
        for snap in snapshots:
            meta = {
                "time": snap.time,
                "step": snap.step,
                "model": config.model.kind,
                "scheme": config.scheme,
                "order": config.order,
                "s_scale": config.s_scale,
                "energy_shift": model.energy_shift,
                "config_sha256": checksum,
            }
            path = out.root / f"{name}_t{snap.time:g}.bin"
            out.add(artifacts.emit_snapshot(snap.values, grid, path, meta))

    out.extras[f"{name}:consistency_gap"] = harness.consistency_gap(trace)
    if trace:
        out.extras[f"{name}:final_energy"] = trace[-1].energy_original
    return trace


def _convergence_tables(
    config: ExperimentConfig,
    columns: Sequence[tuple],
    dt_list: Sequence[float],
    dt_ref: float,
    refined_startup: bool,
    out: _Outputs,
    name: str,
) -> Dict[str, ConvergenceReport]:
    reports = {}
    for label, order in columns:
        started = time.perf_counter()
        variant = harness.with_variant(config, label, order)
        key = f"{label}-bdf{variant.order}"
        reports[key] = harness.convergence_study(variant, dt_list, dt_ref, refined_startup=refined_startup)
        out.timings[f"{name}:{key}"] = time.perf_counter() - started
    out.add(artifacts.emit_convergence_table(reports, out.root / f"{name}.csv"))
    return reports


# -- subcommands ----------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    config = parse_config(args.config)
    out = _Outputs(resolve_output_dir(args.output_dir, config))
    out.add(write_config(config, out.root / "config.cfg"))
    trace = _run_and_emit(config, out, "trace")
    out.manifest("run", config)
    print(f"{len(trace)} steps, final energy {trace[-1].energy_original:.10g}, output in {out.root}")
    return EXIT_OK


def cmd_converge(args: argparse.Namespace) -> int:
    config = parse_config(args.config)
    out = _Outputs(resolve_output_dir(args.output_dir, config))
    schemes = args.schemes or [config.scheme]
    orders = args.orders or [config.order]
    columns = [(label, k) for label in schemes for k in orders]
    reports = _convergence_tables(
        config, columns, args.dts, args.dt_ref, not args.plain_startup, out, "convergence"
    )
    out.manifest("converge", config)
    for key, rep in reports.items():
        rates = ", ".join("-" if r is None else f"{r:.4f}" for r in rep.rates)
        print(f"{key}: rates {rates}")
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    config = parse_config(args.config)
    out = _Outputs(resolve_output_dir(args.output_dir, config))
    traces = {}
    for label in args.schemes:
        traces[label] = _run_and_emit(harness.with_variant(config, label), out, f"trace_{_safe(label)}")
    out.add(artifacts.emit_aligned_traces(traces, out.root / "compare.csv"))
    out.manifest("compare", config)
    for label, trace in traces.items():
        print(f"{label}: max |S ln R - E| = {harness.consistency_gap(trace):.6e}")
    return EXIT_OK


def run_preset(preset: Preset, root: Path, convergence: bool = True) -> _Outputs:
    """Base run, energy-step variants, scheme comparison and convergence tables of a preset."""
    out = _Outputs(root)
    config = preset.config
    out.add(write_config(config, root / "config.cfg"))
    logger.info(f"Example {preset.name}: {preset.description}")
    _run_and_emit(config, out, "trace")

    for dt in preset.energy_dts:
        if dt == config.dt:
            continue
        variant = config.model_copy(update={"dt": dt, "snapshot_times": []})
        _run_and_emit(variant, out, f"trace_dt{dt:g}")

    if preset.compare_labels:
        traces = {}
        for label in preset.compare_labels:
            variant = harness.with_variant(config, label)
            if preset.compare_dt is not None:
                variant = variant.model_copy(update={"dt": preset.compare_dt})
            traces[label] = _run_and_emit(variant, out, f"trace_{_safe(label)}")
        out.add(artifacts.emit_aligned_traces(traces, root / "compare.csv"))

    if convergence and preset.tables:
        for table, columns in preset.tables.items():
            _convergence_tables(
                config, columns, preset.dt_list, preset.dt_ref, True, out, f"convergence_{table}"
            )
    out.manifest(f"examples {preset.name}", config)
    return out


def cmd_examples(args: argparse.Namespace) -> int:
    preset = get_preset(args.example, desk=args.desk)
    root = resolve_output_dir(args.output_dir) / f"example{preset.name}"
    out = run_preset(preset, root, convergence=not args.no_convergence)
    print(f"Example {preset.name}: {len(out.files)} files in {root}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m app",
        description="E-SAV / RE-SAV gradient-flow solver and benchmark runner",
    )
    parser.add_argument("--log-level", default=settings.LOG_LEVEL, help="Logging level")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_output(p: argparse.ArgumentParser) -> argparse.ArgumentParser:
        p.add_argument("--output-dir", help=f"Output directory (default: config, then {settings.OUTPUT_DIR})")
        return p

    p = with_output(sub.add_parser("run", help="Run one simulation"))
    p.add_argument("config", help="Experiment file")
    p.set_defaults(handler=cmd_run)

    p = with_output(sub.add_parser("converge", help="Temporal convergence study"))
    p.add_argument("config", help="Experiment file")
    p.add_argument("--dts", nargs="+", type=_time_value, required=True, help="Coarse steps, e.g. 1/16 1/32")
    p.add_argument("--dt-ref", type=_time_value, required=True, help="Reference step")
    p.add_argument("--orders", nargs="+", type=int, choices=[1, 2, 3, 4], help="BDF orders (default: config)")
    p.add_argument("--schemes", nargs="+", help="Scheme labels name[:S] (default: config)")
    p.add_argument("--plain-startup", action="store_true", help="Do not refine the BDF start-up ramp")
    p.set_defaults(handler=cmd_converge)

    p = with_output(sub.add_parser("compare", help="Run several schemes on one problem"))
    p.add_argument("config", help="Experiment file")
    p.add_argument("--schemes", nargs="+", required=True, help="Scheme labels name[:S]")
    p.set_defaults(handler=cmd_compare)

    p = with_output(sub.add_parser("examples", help="Run a built-in benchmark preset"))
    p.add_argument("example", choices=PRESET_NAMES, help="Preset name")
    p.add_argument("--desk", action="store_true", help="Reduced resolution and horizon")
    p.add_argument("--no-convergence", action="store_true", help="Skip the convergence tables")
    p.set_defaults(handler=cmd_examples)
    return parser


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parse argv and dispatch to a subcommand.

    Returns:
        Process exit code
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_CONFIG

    logging.basicConfig(
        level=args.log_level.upper(),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )
    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error(f"Configuration error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationError as e:
        logger.error(f"Simulation aborted: {e}")
        print(f"error: simulation aborted: {e}", file=sys.stderr)
        return EXIT_SIMULATION
    except OSError as e:
        logger.error(f"I/O error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
