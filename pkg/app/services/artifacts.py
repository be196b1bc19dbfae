"""On-disk formats: trace and convergence CSVs, binary snapshots and the run manifest."""
import csv
import hashlib
import json
import logging
import struct
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from app.core.errors import SnapshotFormatError
from app.schemas.report import ConvergenceReport, EmittedFile, RunManifest, StepReport
from app.services.spectral import Field, Grid

logger = logging.getLogger(__name__)

ARTIFACT_VERSION = "1"

TRACE_COLUMNS = (
    "step",
    "time",
    "energy_original",
    "ln_r_scaled",
    "xi",
    "u_of_xi",
    "lambda0",
    "dissipation",
    "mass",
)

SNAPSHOT_MAGIC = b"ESAVFLD1"
_HEADER = struct.Struct("<8sIIdd")

PathLike = Union[str, Path]


def fmt(value: Optional[float]) -> str:
    """17 significant digits (lossless for binary64); empty for a missing value."""
    if value is None:
        return ""
    return format(float(value), ".17g")


def sha256_of(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _prepare(path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# -- traces ---------------------------------------------------------------


def emit_trace(trace: Sequence[StepReport], path: PathLike) -> Path:
    """
    Write one CSV row per step under the TRACE_COLUMNS header.

    The lambda0 column is left empty for steps without relaxation.
    """
    path = _prepare(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRACE_COLUMNS)
        for r in trace:
            writer.writerow(
                [
                    str(r.step),
                    fmt(r.time),
                    fmt(r.energy_original),
                    fmt(r.ln_r_scaled),
                    fmt(r.xi),
                    fmt(r.u_of_xi),
                    fmt(r.lambda0),
                    fmt(r.dissipation),
                    fmt(r.mass),
                ]
            )
    logger.info(f"Wrote trace with {len(trace)} steps to {path}")
    return path


def read_trace(path: PathLike) -> List[StepReport]:
    """
    Parse a trace written by emit_trace.

    Raises:
        ValueError: Header mismatch or malformed rows
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if tuple(header or ()) != TRACE_COLUMNS:
            raise ValueError(f"{path}: unexpected trace header {header}")
        reports = []
        for row in reader:
            values = dict(zip(TRACE_COLUMNS, row))
            reports.append(
                StepReport(
                    step=int(values["step"]),
                    lambda0=float(values["lambda0"]) if values["lambda0"] else None,
                    **{k: float(values[k]) for k in TRACE_COLUMNS if k not in ("step", "lambda0")},
                )
            )
    return reports


def emit_aligned_traces(traces: Dict[str, Sequence[StepReport]], path: PathLike) -> Path:
    """Several traces side by side, one column block per label, keyed by step."""
    path = _prepare(path)
    labels = list(traces)
    fields = ("energy_original", "ln_r_scaled", "xi", "lambda0")
    by_step = {label: {r.step: r for r in traces[label]} for label in labels}
    steps = sorted({s for rows in by_step.values() for s in rows})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["step", "time"] + [f"{label}:{f}" for label in labels for f in fields])
        for step in steps:
            rows = [by_step[label].get(step) for label in labels]
            time = next(r.time for r in rows if r is not None)
            cells = [str(step), fmt(time)]
            for r in rows:
                cells += [fmt(getattr(r, f)) if r is not None else "" for f in fields]
            writer.writerow(cells)
    logger.info(f"Wrote comparison of {', '.join(labels)} to {path}")
    return path


# -- convergence tables ---------------------------------------------------


def emit_convergence_table(columns: Dict[str, ConvergenceReport], path: PathLike) -> Path:
    """
    One row per dt with an (error, rate) pair per column; the coarsest rate is empty.

    Raises:
        ValueError: Columns with different dt lists
    """
    path = _prepare(path)
    labels = list(columns)
    reports = [columns[label] for label in labels]
    dt_list = reports[0].dt_list if reports else []
    for label, rep in zip(labels, reports):
        if rep.dt_list != dt_list:
            raise ValueError(f"column {label!r} uses a different dt list")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["dt"] + [f"{label}:{c}" for label in labels for c in ("error", "rate")])
        for i, dt in enumerate(dt_list):
            row = [fmt(dt)]
            for rep in reports:
                row += [fmt(rep.errors[i]), fmt(rep.rates[i - 1]) if i > 0 else ""]
            writer.writerow(row)
    logger.info(f"Wrote convergence table ({', '.join(labels)}) to {path}")
    return path


# -- snapshots ------------------------------------------------------------


def emit_snapshot(
    field: Field,
    grid: Grid,
    path: PathLike,
    metadata: Optional[Dict[str, object]] = None,
) -> Path:
    """
    Write a field as magic, <u32 nx, ny>, <f64 lx, ly> and row-major (y, x) <f64 values.

    A JSON sidecar ``<path>.json`` carries the metadata (time, model, scheme, ...).
    """
    grid.check(field)
    path = _prepare(path)
    values = np.ascontiguousarray(field, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(SNAPSHOT_MAGIC, grid.nx, grid.ny, grid.lx, grid.ly))
        fh.write(values.tobytes(order="C"))
    sidecar = Path(f"{path}.json")
    sidecar.write_text(json.dumps(metadata or {}, sort_keys=True, indent=2), encoding="utf-8")
    logger.debug(f"Wrote snapshot {path}")
    return path


def read_snapshot(path: PathLike) -> tuple:
    """
    Read a snapshot back.

    Returns:
        (field, grid) with the field bit-identical to what was written

    Raises:
        SnapshotFormatError: Wrong magic or truncated payload
    """
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, nx, ny, lx, ly = _HEADER.unpack_from(data)
    if magic != SNAPSHOT_MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}")
    expected = _HEADER.size + 8 * nx * ny
    if len(data) != expected:
        raise SnapshotFormatError(f"{path}: expected {expected} bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(ny, nx)
    return values.astype(np.float64), Grid(lx, ly, nx, ny)


# -- manifest -------------------------------------------------------------


def write_manifest(
    output_dir: PathLike,
    command: str,
    config: Dict,
    files: Sequence[PathLike],
    timings: Optional[Dict[str, float]] = None,
    extras: Optional[Dict[str, float]] = None,
) -> Path:
    """Write manifest.json listing every emitted file with its SHA-256."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for f in files:
        f = Path(f)
        entries.append(EmittedFile(path=str(f.relative_to(output_dir)), sha256=sha256_of(f)))
        sidecar = Path(f"{f}.json")
        if sidecar.exists():
            entries.append(EmittedFile(path=str(sidecar.relative_to(output_dir)), sha256=sha256_of(sidecar)))
    manifest = RunManifest(
        artifact_version=ARTIFACT_VERSION,
        command=command,
        config=config,
        timings=timings or {},
        extras=extras or {},
        files=entries,
    )
    path = output_dir / "manifest.json"
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Wrote manifest with {len(entries)} files to {path}")
    return path


def verify_manifest(path: PathLike) -> List[str]:
    """
    Re-hash every file listed in a manifest.

    Returns:
        Relative paths that are missing or whose checksum differs (empty when all verify)
    """
    path = Path(path)
    manifest = RunManifest.model_validate_json(path.read_text(encoding="utf-8"))
    bad = []
    for entry in manifest.files:
        target = path.parent / entry.path
        if not target.exists() or sha256_of(target) != entry.sha256:
            bad.append(entry.path)
    if bad:
        logger.warning(f"{len(bad)} files in {path} failed verification")
    return bad
