"""Tests for traces, convergence tables, snapshots and manifests on disk."""
import json
import struct

import numpy as np
import pytest

from app.core.errors import SnapshotFormatError
from app.schemas.report import ConvergenceReport, StepReport
from app.services import artifacts
from app.services.spectral import make_grid


def _report(step, lambda0=None):
    return StepReport(
        step=step,
        time=0.1 * step,
        energy_original=1.0 / 3.0,
        ln_r_scaled=0.1 + 0.2,
        xi=1.0 - 1e-13,
        u_of_xi=1.0,
        lambda0=lambda0,
        dissipation=2.5,
        mass=-0.0,
    )


def test_fmt():
    """Test 17 significant digits and empty cells for missing values."""
    assert artifacts.fmt(None) == ""
    assert artifacts.fmt(0.1) == "0.10000000000000001"
    assert float(artifacts.fmt(1.0 / 3.0)) == 1.0 / 3.0


def test_trace_header_and_values(tmp_path):
    """Test the column order and that values survive the text format."""
    trace = [_report(1, lambda0=0.25), _report(2)]
    path = artifacts.emit_trace(trace, tmp_path / "trace.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "step,time,energy_original,ln_r_scaled,xi,u_of_xi,lambda0,dissipation,mass"
    assert lines[2].split(",")[6] == ""
    assert artifacts.read_trace(path) == trace


def test_read_trace_rejects_foreign_csv(tmp_path):
    """Test a CSV with another header is refused."""
    path = tmp_path / "other.csv"
    path.write_text("a,b\n1,2\n", encoding="utf-8")
    with pytest.raises(ValueError, match="header"):
        artifacts.read_trace(path)


def test_aligned_traces(tmp_path):
    """Test one column block per label, keyed by step."""
    path = artifacts.emit_aligned_traces(
        {"esav": [_report(1), _report(2)], "resav": [_report(1, 0.5)]}, tmp_path / "compare.csv"
    )
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    assert header[:4] == ["step", "time", "esav:energy_original", "esav:ln_r_scaled"]
    assert "resav:lambda0" in header
    assert len(lines) == 3
    # the shorter trace leaves its block empty
    assert lines[2].split(",")[-4:] == ["", "", "", ""]


def test_convergence_table(tmp_path):
    """Test the error/rate pairs and the empty first rate."""
    rep = ConvergenceReport(dt_list=[0.1, 0.05], dt_ref=0.001, errors=[0.04, 0.01], rates=[2.0])
    path = artifacts.emit_convergence_table({"resav-bdf2": rep}, tmp_path / "convergence.csv")
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "dt,resav-bdf2:error,resav-bdf2:rate"
    assert lines[1].split(",")[2] == ""
    assert float(lines[2].split(",")[2]) == 2.0


def test_convergence_table_rejects_mismatched_columns(tmp_path):
    """Test columns with different dt lists are refused."""
    a = ConvergenceReport(dt_list=[0.1, 0.05], dt_ref=0.001, errors=[1.0, 0.5], rates=[1.0])
    b = ConvergenceReport(dt_list=[0.2, 0.1], dt_ref=0.001, errors=[1.0, 0.5], rates=[1.0])
    with pytest.raises(ValueError):
        artifacts.emit_convergence_table({"a": a, "b": b}, tmp_path / "c.csv")


def test_snapshot_is_bit_exact(tmp_path):
    """Test a written field reads back bit for bit with its grid."""
    grid = make_grid(3.0, 5.0, 8, 4)
    field = np.random.default_rng(0).normal(size=grid.shape)
    field[0, 0] = -0.0
    path = artifacts.emit_snapshot(field, grid, tmp_path / "phi.bin", {"time": 1.5})
    values, read_grid = artifacts.read_snapshot(path)
    assert values.tobytes() == field.tobytes()
    assert read_grid == grid
    assert path.stat().st_size == 32 + 8 * 8 * 4
    assert json.loads((tmp_path / "phi.bin.json").read_text(encoding="utf-8")) == {"time": 1.5}


def test_snapshot_layout(tmp_path):
    """Test the header fields and the row-major (y, x) payload."""
    grid = make_grid(2.0, 4.0, 4, 2)
    field = np.arange(8, dtype=np.float64).reshape(grid.shape)
    path = artifacts.emit_snapshot(field, grid, tmp_path / "phi.bin")
    data = path.read_bytes()
    assert struct.unpack_from("<8sIIdd", data) == (b"ESAVFLD1", 4, 2, 2.0, 4.0)
    assert struct.unpack_from("<8d", data, 32) == tuple(float(v) for v in range(8))


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda b: b[:20], "truncated"),
        (lambda b: b"XXXXXXXX" + b[8:], "magic"),
        (lambda b: b[:-8], "expected"),
    ],
)
def test_read_snapshot_rejects_damage(tmp_path, mutate, message):
    """Test truncated files and foreign magic are reported."""
    grid = make_grid(1.0, 1.0, 4, 4)
    path = artifacts.emit_snapshot(grid.constant(1.0), grid, tmp_path / "phi.bin")
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(SnapshotFormatError, match=message):
        artifacts.read_snapshot(path)


def test_manifest_round_trip(tmp_path):
    """Test every file and sidecar is listed and verifies until modified."""
    grid = make_grid(1.0, 1.0, 4, 4)
    trace = artifacts.emit_trace([_report(1)], tmp_path / "trace.csv")
    snap = artifacts.emit_snapshot(grid.constant(0.5), grid, tmp_path / "snap" / "phi.bin", {"step": 0})
    path = artifacts.write_manifest(
        tmp_path, "run", {"dt": 0.1}, [trace, snap], timings={"run": 0.5}, extras={"final_energy": 1.0}
    )
    manifest = json.loads(path.read_text(encoding="utf-8"))
    assert manifest["artifact_version"] == artifacts.ARTIFACT_VERSION
    assert [f["path"] for f in manifest["files"]] == ["trace.csv", "snap/phi.bin", "snap/phi.bin.json"]
    assert manifest["files"][0]["sha256"] == artifacts.sha256_of(trace)
    assert artifacts.verify_manifest(path) == []

    trace.write_text("tampered\n", encoding="utf-8")
    assert artifacts.verify_manifest(path) == ["trace.csv"]
