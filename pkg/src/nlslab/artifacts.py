"""Field, trace and report files: CSV with 17 significant digits, JSON reports."""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Iterable, Mapping
from dataclasses import asdict, is_dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import UsageError
from .fields import ComplexField, GradientMode, NlsParams, Quadrature, RadialGrid

logger = logging.getLogger(__name__)

FIELD_COLUMNS = ("r", "re", "im")
TRACE_COLUMNS = ("t", "mass", "energy", "grad_sq", "virial", "virial_rate", "r0", "lambda", "linf")
SNAPSHOT_MANIFEST = "snapshots.json"
_FLOAT_FORMAT = "%.17g"
# Relative tolerance on node spacing when reading a field back.
_SPACING_RTOL = 1e-9


def artifact_path(out_dir: Path, command: str, digest: str, suffix: str) -> Path:
    """<out_dir>/<command>-<digest>.<suffix>"""
    return out_dir / f"{command}-{digest}.{suffix}"


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


def write_field_csv(path: Path, u: ComplexField) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack((u.r, u.values.real, u.values.imag))
    np.savetxt(
        path,
        table,
        fmt=_FLOAT_FORMAT,
        delimiter=",",
        header=",".join(FIELD_COLUMNS),
        comments="",
    )
    return path


def read_field_csv(
    path: Path,
    params: NlsParams,
    quadrature: Quadrature = "trapezoid",
    gradient: GradientMode = "auto",
) -> ComplexField:
    """Read r,re,im rows back onto the grid r_j = j*dr, r_max = (n+1)*dr."""
    if not path.exists():
        raise UsageError(f"input file {path} does not exist")
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError as e:
        raise UsageError(f"{path} is not a r,re,im field file: {e}") from e
    if table.shape[1] != 3 or table.shape[0] < 1:
        raise UsageError(f"{path} must have the three columns {','.join(FIELD_COLUMNS)}")
    r = table[:, 0]
    dr = r[0]
    if not dr > 0 or not np.allclose(np.diff(r), dr, rtol=_SPACING_RTOL, atol=0.0):
        raise UsageError(f"{path}: nodes must be r_j = j*dr with uniform dr")
    grid = RadialGrid((r.size + 1) * dr, r.size, quadrature=quadrature, gradient=gradient)
    return ComplexField(grid, table[:, 1] + 1j * table[:, 2], params)


# ---------------------------------------------------------------------------
# Tables and reports
# ---------------------------------------------------------------------------


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return _FLOAT_FORMAT % value
    return str(value)


def write_rows_csv(
    path: Path, rows: Iterable[Mapping], columns: Iterable[str] | None = None
) -> Path:
    rows = list(rows)
    columns = list(columns) if columns is not None else list(rows[0]) if rows else []
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(row.get(name)) for name in columns])
    return path


def write_trace_csv(path: Path, rows: Iterable[Mapping]) -> Path:
    return write_rows_csv(path, rows, TRACE_COLUMNS)


def to_jsonable(value):
    """Plain JSON types; non-finite floats become strings so the output stays strict JSON."""
    if is_dataclass(value) and not isinstance(value, type):
        return to_jsonable(asdict(value))
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else str(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, Path):
        return str(value)
    return value


def dumps_report(record) -> str:
    return json.dumps(to_jsonable(record), indent=2, sort_keys=True) + "\n"


def write_json(path: Path, record) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dumps_report(record))
    logger.info("wrote %s", path)
    return path


# ---------------------------------------------------------------------------
# Snapshot directories
# ---------------------------------------------------------------------------


def write_snapshots(
    directory: Path, fields: list[ComplexField], times: list[float], u0_mass: float
) -> Path:
    """field-<index>.csv per snapshot plus a manifest with times and the reference mass."""
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for index, (u, t) in enumerate(zip(fields, times)):
        name = f"field-{index:05d}.csv"
        write_field_csv(directory / name, u)
        entries.append({"file": name, "t": t})
    return write_json(directory / SNAPSHOT_MANIFEST, {"u0_mass": u0_mass, "snapshots": entries})


def read_snapshots(
    directory: Path, params: NlsParams
) -> tuple[list[ComplexField], list[float | None], float | None]:
    """Fields, times and reference mass of a snapshot directory.

    Without a manifest every *.csv is read in name order with unknown times.
    """
    if not directory.is_dir():
        raise UsageError(f"snapshot directory {directory} does not exist")
    manifest = directory / SNAPSHOT_MANIFEST
    if manifest.exists():
        data = json.loads(manifest.read_text())
        entries = data.get("snapshots", [])
        if not entries:
            raise UsageError(f"no snapshots in {manifest}")
        fields = [read_field_csv(directory / e["file"], params) for e in entries]
        return fields, [e.get("t") for e in entries], data.get("u0_mass")
    files = sorted(directory.glob("*.csv"))
    if not files:
        raise UsageError(f"no field files in {directory}")
    fields = [read_field_csv(f, params) for f in files]
    return fields, [None] * len(fields), None
