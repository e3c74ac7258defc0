"""Tests for field, trace and report files."""

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from nlslab.artifacts import (
    SNAPSHOT_MANIFEST,
    TRACE_COLUMNS,
    artifact_path,
    dumps_report,
    read_field_csv,
    read_snapshots,
    write_field_csv,
    write_json,
    write_rows_csv,
    write_snapshots,
    write_trace_csv,
)
from nlslab.errors import UsageError
from nlslab.fields import NlsParams, RadialGrid, gaussian

CUBIC_3D = NlsParams(3, 3.0)


@pytest.fixture
def field():
    return gaussian(RadialGrid(10.0, 199), CUBIC_3D, 1.5, chirp=0.3)


def test_artifact_path():
    path = artifact_path(Path("runs"), "ground", "abc123", "json")
    assert path == Path("runs/ground-abc123.json")


# ---------------------------------------------------------------------------
# Field files
# ---------------------------------------------------------------------------


def test_field_csv_keeps_grid_and_values(tmp_path, field):
    path = write_field_csv(tmp_path / "sub" / "u.csv", field)
    assert path.read_text().splitlines()[0] == "r,re,im"
    back = read_field_csv(path, CUBIC_3D)
    assert back.grid.n == field.grid.n
    assert back.grid.r_max == pytest.approx(field.grid.r_max, rel=1e-12)
    np.testing.assert_array_equal(back.values, field.values)


def test_read_missing_field(tmp_path):
    with pytest.raises(UsageError, match="does not exist"):
        read_field_csv(tmp_path / "nope.csv", CUBIC_3D)


def test_read_rejects_wrong_columns(tmp_path):
    path = tmp_path / "u.csv"
    path.write_text("r,re\n0.1,1.0\n0.2,1.0\n")
    with pytest.raises(UsageError, match="three columns"):
        read_field_csv(path, CUBIC_3D)


def test_read_rejects_nonuniform_nodes(tmp_path):
    path = tmp_path / "u.csv"
    path.write_text("r,re,im\n0.1,1,0\n0.2,1,0\n0.35,1,0\n")
    with pytest.raises(UsageError, match="uniform"):
        read_field_csv(path, CUBIC_3D)


def test_read_rejects_garbage(tmp_path):
    path = tmp_path / "u.csv"
    path.write_text("r,re,im\nfoo,bar,baz\n")
    with pytest.raises(UsageError, match="field file"):
        read_field_csv(path, CUBIC_3D)


# ---------------------------------------------------------------------------
# Tables and reports
# ---------------------------------------------------------------------------


def test_trace_csv_header_and_cells(tmp_path):
    rows = [{"t": 0.1, "mass": 1.0, "linf": 2.0, "extra": "ignored"}]
    path = write_trace_csv(tmp_path / "trace.csv", rows)
    header, line = path.read_text().splitlines()
    assert header.split(",") == list(TRACE_COLUMNS)
    cells = line.split(",")
    assert cells[0] == "0.10000000000000001"
    assert cells[2] == ""


def test_rows_csv_booleans_and_column_order(tmp_path):
    path = write_rows_csv(tmp_path / "rows.csv", [{"b": True, "a": None}])
    assert path.read_text() == "b,a\ntrue,\n"


def test_report_json_is_strict():
    text = dumps_report({"x": math.inf, "y": np.float64(0.5), "gamma": Fraction(2, 3)})
    data = json.loads(text)
    assert data == {"gamma": "2/3", "x": "inf", "y": 0.5}


def test_report_json_converts_arrays_and_paths(tmp_path):
    data = json.loads(dumps_report({"a": np.arange(3), "p": tmp_path, "n": np.int64(4)}))
    assert data == {"a": [0, 1, 2], "n": 4, "p": str(tmp_path)}


def test_write_json_creates_parents(tmp_path):
    path = write_json(tmp_path / "a" / "b.json", {"ok": True})
    assert json.loads(path.read_text()) == {"ok": True}


# ---------------------------------------------------------------------------
# Snapshot directories
# ---------------------------------------------------------------------------


def test_snapshots_with_manifest(tmp_path, field):
    second = field.with_values(2 * field.values)
    write_snapshots(tmp_path / "snaps", [field, second], [0.0, 0.5], 3.25)
    assert (tmp_path / "snaps" / SNAPSHOT_MANIFEST).exists()
    fields, times, u0_mass = read_snapshots(tmp_path / "snaps", CUBIC_3D)
    assert times == [0.0, 0.5]
    assert u0_mass == 3.25
    np.testing.assert_array_equal(fields[1].values, second.values)


def test_snapshots_without_manifest(tmp_path, field):
    write_field_csv(tmp_path / "b.csv", field)
    write_field_csv(tmp_path / "a.csv", field.with_values(0 * field.values))
    fields, times, u0_mass = read_snapshots(tmp_path, CUBIC_3D)
    assert times == [None, None]
    assert u0_mass is None
    assert np.all(fields[0].values == 0)


def test_snapshot_directory_errors(tmp_path):
    with pytest.raises(UsageError, match="does not exist"):
        read_snapshots(tmp_path / "missing", CUBIC_3D)
    with pytest.raises(UsageError, match="no field files"):
        read_snapshots(tmp_path, CUBIC_3D)


def test_empty_manifest_is_usage_error(tmp_path):
    (tmp_path / SNAPSHOT_MANIFEST).write_text(json.dumps({"snapshots": [], "u0_mass": 1.0}))
    with pytest.raises(UsageError, match="no snapshots"):
        read_snapshots(tmp_path, CUBIC_3D)
