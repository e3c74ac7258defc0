"""Tests for command-line dispatch, exit codes and the artifacts each subcommand writes."""

import json
import logging
import textwrap
from unittest.mock import MagicMock, patch

import pytest

from nlslab.main import EXIT_ERROR, EXIT_FAILED_CHECK, EXIT_OK, build_parser, run

_SMALL_GRID = """\
    grid:
      r_max: 10.0
      n: 999
"""


@pytest.fixture(autouse=True)
def _isolated(tmp_path, monkeypatch):
    monkeypatch.setenv("NLS_LAB_CONFIG_PATH", str(tmp_path / "absent.yml"))
    monkeypatch.setenv("NLS_LAB_THREADS", "2")
    yield
    logging.getLogger().setLevel(logging.WARNING)


def _config(tmp_path, text):
    path = tmp_path / "nlslab.yml"
    path.write_text(textwrap.dedent(text))
    return str(path)


def _only(out_dir, pattern):
    matches = list(out_dir.glob(pattern))
    assert len(matches) == 1, matches
    return matches[0]


# ---------------------------------------------------------------------------
# Parsing and exit codes
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "argv",
    [
        ["ground"],
        ["classify"],
        ["evolve"],
        ["concentrate", "--trace-dir", "x"],
        ["sphere"],
        ["exponents", "--p", "3", "--N", "3"],
    ],
)
def test_subcommands_registered(argv):
    args = build_parser().parse_args(argv)
    assert args.command == argv[0]
    assert callable(args.handler)


def test_unknown_command_is_usage_error(capsys):
    assert run(["bogus"]) == EXIT_ERROR
    assert "UsageError" in capsys.readouterr().err


def test_missing_required_option(capsys):
    assert run(["exponents", "--p", "3"]) == EXIT_ERROR
    assert "--N" in capsys.readouterr().err


def test_missing_explicit_config_is_usage_error(tmp_path, capsys):
    argv = ["exponents", "--p", "3", "--N", "3", "--config", str(tmp_path / "nope.yml")]
    assert run(argv + ["--out-dir", str(tmp_path)]) == EXIT_ERROR
    assert "does not exist" in capsys.readouterr().err
    assert not list(tmp_path.glob("exponents-*.json"))


def test_bad_override_is_usage_error(tmp_path, capsys):
    assert run(["sphere", "--mass", "-1", "--out-dir", str(tmp_path)]) == EXIT_ERROR
    assert "invalid sphere option" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# exponents
# ---------------------------------------------------------------------------


def test_exponents_constant_radius(tmp_path, capsys):
    assert run(["exponents", "--p", "5", "--N", "3", "--out-dir", str(tmp_path)]) == EXIT_OK
    record = json.loads(capsys.readouterr().out)
    assert record == {"N": 3, "gamma": 1, "p": 5, "r0_exponent": 0, "regime": "ConstantRadius"}
    assert json.loads(_only(tmp_path, "exponents-*.json").read_text()) == record


def test_exponents_expanding_fraction(tmp_path, capsys):
    assert run(["exponents", "--p", "7", "--N", "3", "--out-dir", str(tmp_path)]) == EXIT_OK
    record = json.loads(capsys.readouterr().out)
    assert record["gamma"] == "6/5"
    assert record["r0_exponent"] == "-1/5"
    assert record["regime"] == "Expanding"


def test_exponents_subcritical(tmp_path, capsys):
    assert run(["exponents", "--p", "2", "--N", "3", "--out-dir", str(tmp_path)]) == EXIT_ERROR
    assert "NotSupercritical" in capsys.readouterr().err


def test_same_options_same_artifact(tmp_path):
    for _ in range(2):
        run(["exponents", "--p", "5", "--N", "3", "--out-dir", str(tmp_path)])
    run(["exponents", "--p", "7", "--N", "3", "--out-dir", str(tmp_path)])
    assert len(list(tmp_path.glob("exponents-*.json"))) == 2


# ---------------------------------------------------------------------------
# ground
# ---------------------------------------------------------------------------


def test_ground_writes_profile_and_constants(tmp_path):
    assert run(["ground", "--gn-check", "5", "--out-dir", str(tmp_path)]) == EXIT_OK
    record = json.loads(_only(tmp_path, "ground-*.json").read_text())
    assert record["grad_over_mass"] == pytest.approx(1.0, rel=1e-5)
    assert record["lp1_over_mass"] == pytest.approx(2.0, rel=1e-5)
    assert record["measured_product"] == pytest.approx(record["closed_form_product"], rel=1e-4)
    assert record["gn_check"]["count"] == 5
    assert record["gn_check"]["max_ratio"] <= 1.0 + 1e-6
    assert _only(tmp_path, "ground-*.csv").read_text().startswith("r,re,im\n")


def test_ground_rejects_mass_critical(tmp_path, capsys):
    assert run(["ground", "--N", "2", "--p", "3", "--out-dir", str(tmp_path)]) == EXIT_ERROR
    assert "ValueError" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------


def test_classify_small_gaussian_global(tmp_path):
    argv = ["classify", "--gaussian", "0.1", "--gaussian-a", "0.5", "--out-dir", str(tmp_path)]
    assert run(argv) == EXIT_OK
    record = json.loads(_only(tmp_path, "classify-*.json").read_text())
    assert record["verdict"] == "Global"


def test_classify_indeterminate_exit_code(tmp_path):
    report = MagicMock(verdict="Indeterminate")
    report.to_record.return_value = {"verdict": "Indeterminate", "route": "ThresholdFail"}
    argv = ["classify", "--gaussian", "1.0", "--delta", "0.2", "--out-dir", str(tmp_path)]
    with (
        patch("nlslab.main._ground") as ground,
        patch("nlslab.main.classify", return_value=report) as classify,
    ):
        code = run(argv)
    assert code == EXIT_FAILED_CHECK
    ground.assert_called_once()
    assert classify.call_args.kwargs["delta"] == 0.2
    assert classify.call_args.kwargs["radial"] is True


def test_classify_needs_initial_data(tmp_path, capsys):
    assert run(["classify", "--out-dir", str(tmp_path)]) == EXIT_ERROR
    assert "initial data" in capsys.readouterr().err


def test_classify_rejects_two_sources(tmp_path, capsys):
    argv = ["classify", "--gaussian", "1", "--input", "u.csv", "--out-dir", str(tmp_path)]
    assert run(argv) == EXIT_ERROR
    assert "not both" in capsys.readouterr().err


def test_classify_missing_input_file(tmp_path, capsys):
    argv = ["classify", "--input", str(tmp_path / "u.csv"), "--out-dir", str(tmp_path)]
    assert run(argv) == EXIT_ERROR
    assert "does not exist" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# evolve and concentrate
# ---------------------------------------------------------------------------


def test_evolve_then_concentrate(tmp_path):
    config = _config(tmp_path, _SMALL_GRID)
    snaps = tmp_path / "snaps"
    out = tmp_path / "out"
    argv = ["evolve", "--config", config, "--gaussian", "0.5", "--tmax", "0.05"]
    argv += ["--snapshots", str(snaps), "--out-dir", str(out)]
    assert run(argv) == EXIT_OK
    summary = json.loads(_only(out, "evolve-*.json").read_text())
    assert summary["stop_reason"] == "HorizonReached"
    assert summary["t_final"] == pytest.approx(0.05)
    assert summary["mass_drift"] < 1e-10
    assert summary["virial"]["samples"] == summary["samples"]
    header = _only(out, "evolve-*.csv").read_text().splitlines()[0]
    assert header.startswith("t,mass,energy")
    assert (snaps / "snapshots.json").exists()

    argv = ["concentrate", "--config", config, "--trace-dir", str(snaps), "--out-dir", str(out)]
    assert run(argv) == EXIT_OK
    report = json.loads(_only(out, "concentrate-*.json").read_text())
    assert report["snapshots"] == summary["samples"]
    assert report["scenario"] in {"Tight", "Wide", "Both", "Neither"}
    rows = _only(out, "concentrate-*.csv").read_text().splitlines()
    assert len(rows) == summary["samples"] + 1


def test_evolve_trace_path_option(tmp_path):
    config = _config(tmp_path, _SMALL_GRID)
    trace = tmp_path / "trace.csv"
    argv = ["evolve", "--config", config, "--gaussian", "0.1", "--tmax", "0.02"]
    argv += ["--out", str(trace), "--out-dir", str(tmp_path)]
    assert run(argv) == EXIT_OK
    assert trace.exists()
    assert not list(tmp_path.glob("evolve-*.csv"))


def test_concentrate_missing_directory(tmp_path, capsys):
    argv = ["concentrate", "--trace-dir", str(tmp_path / "none"), "--out-dir", str(tmp_path)]
    assert run(argv) == EXIT_ERROR
    assert "does not exist" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# sphere
# ---------------------------------------------------------------------------


def test_sphere_audit_passes(tmp_path):
    argv = ["sphere", "--mass", "1", "--T", "1", "--audit", "--out-dir", str(tmp_path)]
    assert run(argv) == EXIT_OK
    record = json.loads(_only(tmp_path, "sphere-*.json").read_text())
    assert record["audit"]["ok"] is True
    assert record["params"]["beta"] == pytest.approx(2.620741, rel=1e-4)
    assert record["cancellation"]["mass_pair"]["residual"] < 1e-8


def test_sphere_snapshots_exported(tmp_path):
    snaps = tmp_path / "snaps"
    assert run(["sphere", "--snapshots", str(snaps), "--out-dir", str(tmp_path)]) == EXIT_OK
    manifest = json.loads((snaps / "snapshots.json").read_text())
    assert manifest["u0_mass"] == 1.0
    assert len(manifest["snapshots"]) == 5
    record = json.loads(_only(tmp_path, "sphere-*.json").read_text())
    assert "audit" not in record


def test_sphere_failed_audit_exit_code(tmp_path, capsys):
    config = _config(tmp_path, """\
        sphere:
          tolerance: 1.0e-30
    """)
    argv = ["sphere", "--audit", "--config", config, "--out-dir", str(tmp_path)]
    assert run(argv) == EXIT_FAILED_CHECK
    assert "AuditFailure" in capsys.readouterr().err
    record = json.loads(_only(tmp_path, "sphere-*.json").read_text())
    assert record["audit"]["ok"] is False


def test_concentrate_empty_manifest(tmp_path, capsys):
    snaps = tmp_path / "snaps"
    snaps.mkdir()
    (snaps / "snapshots.json").write_text(json.dumps({"snapshots": []}))
    argv = ["concentrate", "--trace-dir", str(snaps), "--out-dir", str(tmp_path)]
    assert run(argv) == EXIT_ERROR
    assert "no snapshots" in capsys.readouterr().err
