"""nlslab entry point: parses the command line and dispatches to the analysis handlers."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from .artifacts import (
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
from .classifier import classify
from .concentration import Cutoffs, classify_scenario, concentration_report, smallfreq_constant
from .config import RunConfig, config_hash, load_config
from .errors import (
    AuditFailure,
    CancellationFailure,
    FitIllConditioned,
    IdentityViolation,
    InsufficientSamples,
    NlsLabError,
    UsageError,
)
from .evolver import StepControls, blowup_rate_fit, evolve, virial_consistency
from .fields import ComplexField, NlsParams, RadialGrid, gaussian, mass, random_bumps
from .ground_state import (
    GroundState,
    closed_form_product,
    derive_constants,
    gn_ratio,
    measured_product,
    solve_ground_state,
)
from .sphere import (
    conservation_audit,
    derive_params,
    general_exponents,
    refined_cancellation,
    residual_scaling,
    snapshot,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [nlslab] %(levelname)s %(message)s"
LOG_DATEFMT = "%Y-%m-%dT%H:%M:%S"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED_CHECK = 2

# Depth of the refined cancellation check.
CANCELLATION_TAU = 1e-4

_FAILED_CHECKS = (AuditFailure, CancellationFailure, IdentityViolation)
# Arguments that do not change what a run computes.
_UNHASHED = {"handler", "config", "out_dir", "verbose", "out"}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(message)


def _configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, datefmt=LOG_DATEFMT)
    logging.getLogger().setLevel(level)


def _override(config: RunConfig, section: str, **values) -> RunConfig:
    """Apply command-line values over one config section, re-validating the whole."""
    updates = {k: v for k, v in values.items() if v is not None}
    if not updates:
        return config
    data = config.model_dump()
    data[section].update(updates)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise UsageError(f"invalid {section} option:\n{e}") from e


def _run_digest(config: RunConfig, args: argparse.Namespace) -> str:
    options = {k: v for k, v in vars(args).items() if k not in _UNHASHED}
    return config_hash(config, json.dumps(options, sort_keys=True, default=str))


def _params(config: RunConfig) -> NlsParams:
    try:
        return NlsParams(config.problem.N, config.problem.p)
    except ValueError as e:
        raise UsageError(str(e)) from e


def _grid(config: RunConfig) -> RadialGrid:
    g = config.grid
    return RadialGrid(g.r_max, g.n, quadrature=g.quadrature, gradient=g.gradient)


def _ground(config: RunConfig, params: NlsParams) -> GroundState:
    gsc = config.ground_state
    gs = solve_ground_state(
        params,
        _grid(config),
        gsc.tol,
        bracket=gsc.bracket,
        tail_ratio=gsc.tail_ratio,
        attempts=gsc.attempts,
        widen_factor=gsc.widen_factor,
    )
    return derive_constants(gs)


def _initial_data(args: argparse.Namespace, config: RunConfig, params: NlsParams) -> ComplexField:
    if args.input is not None and args.gaussian is not None:
        raise UsageError("give either --input or --gaussian, not both")
    if args.input is not None:
        g = config.grid
        return read_field_csv(args.input, params, quadrature=g.quadrature, gradient=g.gradient)
    if args.gaussian is not None:
        return gaussian(_grid(config), params, args.gaussian, args.gaussian_a)
    raise UsageError("initial data needed: --input FIELD.csv or --gaussian AMPLITUDE")


# ---------------------------------------------------------------------------
# Handlers
# ---------------------------------------------------------------------------


def handle_ground(args: argparse.Namespace, config: RunConfig) -> int:
    config = _override(config, "problem", N=args.N, p=args.p)
    params = _params(config)
    gs = _ground(config, params)
    record = gs.to_record()
    record["grad_over_mass"] = gs.grad_Q_sq / gs.mass_Q
    record["lp1_over_mass"] = gs.lp1_Q / gs.mass_Q
    record["closed_form_product"] = closed_form_product(params, gs.mass_Q)
    record["measured_product"] = measured_product(gs)
    if args.gn_check:
        rng = np.random.default_rng(config.seed)
        bumps = random_bumps(gs.profile.grid, params, args.gn_check, rng)
        ratios = [gn_ratio(u, gs) for u in bumps]
        record["gn_check"] = {"count": args.gn_check, "max_ratio": max(ratios)}
        logger.info("GN ratio over %d random fields: max %.6f", args.gn_check, max(ratios))

    digest = _run_digest(config, args)
    write_field_csv(artifact_path(config.output_dir, "ground", digest, "csv"), gs.profile)
    write_json(artifact_path(config.output_dir, "ground", digest, "json"), record)
    return EXIT_OK


def handle_classify(args: argparse.Namespace, config: RunConfig) -> int:
    config = _override(config, "problem", N=args.N, p=args.p)
    config = _override(config, "classifier", delta=args.delta)
    params = _params(config)
    u0 = _initial_data(args, config, params)
    gs = _ground(config, params)
    cc = config.classifier
    report = classify(
        u0,
        gs,
        finite_variance=args.finite_variance,
        radial=not args.nonradial,
        delta=cc.delta,
        tie_tol=cc.tie_tol,
        c1=cc.c1,
        c2=cc.c2,
    )
    digest = _run_digest(config, args)
    write_json(artifact_path(config.output_dir, "classify", digest, "json"), report.to_record())
    return EXIT_FAILED_CHECK if report.verdict == "Indeterminate" else EXIT_OK


def handle_evolve(args: argparse.Namespace, config: RunConfig) -> int:
    config = _override(config, "problem", N=args.N, p=args.p)
    config = _override(
        config, "steps", t_max=args.tmax, dt0=args.dt, keep_fields=True if args.snapshots else None
    )
    params = _params(config)
    u0 = _initial_data(args, config, params)
    trace = evolve(u0, StepControls.from_config(config.steps))

    first, last = trace.functionals[0], trace.functionals[-1]
    summary = {
        "stop_reason": trace.stop_reason,
        "t_final": trace.times[-1],
        "steps": len(trace.dt_history),
        "samples": len(trace.times),
        "mass_drift": abs(last.mass - first.mass) / first.mass if first.mass else 0.0,
        "energy_drift": abs(last.energy - first.energy) / abs(first.energy)
        if first.energy
        else abs(last.energy),
        "grad_growth": trace.grad_norm[-1] / trace.grad_norm[0] if trace.grad_norm[0] else 1.0,
    }
    try:
        summary["virial"] = virial_consistency(trace)
    except InsufficientSamples as e:
        logger.warning("virial check skipped: %s", e)
        summary["virial"] = None
    if trace.stop_reason == "BlowupDetected":
        try:
            summary["blowup_fit"] = blowup_rate_fit(trace)
        except (InsufficientSamples, FitIllConditioned) as e:
            logger.warning("blow-up fit skipped: %s", e)
            summary["blowup_fit"] = {"error": f"{type(e).__name__}: {e}"}

    digest = _run_digest(config, args)
    trace_path = args.out or artifact_path(config.output_dir, "evolve", digest, "csv")
    write_trace_csv(trace_path, trace.rows())
    write_json(artifact_path(config.output_dir, "evolve", digest, "json"), summary)
    if args.snapshots:
        write_snapshots(args.snapshots, trace.fields, trace.times, first.mass)
    return EXIT_OK


def handle_concentrate(args: argparse.Namespace, config: RunConfig) -> int:
    config = _override(config, "concentration", c1=args.c1, c2=args.c2)
    fields, times, stored_mass = read_snapshots(args.trace_dir, _params(config))
    u0_mass = args.mass or stored_mass or mass(fields[0])
    cutoffs = Cutoffs.from_config(config.concentration)
    reports = concentration_report(fields, u0_mass, cutoffs, times)

    digest = _run_digest(config, args)
    write_rows_csv(
        artifact_path(config.output_dir, "concentrate", digest, "csv"),
        [rep.to_record() for rep in reports],
    )
    summary = {
        "u0_mass": u0_mass,
        "snapshots": len(reports),
        "scenario": classify_scenario(reports) if len(reports) >= 2 else None,
        "smallfreq_constant": smallfreq_constant(
            cutoffs, fields[0].grid.wavenumbers / (2 * np.pi)
        ),
        "bound_violations": sum(
            not check.ok for rep in reports for check in rep.bound_checks.values()
        ),
    }
    write_json(artifact_path(config.output_dir, "concentrate", digest, "json"), summary)
    return EXIT_OK


def handle_sphere(args: argparse.Namespace, config: RunConfig) -> int:
    config = _override(config, "sphere", mass=args.mass, T=args.T, theta=args.theta)
    sc = config.sphere
    sp = derive_params(sc.mass, sc.T, sc.theta)
    digest = _run_digest(config, args)
    out = artifact_path(config.output_dir, "sphere", digest, "json")
    record: dict = {"params": sp.to_record()}

    if args.snapshots:
        fields = [snapshot(sp, tau, sc.points_per_lambda, sc.y_cut_widths) for tau in sc.ladder]
        write_snapshots(args.snapshots, fields, [sc.T - tau for tau in sc.ladder], sc.mass)

    failure: NlsLabError | None = None
    if args.audit:
        audit = conservation_audit(
            sp,
            sc.ladder,
            sc.rate_ladder,
            y_cut_widths=sc.y_cut_widths,
            y_points=sc.y_points,
            points_per_lambda=sc.points_per_lambda,
            tolerance=sc.tolerance,
            raise_on_failure=False,
        )
        record["audit"] = audit.to_record()
        record["residual_scaling"] = residual_scaling(sp, sc.ladder, sc.y_cut_widths, sc.y_points)
        if audit.failed:
            failure = AuditFailure(audit, audit.failed)
        if CANCELLATION_TAU < sc.T:
            try:
                record["cancellation"] = refined_cancellation(
                    sp, CANCELLATION_TAU, sc.y_cut_widths, sc.y_points
                )
            except CancellationFailure as e:
                record["cancellation"] = {"pair": e.pair, "residual": e.residual}
                failure = failure or e

    write_json(out, record)
    if failure is not None:
        raise failure
    return EXIT_OK


def handle_exponents(args: argparse.Namespace, config: RunConfig) -> int:
    record = general_exponents(args.p, args.N).to_record()
    sys.stdout.write(dumps_report(record))
    digest = _run_digest(config, args)
    write_json(artifact_path(config.output_dir, "exponents", digest, "json"), record)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, default=None, help="YAML config (default nlslab.yml)")
    sub.add_argument("--out-dir", type=Path, default=None, help="Directory for artifacts")
    sub.add_argument("--verbose", action="store_true", help="Log at DEBUG level")


def _add_problem(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--N", type=int, default=None, help="Space dimension")
    sub.add_argument("--p", type=float, default=None, help="Nonlinearity power")


def _add_initial_data(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--input", type=Path, default=None, help="Field CSV with columns r,re,im")
    sub.add_argument(
        "--gaussian",
        type=float,
        default=None,
        metavar="A",
        help="Use A*exp(-a r^2) on the config grid",
    )
    sub.add_argument("--gaussian-a", type=float, default=1.0, metavar="a")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nlslab", description="Numerical lab for radial focusing NLS blow-up")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ground = subs.add_parser("ground", help="Ground state and threshold constants")
    _add_common(ground)
    _add_problem(ground)
    ground.add_argument(
        "--gn-check",
        type=int,
        default=0,
        metavar="K",
        help="Max Gagliardo-Nirenberg ratio over K random fields",
    )
    ground.set_defaults(handler=handle_ground)

    cls = subs.add_parser("classify", help="Global existence / blow-up dichotomy for initial data")
    _add_common(cls)
    _add_problem(cls)
    _add_initial_data(cls)
    cls.add_argument("--finite-variance", action="store_true")
    cls.add_argument("--nonradial", action="store_true", help="Do not assume radial symmetry")
    cls.add_argument("--delta", type=float, default=None)
    cls.set_defaults(handler=handle_classify)

    ev = subs.add_parser("evolve", help="Time evolution with blow-up diagnostics")
    _add_common(ev)
    _add_problem(ev)
    _add_initial_data(ev)
    ev.add_argument("--tmax", type=float, default=None)
    ev.add_argument("--dt", type=float, default=None)
    ev.add_argument("--out", type=Path, default=None, help="Trace CSV path")
    ev.add_argument("--snapshots", type=Path, default=None, help="Write sampled fields here")
    ev.set_defaults(handler=handle_evolve)

    conc = subs.add_parser("concentrate", help="L3 concentration windows over snapshots")
    _add_common(conc)
    conc.add_argument("--trace-dir", type=Path, required=True)
    conc.add_argument("--c1", type=float, default=None)
    conc.add_argument("--c2", type=float, default=None)
    conc.add_argument("--mass", type=float, default=None, help="Reference mass of u0")
    conc.set_defaults(handler=handle_concentrate)

    sph = subs.add_parser("sphere", help="Contracting-sphere profile constants and audits")
    _add_common(sph)
    sph.add_argument("--mass", type=float, default=None)
    sph.add_argument("--T", type=float, default=None)
    sph.add_argument("--theta", type=float, default=None)
    sph.add_argument("--audit", action="store_true")
    sph.add_argument("--snapshots", type=Path, default=None, help="Export profiles on the ladder")
    sph.set_defaults(handler=handle_sphere)

    exp = subs.add_parser("exponents", help="Sphere blow-up exponents for NLS_p on R^N")
    _add_common(exp)
    exp.add_argument("--p", type=str, required=True, help="Nonlinearity power, e.g. 7 or 11/3")
    exp.add_argument("--N", type=int, required=True)
    exp.set_defaults(handler=handle_exponents)

    return parser


def run(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _configure_logging(args.verbose)
        config = load_config(args.config)
        if args.out_dir is not None:
            config = config.model_copy(update={"output_dir": args.out_dir})
        logger.info("nlslab %s (config %s)", args.command, args.config or "default")
        return args.handler(args, config)
    except _FAILED_CHECKS as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return EXIT_FAILED_CHECK
    except (UsageError, NlsLabError, ValueError) as e:
        sys.stderr.write(f"{type(e).__name__}: {e}\n")
        return EXIT_ERROR


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
