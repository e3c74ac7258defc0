"""Tests for split-step evolution, the online virial check and the blow-up rate fit."""

import math
from unittest.mock import MagicMock

import numpy as np
import pytest

from nlslab.config import StepConfig
from nlslab.errors import InsufficientSamples, Overflow, UnsupportedDimension
from nlslab.evolver import (
    SplitStepSolver,
    StepControls,
    blowup_rate_fit,
    evolve,
    fit_blowup_rate,
    step,
    virial_consistency,
)
from nlslab.fields import ComplexField, NlsParams, RadialGrid, gaussian, mass
from nlslab.ground_state import derive_constants, solve_ground_state

CUBIC_3D = NlsParams(3, 3.0)


def _free_gaussian(r, t, N, amplitude=1.0):
    """Exact solution of i u_t + Δu = 0 from A*exp(-r²)."""
    z = 1 + 4j * t
    return amplitude * z ** (-N / 2) * np.exp(-(r**2) / z)


def _run(solver, u, dt, steps):
    for _ in range(steps):
        u = solver.step(u, dt)
    return u


@pytest.fixture(scope="module")
def soliton_run():
    grid = RadialGrid(30.0, 2999)
    gs = derive_constants(solve_ground_state(CUBIC_3D, grid))
    controls = StepControls(dt0=1e-4, t_max=1.0, sample_dt=0.1, keep_fields=True)
    return gs, evolve(gs.soliton(grid), controls)


@pytest.fixture(scope="module")
def blowup_run():
    grid = RadialGrid(10.0, 9999)
    u0 = gaussian(grid, CUBIC_3D, 3.0, a=0.5)
    return evolve(u0, StepControls(dt0=1e-4, t_max=1.0, sample_dt=0.005))


# ---------------------------------------------------------------------------
# Single step
# ---------------------------------------------------------------------------


def test_zero_field_stays_zero():
    u = ComplexField.zeros(RadialGrid(10.0, 99), CUBIC_3D)
    assert np.all(step(u, 1e-3).values == 0)


def test_free_propagation_spectral():
    grid = RadialGrid(20.0, 1999)
    amplitude = 1e-6
    u = gaussian(grid, CUBIC_3D, amplitude)
    u = _run(SplitStepSolver(grid, CUBIC_3D), u, 0.01, 10)
    exact = _free_gaussian(grid.r, 0.1, 3, amplitude)
    np.testing.assert_allclose(u.values, exact, rtol=0, atol=1e-8 * amplitude)


def test_free_propagation_crank_nicolson_three_dimensions():
    grid = RadialGrid(20.0, 1999)
    u = gaussian(grid, CUBIC_3D, 1e-6)
    solver = SplitStepSolver(grid, CUBIC_3D, "crank_nicolson")
    u = _run(solver, u, 1e-3, 100)
    exact = _free_gaussian(grid.r, 0.1, 3, 1e-6)
    np.testing.assert_allclose(u.values, exact, rtol=0, atol=1e-3 * 1e-6)


def test_free_propagation_crank_nicolson_two_dimensions():
    params = NlsParams(2, 4.0)
    grid = RadialGrid(20.0, 1999)
    u = gaussian(grid, params, 1e-6)
    solver = SplitStepSolver(grid, params)
    assert solver.method == "crank_nicolson"
    u = _run(solver, u, 1e-3, 100)
    exact = _free_gaussian(grid.r, 0.1, 2, 1e-6)
    np.testing.assert_allclose(u.values, exact, rtol=0, atol=1e-3 * 1e-6)


def test_spectral_solver_needs_three_dimensions():
    with pytest.raises(UnsupportedDimension, match="crank_nicolson"):
        SplitStepSolver(RadialGrid(10.0, 99), NlsParams(2, 4.0), "spectral")


def test_step_is_time_reversible():
    grid = RadialGrid(15.0, 1499)
    u = gaussian(grid, CUBIC_3D, 1.5, chirp=0.2)
    back = step(step(u, 1e-3), -1e-3)
    np.testing.assert_allclose(back.values, u.values, rtol=0, atol=1e-10)


def test_step_conserves_mass_spectral():
    grid = RadialGrid(15.0, 1499)
    u0 = gaussian(grid, CUBIC_3D, 1.5)
    u = _run(SplitStepSolver(grid, CUBIC_3D), u0, 1e-3, 100)
    assert mass(u) == pytest.approx(mass(u0), rel=1e-12)


def test_step_rejects_non_finite_dt():
    u = gaussian(RadialGrid(10.0, 99), CUBIC_3D)
    with pytest.raises(ValueError, match="finite"):
        step(u, math.nan)


def test_step_overflow_guard():
    u = gaussian(RadialGrid(10.0, 99), CUBIC_3D, 1e151)
    with pytest.raises(Overflow):
        step(u, 1e-3)


def test_strang_second_order():
    grid = RadialGrid(15.0, 1499)
    u0 = gaussian(grid, CUBIC_3D, 1.5)
    solver = SplitStepSolver(grid, CUBIC_3D)
    coarse, mid, fine = (_run(solver, u0, dt, round(0.1 / dt)) for dt in (2e-3, 1e-3, 5e-4))
    e1 = np.max(np.abs(coarse.values - mid.values))
    e2 = np.max(np.abs(mid.values - fine.values))
    assert math.log2(e1 / e2) >= 1.9


# ---------------------------------------------------------------------------
# Controls
# ---------------------------------------------------------------------------


def test_controls_from_config():
    controls = StepControls.from_config(StepConfig(dt0=1e-3, linear_solver="crank_nicolson"))
    assert controls.dt0 == 1e-3
    assert controls.linear_solver == "crank_nicolson"


@pytest.mark.parametrize("kwargs", [{"dt0": -1.0}, {"t_max": 0.0}, {"growth_sample_factor": 1.0}])
def test_controls_validated(kwargs):
    with pytest.raises(ValueError):
        StepControls(**kwargs)


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------


def test_soliton_stays_stationary(soliton_run):
    gs, trace = soliton_run
    assert trace.stop_reason == "HorizonReached"
    assert trace.times[-1] == pytest.approx(1.0)
    reference = np.abs(gs.soliton(gs.profile.grid).values)
    for u in trace.fields:
        assert np.max(np.abs(np.abs(u.values) - reference)) < 1e-4


def test_soliton_conservation(soliton_run):
    _, trace = soliton_run
    first, last = trace.functionals[0], trace.functionals[-1]
    assert last.mass == pytest.approx(first.mass, rel=1e-10)
    assert last.energy == pytest.approx(first.energy, rel=1e-6)
    assert max(trace.r0) / min(trace.r0) < 1.01
    assert max(trace.lambda_) / min(trace.lambda_) < 1.01


def test_soliton_virial_identity_vanishes(soliton_run):
    _, trace = soliton_run
    check = virial_consistency(trace)
    assert check.max_abs_residual < 1e-3
    assert check.samples == len(trace.times)


def test_trace_algebra(soliton_run):
    _, trace = soliton_run
    assert np.all(np.diff(trace.times) > 0)
    for fs, r0, lam in zip(trace.functionals, trace.r0, trace.lambda_):
        assert r0**2 == pytest.approx(fs.virial / fs.mass, rel=1e-12)
        assert lam**3 == pytest.approx(r0**2 / fs.grad_sq, rel=1e-12)
    assert len(trace.fields) == len(trace.times)


def test_trace_rows(soliton_run):
    _, trace = soliton_run
    rows = trace.rows()
    assert len(rows) == len(trace.times)
    assert list(rows[0]) == [
        "t", "mass", "energy", "grad_sq", "virial", "virial_rate", "r0", "lambda", "linf"
    ]


def test_small_gaussian_disperses():
    grid = RadialGrid(30.0, 2999)
    u0 = gaussian(grid, CUBIC_3D, 0.1, a=0.5)
    trace = evolve(u0, StepControls(dt0=1e-3, t_max=2.0, sample_dt=0.05))
    assert trace.stop_reason == "HorizonReached"
    first, last = trace.functionals[0], trace.functionals[-1]
    assert last.energy == pytest.approx(first.energy, rel=1e-6)
    assert max(trace.grad_norm) <= trace.grad_norm[0] * (1 + 1e-6)
    with pytest.raises(InsufficientSamples):
        blowup_rate_fit(trace)


def test_gaussian_virial_identity():
    grid = RadialGrid(30.0, 2999)
    u0 = gaussian(grid, CUBIC_3D, 1.5)
    trace = evolve(u0, StepControls(dt0=1e-4, t_max=0.2, sample_dt=0.01))
    check = virial_consistency(trace)
    assert check.samples == 21
    assert check.max_rel_residual < 1e-2
    assert check.rate_max_rel_residual < 1e-2


def test_virial_check_needs_samples():
    grid = RadialGrid(10.0, 999)
    trace = evolve(gaussian(grid, CUBIC_3D), StepControls(t_max=0.02, sample_dt=0.01))
    with pytest.raises(InsufficientSamples):
        virial_consistency(trace)


def test_dt_floor_exhausts_resolution():
    grid = RadialGrid(10.0, 99)
    trace = evolve(gaussian(grid, CUBIC_3D), StepControls(dt0=1e-4, dt_min=1.0))
    assert trace.stop_reason == "ResolutionExhausted"
    assert trace.times == [0.0]


def test_resolution_guard_stops_run():
    grid = RadialGrid(10.0, 99)
    trace = evolve(gaussian(grid, CUBIC_3D, 3.0, a=0.5), StepControls(resolution_guard=0.35))
    assert trace.stop_reason == "ResolutionExhausted"


def test_negative_energy_gaussian_blows_up(blowup_run):
    trace = blowup_run
    assert trace.functionals[0].energy < 0
    assert trace.stop_reason == "BlowupDetected"
    assert trace.grad_norm[-1] >= 10 * trace.grad_norm[0]
    assert trace.times[-1] < 1.0
    assert min(trace.dt_history) < 1e-6


def test_blowup_fit_respects_lower_bound(blowup_run):
    fit = blowup_rate_fit(blowup_run)
    assert fit.samples >= 10
    assert fit.T_est > blowup_run.times[-1]
    assert fit.lower_bound_ok
    assert fit.exponent <= -0.25 + max(0.05, 3 * fit.stderr)


# ---------------------------------------------------------------------------
# Rate fit on synthetic data
# ---------------------------------------------------------------------------


def test_fit_recovers_square_root_rate():
    t = 1.0 - np.logspace(-1, -4, 30)
    fit = fit_blowup_rate(t, (1.0 - t) ** -0.5)
    assert fit.exponent == pytest.approx(-0.5, abs=0.01)
    assert fit.T_est == pytest.approx(1.0, abs=1e-4)
    assert fit.lower_bound_ok


def test_fit_flags_slow_growth():
    t = 1.0 - np.logspace(-1, -4, 30)
    fit = fit_blowup_rate(t, (1.0 - t) ** -0.125)
    assert fit.exponent == pytest.approx(-0.125, abs=0.01)
    assert not fit.lower_bound_ok


def test_lower_bound_follows_critical_index():
    t = 1.0 - np.logspace(-1, -4, 30)
    fit = fit_blowup_rate(t, (1.0 - t) ** -0.125, s_c=0.75)
    assert fit.lower_bound_ok
    assert fit.min_scaled == pytest.approx(1.0, rel=0.05)


def test_trace_fit_uses_trace_parameters():
    t = 1.0 - np.logspace(-1, -4, 30)
    trace = MagicMock(times=list(t), grad_norm=list((1.0 - t) ** -0.125))
    trace.params = NlsParams(3, 11 / 3)
    assert blowup_rate_fit(trace, window_growth=1.0).lower_bound_ok
    trace.params = CUBIC_3D
    assert not blowup_rate_fit(trace, window_growth=1.0).lower_bound_ok


def test_fit_needs_ten_samples():
    t = np.linspace(0, 0.5, 5)
    with pytest.raises(InsufficientSamples, match="10"):
        fit_blowup_rate(t, 1 / (1 - t))
