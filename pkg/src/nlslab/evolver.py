"""Radial NLS time evolution with blow-up diagnostics and online virial checks."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.optimize import curve_fit, minimize_scalar
from scipy.sparse import diags_array, identity
from scipy.sparse.linalg import spsolve

from .errors import (
    FitIllConditioned,
    InsufficientSamples,
    Overflow,
    UnsupportedDimension,
)
from .fields import (
    ComplexField,
    FunctionalSet,
    NlsParams,
    RadialGrid,
    _sine,
    functionals,
    grad_sq,
)

logger = logging.getLogger(__name__)

StopReason = Literal["HorizonReached", "BlowupDetected", "ResolutionExhausted"]
LinearSolver = Literal["auto", "spectral", "crank_nicolson"]

_OVERFLOW_GUARD = 1e150
_MIN_CLOCK_SAMPLES = 5
_MIN_FIT_SAMPLES = 10
# Critical index of cubic NLS on R^3, used when a trace carries no parameters.
_CUBIC_3D_S_C = 0.5


@dataclass
class StepControls:
    """Time-stepping controls.

    Attributes:
        dt0: Base step at the initial amplitude.
        cfl: Bound on the nonlinear phase |u|^{p-1} dt per step.
        grad_growth_cap: Stop once ‖∇u‖ reaches this multiple of its initial value.
        t_max: Horizon.
        resolution_guard: Stop once dr*‖u‖∞^{(p-1)/2} exceeds this.
        sample_dt: Uniform sampling clock.
        growth_sample_factor: Extra sample whenever ‖∇u‖ grew by this factor.
        dt_min: Stop once the adaptive step drops below this.
        linear_solver: "auto" (spectral for N = 3), "spectral" or "crank_nicolson".
        keep_fields: Retain the field at every sample.
    """

    dt0: float = 1e-4
    cfl: float = 0.1
    grad_growth_cap: float = 10.0
    t_max: float = 2.0
    resolution_guard: float = 1.0
    sample_dt: float = 0.01
    growth_sample_factor: float = 1.05
    dt_min: float = 1e-13
    linear_solver: LinearSolver = "auto"
    keep_fields: bool = False

    def __post_init__(self) -> None:
        for name in (
            "dt0",
            "cfl",
            "grad_growth_cap",
            "t_max",
            "resolution_guard",
            "sample_dt",
            "dt_min",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"step control {name} must be positive")
        if self.growth_sample_factor <= 1:
            raise ValueError("growth_sample_factor must exceed 1")

    @classmethod
    def from_config(cls, cfg) -> StepControls:
        return cls(**cfg.model_dump())


@dataclass
class EvolutionTrace:
    """Samples of a run.

    r0² = virial/mass and λ³ = r0²/‖∇u‖² at every sample; on_clock marks the
    samples on the uniform clock, the others were added by gradient growth.
    """

    times: list[float] = field(default_factory=list)
    functionals: list[FunctionalSet] = field(default_factory=list)
    grad_norm: list[float] = field(default_factory=list)
    r0: list[float] = field(default_factory=list)
    lambda_: list[float] = field(default_factory=list)
    linf: list[float] = field(default_factory=list)
    on_clock: list[bool] = field(default_factory=list)
    dt_history: list[float] = field(default_factory=list)
    fields: list[ComplexField] = field(default_factory=list, repr=False)
    stop_reason: StopReason | None = None
    params: NlsParams | None = None

    def record(self, t: float, u: ComplexField, on_clock: bool, keep_field: bool) -> None:
        fs = functionals(u)
        r0 = math.sqrt(fs.virial / fs.mass) if fs.mass > 0 else math.nan
        lam = (r0**2 / fs.grad_sq) ** (1 / 3) if fs.grad_sq > 0 else math.nan
        self.times.append(t)
        self.functionals.append(fs)
        self.grad_norm.append(math.sqrt(fs.grad_sq))
        self.r0.append(r0)
        self.lambda_.append(lam)
        self.linf.append(u.linf)
        self.on_clock.append(on_clock)
        if keep_field:
            self.fields.append(u)
        logger.debug(
            "t=%.8g mass=%.12g energy=%.12g grad=%.6g linf=%.6g",
            t,
            fs.mass,
            fs.energy,
            self.grad_norm[-1],
            self.linf[-1],
        )

    def rows(self) -> list[dict[str, float]]:
        return [
            {
                "t": t,
                "mass": fs.mass,
                "energy": fs.energy,
                "grad_sq": fs.grad_sq,
                "virial": fs.virial,
                "virial_rate": fs.virial_rate,
                "r0": r0,
                "lambda": lam,
                "linf": linf,
            }
            for t, fs, r0, lam, linf in zip(
                self.times, self.functionals, self.r0, self.lambda_, self.linf
            )
        ]


# ---------------------------------------------------------------------------
# Single step
# ---------------------------------------------------------------------------


class SplitStepSolver:
    """Strang splitting: half nonlinear phase, exact linear flow, half nonlinear phase.

    The linear flow is exact per sine mode of r*u for N = 3, and Crank–Nicolson
    on the radial Laplacian (Neumann-type closure at r = 0, Dirichlet at r_max)
    otherwise.
    """

    def __init__(self, grid: RadialGrid, params: NlsParams, linear_solver: LinearSolver = "auto"):
        if linear_solver == "spectral" and params.N != 3:
            raise UnsupportedDimension(
                f"spectral propagation needs N = 3, got N = {params.N}; "
                "use linear_solver='crank_nicolson'"
            )
        if linear_solver == "auto":
            linear_solver = "spectral" if params.N == 3 else "crank_nicolson"
        self.grid = grid
        self.params = params
        self.method = linear_solver
        self._laplacian = self._radial_laplacian() if linear_solver == "crank_nicolson" else None

    def __repr__(self) -> str:
        return f"SplitStepSolver(N={self.params.N}, p={self.params.p}, method={self.method!r})"

    def _radial_laplacian(self):
        n, dr, N = self.grid.n, self.grid.dr, self.params.N
        if n < 2:
            raise ValueError("Crank-Nicolson needs at least two interior nodes")
        a = 1.0 / dr**2
        b = (N - 1) / (2 * self.grid.r * dr)
        lower = a - b
        diag = np.full(n, -2 * a)
        upper = a + b
        # u(0) = (4u_1 - u_2)/3 from u_r(0) = 0
        diag[0] += 4 / 3 * lower[0]
        upper = upper.copy()
        upper[0] -= lower[0] / 3
        return diags_array([lower[1:], diag, upper[:-1]], offsets=[-1, 0, 1], format="csr")

    def _nonlinear(self, values: np.ndarray, h: float) -> np.ndarray:
        return values * np.exp(1j * np.abs(values) ** (self.params.p - 1) * h)

    def _linear(self, values: np.ndarray, dt: float) -> np.ndarray:
        if self.method == "spectral":
            r = self.grid.r
            c = _sine(r * values) * np.exp(-1j * self.grid.wavenumbers**2 * dt)
            return _sine(c, inverse=True) / r
        eye = identity(self.grid.n, format="csr", dtype=np.complex128)
        half = 0.5j * dt * self._laplacian
        return spsolve((eye - half).tocsc(), (eye + half) @ values)

    def step(self, u: ComplexField, dt: float) -> ComplexField:
        if not math.isfinite(dt):
            raise ValueError(f"time step must be finite, got {dt}")
        values = self._nonlinear(u.values, dt / 2)
        values = self._linear(values, dt)
        values = self._nonlinear(values, dt / 2)
        peak = np.max(np.abs(values)) if values.size else 0.0
        if not math.isfinite(peak) or peak > _OVERFLOW_GUARD:
            raise Overflow(f"|u| reached {peak:.3e} after a step of {dt:.3e}")
        return u.with_values(values)


def step(u: ComplexField, dt: float, linear_solver: LinearSolver = "auto") -> ComplexField:
    """One Strang step of size dt (negative dt runs backwards)."""
    return SplitStepSolver(u.grid, u.params, linear_solver).step(u, dt)


# ---------------------------------------------------------------------------
# Evolution
# ---------------------------------------------------------------------------


def _adaptive_dt(linf: float, linf0: float, p: float, controls: StepControls) -> float:
    if linf == 0 or linf0 == 0:
        return controls.dt0
    growth = (linf / linf0) ** (p - 1)
    return min(controls.dt0 / max(1.0, growth), controls.cfl / linf ** (p - 1))


def evolve(u0: ComplexField, controls: StepControls) -> EvolutionTrace:
    solver = SplitStepSolver(u0.grid, u0.params, controls.linear_solver)
    p, dr = u0.params.p, u0.grid.dr
    trace = EvolutionTrace(params=u0.params)
    trace.record(0.0, u0, on_clock=True, keep_field=controls.keep_fields)
    grad0 = trace.grad_norm[0]
    linf0 = u0.linf
    last_recorded_grad = grad0

    u, t, tick = u0, 0.0, 1
    while t < controls.t_max:
        linf = u.linf
        dt = _adaptive_dt(linf, linf0, p, controls)
        if dt < controls.dt_min:
            if t > trace.times[-1]:
                trace.record(t, u, on_clock=False, keep_field=controls.keep_fields)
            trace.stop_reason = "ResolutionExhausted"
            break
        next_clock = min(tick * controls.sample_dt, controls.t_max)
        h = min(dt, next_clock - t)
        u = solver.step(u, h)
        trace.dt_history.append(h)
        landed = h == next_clock - t
        t = next_clock if landed else t + h
        on_clock = landed and math.isclose(t, tick * controls.sample_dt)
        if landed and on_clock:
            tick += 1

        grad = math.sqrt(grad_sq(u))
        blowup = grad0 > 0 and grad >= controls.grad_growth_cap * grad0
        underresolved = dr * u.linf ** ((p - 1) / 2) > controls.resolution_guard
        grown = grad >= controls.growth_sample_factor * last_recorded_grad
        if landed or blowup or underresolved or grown:
            trace.record(t, u, on_clock=on_clock, keep_field=controls.keep_fields)
            last_recorded_grad = grad
        if blowup:
            trace.stop_reason = "BlowupDetected"
            break
        if underresolved:
            trace.stop_reason = "ResolutionExhausted"
            break
    else:
        trace.stop_reason = "HorizonReached"

    logger.info(
        "evolution stopped: %s at t=%.10g after %d steps, grad growth %.3g",
        trace.stop_reason,
        trace.times[-1],
        len(trace.dt_history),
        trace.grad_norm[-1] / grad0 if grad0 > 0 else 1.0,
    )
    return trace


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------


@dataclass
class VirialCheck:
    """Finite-difference check of the virial identities on clock samples.

    Attributes:
        max_abs_residual: max |V'' − (4N(p−1)E − 2(N(p−1)−4)‖∇u‖²)|.
        max_rel_residual: The same over max |RHS| (absolute when RHS vanishes).
        rate_max_abs_residual: max |V' − virial_rate|.
        rate_max_rel_residual: The same over max |virial_rate|.
        samples: Number of clock samples used.
    """

    max_abs_residual: float
    max_rel_residual: float
    rate_max_abs_residual: float
    rate_max_rel_residual: float
    samples: int


def _relative(residual: np.ndarray, reference: np.ndarray) -> tuple[float, float]:
    worst = float(np.max(np.abs(residual))) if residual.size else 0.0
    scale = float(np.max(np.abs(reference))) if reference.size else 0.0
    return worst, worst / scale if scale > 0 else worst


def virial_consistency(trace: EvolutionTrace) -> VirialCheck:
    idx = [i for i, flag in enumerate(trace.on_clock) if flag]
    times = np.array([trace.times[i] for i in idx])
    if times.size >= 2:
        h = times[1] - times[0]
        uniform = np.isclose(np.diff(times), h, rtol=1e-9, atol=1e-14)
        keep = int(np.argmin(uniform)) + 1 if not uniform.all() else len(uniform)
        idx, times = idx[: keep + 1], times[: keep + 1]
    if len(idx) < _MIN_CLOCK_SAMPLES:
        raise InsufficientSamples(
            f"virial check needs {_MIN_CLOCK_SAMPLES} uniform samples, got {len(idx)}"
        )
    if trace.params is None:
        raise ValueError("trace carries no equation parameters")
    N, p = trace.params.N, trace.params.p
    fs = [trace.functionals[i] for i in idx]
    V = np.array([f.virial for f in fs])
    E = np.array([f.energy for f in fs])
    G = np.array([f.grad_sq for f in fs])
    rate = np.array([f.virial_rate for f in fs])
    h = times[1] - times[0]

    second = (V[2:] - 2 * V[1:-1] + V[:-2]) / h**2
    rhs = 4 * N * (p - 1) * E[1:-1] - 2 * (N * (p - 1) - 4) * G[1:-1]
    first = (V[2:] - V[:-2]) / (2 * h)

    abs2, rel2 = _relative(second - rhs, rhs)
    abs1, rel1 = _relative(first - rate[1:-1], rate[1:-1])
    return VirialCheck(abs2, rel2, abs1, rel1, len(idx))


@dataclass
class BlowupFit:
    """Power-law fit ‖∇u(t)‖ ≈ A (T_est − t)^exponent over the growth window.

    Attributes:
        T_est: Fitted blow-up time.
        exponent: Fitted exponent.
        stderr: Standard error of the exponent.
        lower_bound_ok: exponent ≤ −(1 − s_c)/2 within max(rate_tolerance, 3*stderr).
        min_scaled: min over the window of ‖∇u‖(T_est − t)^{(1 − s_c)/2}.
        samples: Samples in the window.
    """

    T_est: float
    exponent: float
    stderr: float
    lower_bound_ok: bool
    min_scaled: float
    samples: int


def _log_power_law(t, log_amplitude, exponent, T):
    return log_amplitude + exponent * np.log(T - t)


def fit_blowup_rate(
    times: np.ndarray,
    grad_norm: np.ndarray,
    rate_tolerance: float = 0.05,
    s_c: float = _CUBIC_3D_S_C,
) -> BlowupFit:
    """Fit log‖∇u‖ against log(T − t), with T profiled out before a joint refinement.

    The fitted exponent is checked against the lower bound −(1 − s_c)/2.
    """
    t = np.asarray(times, dtype=float)
    y = np.log(np.asarray(grad_norm, dtype=float))
    if t.size < _MIN_FIT_SAMPLES:
        raise InsufficientSamples(f"rate fit needs {_MIN_FIT_SAMPLES} samples, got {t.size}")
    t_last = t[-1]
    span = t_last - t[0]
    if not span > 0:
        raise FitIllConditioned("growth window has zero duration")

    def profiled(log_offset: float) -> float:
        x = np.log(t_last + math.exp(log_offset) - t)
        coef = np.polyfit(x, y, 1)
        return float(np.sum((np.polyval(coef, x) - y) ** 2))

    best = minimize_scalar(
        profiled,
        bounds=(math.log(span * 1e-12), math.log(10 * span)),
        method="bounded",
        options={"xatol": 1e-10},
    )
    T0 = t_last + math.exp(best.x)
    slope0, intercept0 = np.polyfit(np.log(T0 - t), y, 1)

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            popt, pcov = curve_fit(
                _log_power_law,
                t,
                y,
                p0=[intercept0, slope0, T0],
                bounds=([-np.inf, -np.inf, t_last + 1e-3 * (T0 - t_last)], np.inf),
            )
        log_amplitude, exponent, T_est = popt
        stderr = float(np.sqrt(pcov[1, 1]))
    except (RuntimeError, ValueError):
        log_amplitude, exponent, T_est, stderr = intercept0, slope0, T0, math.inf

    if not math.isfinite(stderr):
        x = np.log(T_est - t)
        _, cov = np.polyfit(x, y, 1, cov=True)
        stderr = float(np.sqrt(cov[0, 0]))
    if not all(math.isfinite(v) for v in (exponent, T_est, stderr)):
        raise FitIllConditioned(
            f"rate fit produced exponent={exponent}, T={T_est}, stderr={stderr}"
        )

    bound = -(1 - s_c) / 2
    scaled = np.exp(y) * (T_est - t) ** -bound
    ok = exponent <= bound + max(rate_tolerance, 3 * stderr)
    return BlowupFit(
        T_est=float(T_est),
        exponent=float(exponent),
        stderr=stderr,
        lower_bound_ok=bool(ok and np.min(scaled) > 0),
        min_scaled=float(np.min(scaled)),
        samples=int(t.size),
    )


def blowup_rate_fit(
    trace: EvolutionTrace, window_growth: float = 3.0, rate_tolerance: float = 0.05
) -> BlowupFit:
    """Fit over the samples whose gradient exceeds window_growth times the initial one."""
    grad = np.asarray(trace.grad_norm, dtype=float)
    times = np.asarray(trace.times, dtype=float)
    if grad.size == 0 or grad[0] == 0:
        raise InsufficientSamples("trace has no gradient growth to fit")
    window = grad >= window_growth * grad[0]
    s_c = _CUBIC_3D_S_C if trace.params is None else trace.params.s_c
    fit = fit_blowup_rate(times[window], grad[window], rate_tolerance, s_c=s_c)
    logger.info(
        "blow-up fit: T=%.10g exponent=%.4f +- %.4f lower bound %s",
        fit.T_est,
        fit.exponent,
        fit.stderr,
        "ok" if fit.lower_bound_ok else "VIOLATED",
    )
    return fit
