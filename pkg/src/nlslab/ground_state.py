"""Ground state Q by radial shooting, and the sharp constants derived from it."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import bisect
from scipy.special import kve
from tenacity import (
    Retrying,
    before_sleep_log,
    retry_if_exception_type,
    stop_after_attempt,
    wait_none,
)

from .errors import IdentityViolation, NoBracket, TailDivergence
from .fields import (
    ComplexField,
    NlsParams,
    RadialGrid,
    grad_sq,
    lp_integral,
    mass,
    radial_integral,
)

logger = logging.getLogger(__name__)

Outcome = Literal["overshoot", "undershoot"]

_R_START = 1e-4
# Trust the shot until the bracket-width error has grown to ~1e-8 of Q.
_TRUST_DECADES = math.log(1e4)
_RTOL = 1e-12
_ATOL = 1e-15
_IDENTITY_RTOL = 1e-4


@dataclass
class RadialProfile:
    """Converged shot of a*ΔQ − b*Q + Q^p = 0, continued by its linear tail.

    Attributes:
        N: Dimension.
        p: Nonlinearity.
        a: Diffusion coefficient.
        b: Linear coefficient.
        q0: Converged amplitude Q(0).
        r_trust: Radius past which the exact linear decay replaces the shot.
        history: Every (amplitude, outcome) the bisection evaluated.
    """

    N: int
    p: float
    a: float
    b: float
    q0: float
    r_trust: float
    solution: object = field(repr=False)
    history: list[tuple[float, Outcome]] = field(default_factory=list, repr=False)

    @property
    def decay_rate(self) -> float:
        return math.sqrt(self.b / self.a)

    def _origin_curvature(self) -> float:
        return (self.b * self.q0 - self.q0**self.p) / (self.a * self.N)

    def _tail_shape(self, r: np.ndarray, order_shift: int) -> np.ndarray:
        # r^{-nu} K_nu(mu r) and its derivative -mu r^{-nu} K_{nu+1}(mu r), nu = N/2 - 1
        nu = self.N / 2 - 1
        mu = self.decay_rate
        z, zc = mu * r, mu * self.r_trust
        return (
            (r / self.r_trust) ** (-nu)
            * kve(nu + order_shift, z)
            / kve(nu, zc)
            * np.exp(-(z - zc))
        )

    def value(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        near = r < _R_START
        far = r > self.r_trust
        mid = ~(near | far)
        out[near] = self.q0 + self._origin_curvature() * r[near] ** 2 / 2
        if mid.any():
            out[mid] = self.solution(r[mid])[0]
        q_trust = self.solution(self.r_trust)[0]
        out[far] = q_trust * self._tail_shape(r[far], 0)
        return out

    def derivative(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.empty_like(r)
        near = r < _R_START
        far = r > self.r_trust
        mid = ~(near | far)
        out[near] = self._origin_curvature() * r[near]
        if mid.any():
            out[mid] = self.solution(r[mid])[1]
        q_trust = self.solution(self.r_trust)[0]
        out[far] = -self.decay_rate * q_trust * self._tail_shape(r[far], 1)
        return out


def _integrate(q0: float, N: int, p: float, a: float, b: float, r_end: float, dense: bool):
    def rhs(r, y):
        q, dq = y
        return [dq, (b * q - abs(q) ** (p - 1) * q) / a - (N - 1) / r * dq]

    def crossing(r, y):
        return y[0]

    crossing.terminal = True
    crossing.direction = -1

    def turnaround(r, y):
        return y[1]

    turnaround.terminal = True
    turnaround.direction = 1

    curvature = (b * q0 - q0**p) / (a * N)
    y0 = [q0 + curvature * _R_START**2 / 2, curvature * _R_START]
    return solve_ivp(
        rhs,
        (_R_START, r_end),
        y0,
        method="DOP853",
        rtol=_RTOL,
        atol=_ATOL,
        events=(crossing, turnaround),
        dense_output=dense,
    )


def _outcome(sol) -> Outcome:
    if sol.t_events[0].size:
        return "overshoot"
    if sol.t_events[1].size:
        return "undershoot"
    return "undershoot" if sol.y[0, -1] > 0 else "overshoot"


def _bisect_amplitude(shoot, lo: float, hi: float, tol: float) -> float:
    def sign(q0: float) -> float:
        return 1.0 if shoot(q0) == "overshoot" else -1.0

    try:
        return bisect(sign, lo, hi, xtol=tol, maxiter=500)
    except ValueError as e:
        raise NoBracket(
            f"amplitudes {lo:g} and {hi:g} do not separate overshoot from undershoot"
        ) from e


def shoot_radial_profile(
    N: int,
    p: float,
    a: float = 1.0,
    b: float = 1.0,
    *,
    bracket: tuple[float, float] = (0.1, 50.0),
    tol: float = 1e-12,
    attempts: int = 3,
    widen_factor: float = 4.0,
) -> RadialProfile:
    """Shoot on Q(0) for the positive decaying solution of a*ΔQ − b*Q + Q^p = 0.

    Overshoot (Q crosses zero) means Q(0) is too large; undershoot (Q turns
    back up while positive) means it is too small. When the bracket fails the
    shot is retried on a bracket widened by widen_factor on both sides.
    """
    mu = math.sqrt(b / a)
    r_end = 2 * math.log(1 / tol) / mu + 10
    history: list[tuple[float, Outcome]] = []

    def shoot(q0: float) -> Outcome:
        outcome = _outcome(_integrate(q0, N, p, a, b, r_end, dense=False))
        history.append((q0, outcome))
        logger.debug("shot Q(0)=%.15g -> %s", q0, outcome)
        return outcome

    lo, hi = bracket
    retrying = Retrying(
        retry=retry_if_exception_type(NoBracket),
        wait=wait_none(),
        stop=stop_after_attempt(attempts),
        before_sleep=before_sleep_log(logger, logging.WARNING),
        reraise=True,
    )
    for attempt in retrying:
        with attempt:
            widen = widen_factor ** (attempt.retry_state.attempt_number - 1)
            q0 = _bisect_amplitude(shoot, lo / widen, hi * widen, tol)

    sol = _integrate(q0, N, p, a, b, r_end, dense=True)
    r_stop = sol.t[-1]
    r_trust = r_stop - _TRUST_DECADES / mu
    if r_trust <= _R_START:
        raise TailDivergence(f"shot with Q(0)={q0:.15g} fails at r={r_stop:.3g}")
    logger.info(
        "shooting converged: N=%d p=%g Q(0)=%.12g after %d shots (trusted to r=%.2f)",
        N,
        p,
        q0,
        len(history),
        r_trust,
    )
    return RadialProfile(N, p, a, b, q0, r_trust, solution=sol.sol, history=history)


# ---------------------------------------------------------------------------
# Ground state in the threshold normalization
# ---------------------------------------------------------------------------


@dataclass
class GroundState:
    """Solution Q of (N(p−1)/4)ΔQ − (1 − (N−2)(p−1)/4)Q + Q^p = 0 and its constants.

    Attributes:
        params: Equation parameters.
        q0: Shooting amplitude Q(0).
        profile: Q on the solve grid (real-valued field).
        mass_Q: ‖Q‖₂².
        grad_Q_sq: ‖∇Q‖₂², from the shot's own derivative.
        lp1_Q: ‖Q‖_{p+1}^{p+1}.
        c_gn: Sharp Gagliardo–Nirenberg constant, once derived.
        sigma_pn: Threshold on ‖∇u‖^{s_c}‖u‖^{1−s_c}, once derived.
        lambda_threshold: Threshold on E^{s_c}M^{1−s_c}, once derived.
    """

    params: NlsParams
    q0: float
    profile: ComplexField
    mass_Q: float
    grad_Q_sq: float
    lp1_Q: float
    c_gn: float | None = None
    sigma_pn: float | None = None
    lambda_threshold: float | None = None
    shape: RadialProfile | None = field(default=None, repr=False)

    @property
    def alpha(self) -> float:
        """Scale with Q(alpha x) solving Δu − (1 − (N−2)(p−1)/4)u + u^p = 0."""
        return math.sqrt(self.params.N * (self.params.p - 1) / 4)

    def sample(self, r: np.ndarray) -> np.ndarray:
        if self.shape is None:
            raise ValueError("ground state has no profile sampler attached")
        return self.shape.value(r)

    def soliton(self, grid: RadialGrid) -> ComplexField:
        """Stationary NLS data u_Q(r) = Q(alpha r) on any grid."""
        return ComplexField(grid, self.sample(self.alpha * grid.r), self.params)

    def to_record(self) -> dict:
        return {
            "N": self.params.N,
            "p": self.params.p,
            "s_c": self.params.s_c,
            "q0": self.q0,
            "mass": self.mass_Q,
            "grad_sq": self.grad_Q_sq,
            "lp1": self.lp1_Q,
            "c_gn": self.c_gn,
            "sigma_pn": self.sigma_pn,
            "lambda_threshold": self.lambda_threshold,
        }


def equation_coefficients(params: NlsParams) -> tuple[float, float]:
    """(a, b) of a*ΔQ − b*Q + Q^p = 0 in the threshold normalization."""
    N, p = params.N, params.p
    return N * (p - 1) / 4, 1 - (N - 2) * (p - 1) / 4


def solve_ground_state(
    params: NlsParams,
    grid: RadialGrid,
    tol: float = 1e-12,
    *,
    bracket: tuple[float, float] = (0.1, 50.0),
    tail_ratio: float = 1e-8,
    attempts: int = 3,
    widen_factor: float = 4.0,
) -> GroundState:
    params.require_intercritical()
    a, b = equation_coefficients(params)
    shape = shoot_radial_profile(
        params.N,
        params.p,
        a,
        b,
        bracket=bracket,
        tol=tol,
        attempts=attempts,
        widen_factor=widen_factor,
    )
    edge = float(shape.value(np.array([grid.r_max]))[0])
    if abs(edge) >= tail_ratio * shape.q0:
        raise TailDivergence(
            f"|Q(r_max)| = {abs(edge):.3e} is not below {tail_ratio:g}*Q(0); "
            f"increase r_max beyond {grid.r_max:g}"
        )

    values = shape.value(grid.r)
    profile = ComplexField(grid, values, params)
    slope = shape.derivative(grid.r)
    return GroundState(
        params=params,
        q0=shape.q0,
        profile=profile,
        mass_Q=mass(profile),
        grad_Q_sq=radial_integral(slope**2, grid, params),
        lp1_Q=lp_integral(profile, params.p + 1),
        shape=shape,
    )


def threshold_constants(params: NlsParams, mass_Q: float) -> tuple[float, float, float]:
    """(c_gn, sigma_pn, lambda_threshold) from ‖Q‖₂² alone."""
    N, p, s_c = params.N, params.p, params.s_c
    norm = math.sqrt(mass_Q)
    c_gn = (p + 1) / (2 * norm ** (p - 1))
    sigma = (4 / (N * (p - 1))) ** (1 / (p - 1)) * norm
    return c_gn, sigma, (s_c / N) ** s_c * sigma**2


def closed_form_product(params: NlsParams, mass_Q: float) -> float:
    """E[u_Q]^{s_c} M[u_Q]^{1−s_c} after eliminating ‖∇Q‖ and ‖Q‖_{p+1} by Pohozaev."""
    N, p, s_c = params.N, params.p, params.s_c
    return ((N * (p - 1) - 4) / 8) ** s_c * (4 / (N * (p - 1))) ** (N / 2) * mass_Q


def measured_product(gs: GroundState) -> float:
    """E[u_Q]^{s_c} M[u_Q]^{1−s_c} from the measured norms of Q."""
    N, p, s_c = gs.params.N, gs.params.p, gs.params.s_c
    alpha = gs.alpha
    energy_uq = alpha ** (2 - N) * gs.grad_Q_sq / 2 - alpha ** (-N) * gs.lp1_Q / (p + 1)
    mass_uq = alpha ** (-N) * gs.mass_Q
    return energy_uq**s_c * mass_uq ** (1 - s_c)


def derive_constants(gs: GroundState) -> GroundState:
    c_gn, sigma, threshold = threshold_constants(gs.params, gs.mass_Q)
    for label, value in (
        ("closed form", closed_form_product(gs.params, gs.mass_Q)),
        ("measured", measured_product(gs)),
    ):
        rel = abs(value - threshold) / threshold
        if rel > _IDENTITY_RTOL:
            raise IdentityViolation(
                f"{label} E^s_c M^(1-s_c) of u_Q = {value:.10g} differs from "
                f"(s_c/N)^s_c sigma^2 = {threshold:.10g} (relative {rel:.2e})"
            )
    logger.info(
        "ground state constants: c_gn=%.10g sigma=%.10g threshold=%.10g", c_gn, sigma, threshold
    )
    return replace(gs, c_gn=c_gn, sigma_pn=sigma, lambda_threshold=threshold)


def gn_ratio(u: ComplexField, gs: GroundState) -> float:
    """‖u‖_{p+1}^{p+1} over the sharp Gagliardo–Nirenberg bound; at most 1."""
    if gs.c_gn is None:
        raise ValueError("derive_constants must run before gn_ratio")
    N, p = gs.params.N, gs.params.p
    lhs = lp_integral(u, p + 1)
    if lhs == 0:
        return 0.0
    g, m = grad_sq(u), mass(u)
    rhs = gs.c_gn * g ** (N * (p - 1) / 4) * m ** ((2 - (N - 2) * (p - 1) / 2) / 2)
    return lhs / rhs
