"""Global-existence versus blow-up dichotomy below the ground-state threshold."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from .errors import RefinementPrecondition, TechnicalRestriction
from .fields import ComplexField, energy, grad_sq, mass, radial_integral
from .ground_state import GroundState

logger = logging.getLogger(__name__)

Verdict = Literal["Global", "FiniteTimeBlowup", "BlowupBarrierOnly", "Indeterminate"]
Route = Literal["MassEnergyBelow", "NegativeEnergy", "LocalizedVirial", "ThresholdFail"]

DEFAULT_TIE_TOL = 1e-4
DEFAULT_VIRIAL_C1 = 4.0
DEFAULT_VIRIAL_C2 = 4.0

# Share of the admissible epsilon window actually used.
_EPSILON_SHARE = 0.5
# Share of the admissible delta used when classify picks delta itself.
_DELTA_SHARE = 0.5


@dataclass
class LocalizedVirialResult:
    """Outcome of the localized virial argument for radial data.

    Attributes:
        delta: Refinement below the threshold, Λ₀ ≤ (1−δ)^{s_c}·threshold.
        delta_tilde: Uniform gap ‖∇u(t)‖ ≥ (1+δ̃)x₁ implied by delta.
        epsilon: Chosen absorption constant.
        epsilon_window: Upper end of the admissible epsilon interval.
        margin: −(upper bound of the main virial terms), positive when usable.
        m_threshold: Cutoff radius beyond which the remainder is below margin/2.
        verdict: FiniteTimeBlowup when the gradient stays above x₁, else the dichotomy verdict.
    """

    delta: float
    delta_tilde: float | None
    epsilon: float | None
    epsilon_window: float | None
    margin: float | None
    m_threshold: float | None
    verdict: Verdict


@dataclass
class ClassificationReport:
    """Scaling invariants of u₀ against the ground state, and the resulting verdict.

    Attributes:
        s_c: Criticality index.
        energy: E[u₀].
        mass: M[u₀].
        lambda0: E^{s_c}M^{1−s_c}; None when E < 0.
        grad_mass_product: ‖∇u₀‖^{s_c}‖u₀‖^{1−s_c}.
        x1: Maximizer of the coercivity function f.
        f_at_x1: f(x₁) = (s_c/N)x₁².
        energy_gap: f(x₁) − E[u₀].
        verdict: Dichotomy verdict.
        route: Argument that produced the verdict.
        delta: Refinement used by the localized virial route.
        delta_tilde: Gradient gap produced by that route.
    """

    s_c: float
    energy: float
    mass: float
    lambda0: float | None
    grad_mass_product: float
    x1: float
    f_at_x1: float
    energy_gap: float
    verdict: Verdict | None = None
    route: Route | None = None
    finite_variance: bool = False
    radial: bool = True
    delta: float | None = None
    delta_tilde: float | None = None
    localized: LocalizedVirialResult | None = None

    def to_record(self) -> dict:
        return asdict(self)


def _require_constants(gs: GroundState) -> tuple[float, float, float]:
    if gs.sigma_pn is None or gs.lambda_threshold is None or gs.c_gn is None:
        raise ValueError("ground state constants missing; run derive_constants first")
    return gs.c_gn, gs.sigma_pn, gs.lambda_threshold


def _gn_exponents(gs: GroundState) -> tuple[float, float]:
    N, p = gs.params.N, gs.params.p
    return N * (p - 1) / 2, 2 - (N - 2) * (p - 1) / 2


def coercivity_function(x: float | np.ndarray, u0_mass: float, gs: GroundState):
    """f(x) = x²/2 − (c_gn/(p+1))‖u₀‖^{2−(N−2)(p−1)/2} x^{N(p−1)/2}.

    E ≥ f(‖∇u‖) along the flow.
    """
    c_gn, _, _ = _require_constants(gs)
    q, mass_power = _gn_exponents(gs)
    return x**2 / 2 - c_gn / (gs.params.p + 1) * u0_mass ** (mass_power / 2) * x**q


def scaling_invariants(u0: ComplexField, gs: GroundState) -> ClassificationReport:
    _, sigma, _ = _require_constants(gs)
    s_c = u0.params.s_c
    e, m, g = energy(u0), mass(u0), grad_sq(u0)
    lambda0 = e**s_c * m ** (1 - s_c) if e >= 0 else None
    product = g ** (s_c / 2) * m ** ((1 - s_c) / 2)
    if m > 0:
        x1 = sigma ** (1 / s_c) * m ** (-(1 - s_c) / (2 * s_c))
        f_x1 = float(coercivity_function(x1, m, gs))
    else:
        x1, f_x1 = math.inf, math.inf
    return ClassificationReport(
        s_c=s_c,
        energy=e,
        mass=m,
        lambda0=lambda0,
        grad_mass_product=product,
        x1=x1,
        f_at_x1=f_x1,
        energy_gap=f_x1 - e,
    )


def _tied(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(abs(a), abs(b))


def classify(
    u0: ComplexField,
    gs: GroundState,
    finite_variance: bool = False,
    radial: bool = True,
    *,
    delta: float | None = None,
    tie_tol: float = DEFAULT_TIE_TOL,
    c1: float = DEFAULT_VIRIAL_C1,
    c2: float = DEFAULT_VIRIAL_C2,
) -> ClassificationReport:
    """Apply the threshold dichotomy to u₀.

    Ties within tie_tol (relative) are reported as Indeterminate. When only
    radial symmetry is available above sigma, the localized virial route is
    tried with delta (default: half of the largest admissible delta). A delta
    that fails the refined threshold is recorded and leaves BlowupBarrierOnly.
    """
    _, sigma, threshold = _require_constants(gs)
    report = scaling_invariants(u0, gs)
    report.finite_variance, report.radial = finite_variance, radial
    product = report.grad_mass_product

    if report.energy < 0:
        report.route = "NegativeEnergy"
        report.verdict = "FiniteTimeBlowup" if (finite_variance or radial) else "BlowupBarrierOnly"
    elif report.lambda0 >= threshold or _tied(report.lambda0, threshold, tie_tol):
        report.route, report.verdict = "ThresholdFail", "Indeterminate"
    elif _tied(product, sigma, tie_tol):
        report.route, report.verdict = "MassEnergyBelow", "Indeterminate"
    elif product < sigma:
        report.route, report.verdict = "MassEnergyBelow", "Global"
    elif finite_variance:
        report.route, report.verdict = "MassEnergyBelow", "FiniteTimeBlowup"
    elif radial:
        report.route = "LocalizedVirial"
        if delta is None:
            delta = _DELTA_SHARE * (1 - (report.lambda0 / threshold) ** (1 / report.s_c))
        try:
            result = localized_virial_route(u0, gs, delta, c1=c1, c2=c2)
        except TechnicalRestriction as e:
            logger.info("localized virial unavailable: %s", e)
            report.verdict = "BlowupBarrierOnly"
        except RefinementPrecondition as e:
            logger.warning("refinement delta=%s rejected: %s", delta, e)
            report.delta, report.verdict = delta, "BlowupBarrierOnly"
        else:
            report.localized = result
            report.delta, report.delta_tilde = result.delta, result.delta_tilde
            report.verdict = result.verdict
    else:
        report.route, report.verdict = "MassEnergyBelow", "BlowupBarrierOnly"

    logger.info(
        "classified: verdict=%s route=%s lambda0=%s product=%.6g sigma=%.6g",
        report.verdict,
        report.route,
        "n/a" if report.lambda0 is None else f"{report.lambda0:.6g}",
        product,
        sigma,
    )
    return report


def trapped(grad_norm: float, report: ClassificationReport, gs: GroundState) -> bool:
    """True when ‖∇u(t)‖ = grad_norm stays on the same side of x₁ as ‖∇u₀‖."""
    _, sigma, _ = _require_constants(gs)
    s_c = report.s_c
    product = grad_norm**s_c * report.mass ** ((1 - s_c) / 2)
    return (product < sigma) == (report.grad_mass_product < sigma)


# ---------------------------------------------------------------------------
# Localized virial
# ---------------------------------------------------------------------------


def _check_route_range(N: int, p: float) -> None:
    upper = 5.0 if N <= 2 else min(1 + 4 / (N - 2), 5.0)
    if N < 2 or not (1 + 4 / N < p < upper):
        raise TechnicalRestriction(
            f"localized virial needs N >= 2 and 1+4/N < p < min(1+4/(N-2), 5); "
            f"got N={N}, p={p}"
        )


def _gradient_gap(delta: float, q: float) -> float:
    """δ̃ with f((1+δ̃)x₁) = (1−δ)f(x₁), f normalized by x₁."""

    def excess(z: float) -> float:
        return (q * z**2 - 2 * z**q) / (q - 2) - (1 - delta)

    hi = 2.0
    while excess(hi) > 0:
        hi *= 2
    return brentq(excess, 1.0, hi, xtol=1e-14) - 1


def exterior_mass(u: ComplexField, m: float) -> float:
    """∫_{|x|>m}|u|² dx."""
    if m >= u.grid.r_max:
        return 0.0
    params = u.params
    weight = np.abs(u.values) ** 2 * u.r ** (params.N - 1)
    nodes = np.concatenate(([0.0], u.r, [u.grid.r_max]))
    running = cumulative_trapezoid(np.concatenate(([0.0], weight, [0.0])), nodes, initial=0.0)
    inside = params.sphere_area * float(np.interp(m, nodes, running))
    return max(mass(u) - inside, 0.0)


def localized_virial_rhs(
    u: ComplexField, m: float, c1: float = DEFAULT_VIRIAL_C1, c2: float = DEFAULT_VIRIAL_C2
) -> float:
    """Upper bound for d²/dt² ∫φ_m|u|² with cutoff radius m."""
    N, p = u.params.N, u.params.p
    e, g, mass_u = energy(u), grad_sq(u), mass(u)
    gamma = (N - 1) * (p - 1) / 2
    return (
        4 * N * (p - 1) * e
        - (2 * N * (p - 1) - 8) * g
        + c1 * m ** (-gamma) * mass_u ** ((p + 3) / 4) * g ** ((p - 1) / 4)
        + c2 * m ** (-2) * exterior_mass(u, m)
    )


def virial_weight(r: np.ndarray, m: float = 1.0) -> np.ndarray:
    """φ_m(r) = m²φ(r/m): r² up to 1, C² quartic flattening on [1, 2], constant after."""
    rr = np.asarray(r, dtype=float) / m
    s = np.clip(rr - 1, 0.0, 1.0)
    flattened = 1 + 2 * s + s**2 - (10 / 3) * s**3 + 1.5 * s**4
    return m**2 * np.where(rr <= 1, rr**2, flattened)


def localized_virial_moment(u: ComplexField, m: float) -> float:
    return radial_integral(virial_weight(u.r, m) * np.abs(u.values) ** 2, u.grid, u.params)


def localized_virial_route(
    u0: ComplexField,
    gs: GroundState,
    delta: float,
    c1: float = DEFAULT_VIRIAL_C1,
    c2: float = DEFAULT_VIRIAL_C2,
) -> LocalizedVirialResult:
    """Blow-up for radial data of infinite variance below the refined threshold.

    Requires Λ₀ ≤ (1−δ)^{s_c}·threshold. Above sigma the gradient then stays
    above (1+δ̃)x₁, the main virial terms are bounded by −margin, and the
    remainder of the localized identity falls below margin/2 once m exceeds
    m_threshold.
    """
    N, p = u0.params.N, u0.params.p
    _check_route_range(N, p)
    c_gn, sigma, threshold = _require_constants(gs)
    if not 0 < delta < 1:
        raise RefinementPrecondition(f"delta must lie strictly inside (0, 1), got {delta}")

    report = scaling_invariants(u0, gs)
    s_c = report.s_c
    if report.lambda0 is not None and report.lambda0 > (1 - delta) ** s_c * threshold:
        raise RefinementPrecondition(
            f"lambda0 = {report.lambda0:.6g} exceeds (1-delta)^s_c * threshold = "
            f"{(1 - delta) ** s_c * threshold:.6g}"
        )
    if report.grad_mass_product <= sigma:
        verdict: Verdict = "Global" if report.grad_mass_product < sigma else "Indeterminate"
        return LocalizedVirialResult(delta, None, None, None, None, None, verdict)

    q, _ = _gn_exponents(gs)
    delta_tilde = _gradient_gap(delta, q)
    window = (2 * N * (p - 1) - 8) * (1 - (1 - delta) / (1 + delta_tilde) ** 2)
    epsilon = _EPSILON_SHARE * window
    grad_floor = (1 + delta_tilde) ** 2 * report.x1**2
    margin = -(4 * N * (p - 1) * report.energy - (2 * N * (p - 1) - 8 - epsilon) * grad_floor)

    # Young: c1 m^-γ M^{(p+3)/4} G^{(p-1)/4} <= ε G + C_ε (c1 m^-γ M^{(p+3)/4})^{4/(5-p)}
    gamma = (N - 1) * (p - 1) / 2
    r_exp, r_conj = 4 / (p - 1), 4 / (5 - p)
    c_eps = (epsilon * r_exp) ** (-r_conj / r_exp) / r_conj

    log_mass = math.log(report.mass)

    def remainder(log_m: float) -> float:
        log_young = math.log(c_eps) + r_conj * (
            math.log(c1) - gamma * log_m + (p + 3) / 4 * log_mass
        )
        log_exterior = math.log(c2) - 2 * log_m + log_mass
        return math.exp(min(log_young, 700.0)) + math.exp(log_exterior) - margin / 2

    m_threshold = math.exp(brentq(remainder, -50.0, 50.0, xtol=1e-12))
    logger.info(
        "localized virial: delta=%.4g delta_tilde=%.4g eps=%.4g margin=%.6g m>=%.6g",
        delta,
        delta_tilde,
        epsilon,
        margin,
        m_threshold,
    )
    return LocalizedVirialResult(
        delta=delta,
        delta_tilde=delta_tilde,
        epsilon=epsilon,
        epsilon_window=window,
        margin=margin,
        m_threshold=m_threshold,
        verdict="FiniteTimeBlowup",
    )
