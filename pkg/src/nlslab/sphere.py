"""Contracting-sphere blow-up profile for the 3-D cubic equation and its audits."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Literal

import numpy as np
from scipy.integrate import trapezoid

from .config import sweep_threads
from .errors import AuditFailure, CancellationFailure, FitIllConditioned, NotSupercritical
from .fields import ComplexField, NlsParams, RadialGrid, grad_sq, lp_norm, mass, sobolev_norm_sq

logger = logging.getLogger(__name__)

Regime = Literal["Contracting", "ConstantRadius", "Expanding"]

CUBIC_3D = NlsParams(N=3, p=3.0)
# σ^{3/2} = 3/32π makes the soliton energy exactly −1/16π.
SOLITON_ENERGY = -1 / (16 * math.pi)
# ∫|∂_y w|² dy forced by the definition of λ.
W_GRADIENT_SQ = 1 / (4 * math.pi)

_CLOSED_FORM_RTOL = 1e-10
_CANCELLATION_RTOL = 1e-8
_RATE_TOLERANCE = 0.02
_MASS_ERROR_FACTOR = 10.0
_RATE_EXPONENTS = {"l3": -2 / 9, "h_half": -1 / 3, "grad": -2 / 3}


# ---------------------------------------------------------------------------
# Parameters and frame
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WFrame:
    """Moving frame at T − t = tau: y = (r − r0)/λ, rescaled time s."""

    tau: float
    r0: float
    lam: float
    s: float

    def y(self, r: np.ndarray) -> np.ndarray:
        return (np.asarray(r, dtype=float) - self.r0) / self.lam

    @property
    def y_left(self) -> float:
        """Position of r = 0 in the frame."""
        return -self.r0 / self.lam


@dataclass(frozen=True)
class SphereParams:
    """Closed-form constants of the scenario at a given mass.

    Attributes:
        mass: M[u].
        T: Blow-up time.
        theta: Constant phase.
        alpha: r0 = alpha (T−t)^{1/3}.
        beta: λ = beta (T−t)^{2/3}.
        kappa: (r0)_s/λ, negative for a shrinking radius.
        sigma: Soliton parameter, P(y) = √(2σ) sech(√σ y).
        nu: Temporal phase rate in s.
        s_coeff: s = s_coeff (T−t)^{−1/3}.
    """

    mass: float
    T: float
    theta: float
    alpha: float
    beta: float
    kappa: float
    sigma: float
    nu: float
    s_coeff: float

    def frame(self, tau: float) -> WFrame:
        if not tau > 0:
            raise ValueError(f"T - t must be positive, got {tau}")
        return WFrame(
            tau=tau,
            r0=self.alpha * tau ** (1 / 3),
            lam=self.beta * tau ** (2 / 3),
            s=self.s_coeff * tau ** (-1 / 3),
        )

    @property
    def soliton_amplitude(self) -> float:
        return math.sqrt(2 * self.sigma)

    @property
    def soliton_mass(self) -> float:
        """M[P] = 4√σ."""
        return 4 * math.sqrt(self.sigma)

    @property
    def soliton_energy(self) -> float:
        """E[P] = −(2/3)σ^{3/2}."""
        return -2 / 3 * self.sigma**1.5

    def to_record(self) -> dict:
        record = asdict(self)
        # Printed in the scenario's introduction under the name of κ; its value is κ².
        record["intro_constant"] = 4 / 3 * (3 / (32 * math.pi)) ** (2 / 3)
        return record


def derive_params(mass: float, T: float = 1.0, theta: float = 0.0) -> SphereParams:
    if not mass > 0:
        raise ValueError(f"mass must be positive, got {mass}")
    if not T > 0:
        raise ValueError(f"blow-up time must be positive, got {T}")
    alpha = 3 ** (1 / 6) * mass ** (1 / 3) / (2 * math.pi ** (1 / 3))
    beta = (18 / mass) ** (1 / 3)
    kappa = -alpha * beta / 3
    sigma = (3 / (32 * math.pi)) ** (2 / 3)
    return SphereParams(
        mass=mass,
        T=T,
        theta=theta,
        alpha=alpha,
        beta=beta,
        kappa=kappa,
        sigma=sigma,
        nu=kappa**2,
        s_coeff=3 / beta**2,
    )


# ---------------------------------------------------------------------------
# Profile
# ---------------------------------------------------------------------------


def soliton(y: np.ndarray, sp: SphereParams) -> np.ndarray:
    """P(y) = √(3/2)|κ| sech(√3/2 |κ| y)."""
    root = math.sqrt(sp.sigma)
    return sp.soliton_amplitude / np.cosh(root * np.asarray(y, dtype=float))


def w_profile(y: np.ndarray, sp: SphereParams, s: float = 0.0) -> np.ndarray:
    """w(y, s) = e^{iθ} e^{iνs} e^{iκy/2} P(y)."""
    y = np.asarray(y, dtype=float)
    phase = np.exp(1j * (sp.theta + sp.nu * s + sp.kappa * y / 2))
    return phase * soliton(y, sp)


def w_derivative(y: np.ndarray, sp: SphereParams, s: float = 0.0) -> np.ndarray:
    """∂_y w from P' = −√σ tanh(√σ y) P."""
    y = np.asarray(y, dtype=float)
    root = math.sqrt(sp.sigma)
    dP = -root * np.tanh(root * y)
    return (1j * sp.kappa / 2 + dP) * w_profile(y, sp, s)


def profile_at(r: np.ndarray, tau: float, sp: SphereParams) -> np.ndarray:
    frame = sp.frame(tau)
    return w_profile(frame.y(r), sp, frame.s) / frame.lam


def profile(r: np.ndarray, t: float, sp: SphereParams) -> np.ndarray:
    """u(r, t) = (1/λ) w((r − r0)/λ, s) for t < T."""
    if not t < sp.T:
        raise ValueError(f"profile exists for t < T = {sp.T}, got t = {t}")
    return profile_at(r, sp.T - t, sp)


def snapshot(
    sp: SphereParams, tau: float, points_per_lambda: float = 10.0, y_cut_widths: float = 40.0
) -> ComplexField:
    """The 3-D profile at T − t = tau on a grid resolving λ, cut y_cut_widths/√σ past r0."""
    frame = sp.frame(tau)
    r_max = frame.r0 + y_cut_widths / math.sqrt(sp.sigma) * frame.lam
    grid = RadialGrid.from_spacing(r_max, frame.lam / points_per_lambda, gradient="spectral")
    return ComplexField(grid, profile_at(grid.r, tau, sp), CUBIC_3D)


# ---------------------------------------------------------------------------
# One-dimensional functionals
# ---------------------------------------------------------------------------


@dataclass
class WQuadrature:
    """w-frame functionals by quadrature over |y| ≤ y_cut."""

    soliton_mass: float
    soliton_energy: float
    w_mass: float
    w_momentum: float
    w_energy: float
    w_gradient_sq: float
    w_tilde_energy: float
    y_cut: float


def y_grid(sp: SphereParams, y_cut_widths: float = 40.0, points: int = 8001) -> np.ndarray:
    y_cut = y_cut_widths / math.sqrt(sp.sigma)
    return np.linspace(-y_cut, y_cut, points)


def w_quadrature(sp: SphereParams, y_cut_widths: float = 40.0, points: int = 8001) -> WQuadrature:
    y = y_grid(sp, y_cut_widths, points)
    P = soliton(y, sp)
    dP = -math.sqrt(sp.sigma) * np.tanh(math.sqrt(sp.sigma) * y) * P
    w = w_profile(y, sp)
    dw = w_derivative(y, sp)
    soliton_energy = trapezoid(0.5 * dP**2 - 0.25 * P**4, y)
    grad = trapezoid(np.abs(dw) ** 2, y)
    # w̃ = e^{−iκy/2} w is P up to a constant phase.
    return WQuadrature(
        soliton_mass=float(trapezoid(P**2, y)),
        soliton_energy=float(soliton_energy),
        w_mass=float(trapezoid(np.abs(w) ** 2, y)),
        w_momentum=float(trapezoid(np.imag(w * np.conj(dw)), y)),
        w_energy=float(trapezoid(0.5 * np.abs(dw) ** 2 - 0.25 * np.abs(w) ** 4, y)),
        w_gradient_sq=float(grad),
        w_tilde_energy=float(soliton_energy),
        y_cut=float(y[-1]),
    )


def w_mass_closed(sp: SphereParams) -> float:
    """M[w] = 18^{1/3} M^{2/3}/(4πα²)."""
    return 18 ** (1 / 3) * sp.mass ** (2 / 3) / (4 * math.pi * sp.alpha**2)


def w_momentum_closed(sp: SphereParams) -> float:
    """P[w] = (12M)^{1/3}/(8πα)."""
    return (12 * sp.mass) ** (1 / 3) / (8 * math.pi * sp.alpha)


def w_momentum_virial(sp: SphereParams) -> float:
    """P[w] = (M/24π) β²/α, from the first virial identity."""
    return sp.mass / (24 * math.pi) * sp.beta**2 / sp.alpha


def w_tilde_energy_closed(sp: SphereParams) -> float:
    """½(κ/2)² M[w] + ½ κ P[w] + E[w] with E[w] = 0."""
    return 0.5 * (sp.kappa / 2) ** 2 * w_mass_closed(sp) + 0.5 * sp.kappa * w_momentum_closed(sp)


def tail_shares(sp: SphereParams, tau: float, y_cut_widths: float = 40.0) -> tuple[float, float]:
    """Shares of M[P] left of y_L (r < 0) and beyond |y| = y_cut."""
    root = math.sqrt(sp.sigma)
    y_left = sp.frame(tau).y_left
    left = (1 + math.tanh(root * y_left)) / 2
    outer = 1 - math.tanh(y_cut_widths)
    return left, outer


# ---------------------------------------------------------------------------
# Power-law fits
# ---------------------------------------------------------------------------


def fit_exponent(taus: Sequence[float], values: Sequence[float]) -> float:
    """Slope of log(value) against log(T − t)."""
    x = np.log(np.asarray(taus, dtype=float))
    y = np.asarray(values, dtype=float)
    if x.size < 3:
        raise FitIllConditioned(f"exponent fit needs 3 points, got {x.size}")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise FitIllConditioned("exponent fit needs finite positive values")
    slope, _ = np.polyfit(x, np.log(y), 1)
    if not math.isfinite(slope):
        raise FitIllConditioned("exponent fit did not converge")
    return float(slope)


# ---------------------------------------------------------------------------
# Audit
# ---------------------------------------------------------------------------


@dataclass
class AuditItem:
    name: str
    value: float
    reference: float
    residual: float
    tolerance: float
    ok: bool
    tau: float | None = None


def _item(
    name: str, value: float, reference: float, tolerance: float, tau: float | None = None
) -> AuditItem:
    """Relative residual against reference; absolute when the reference is 0."""
    scale = abs(reference) if reference != 0 else 1.0
    residual = abs(value - reference) / scale
    return AuditItem(name, value, reference, residual, tolerance, bool(residual <= tolerance), tau)


def _absolute_item(name: str, value: float, reference: float, tolerance: float) -> AuditItem:
    residual = abs(value - reference)
    return AuditItem(name, value, reference, residual, tolerance, bool(residual <= tolerance))


@dataclass
class SnapshotMeasures:
    tau: float
    r0: float
    lam: float
    mass: float
    grad_sq: float
    l3: float
    h_half: float
    y_left_share: float
    y_cut_share: float


def measure_snapshot(
    sp: SphereParams, tau: float, points_per_lambda: float = 10.0, y_cut_widths: float = 40.0
) -> SnapshotMeasures:
    u = snapshot(sp, tau, points_per_lambda, y_cut_widths)
    frame = sp.frame(tau)
    left, outer = tail_shares(sp, tau, y_cut_widths)
    return SnapshotMeasures(
        tau=tau,
        r0=frame.r0,
        lam=frame.lam,
        mass=mass(u),
        grad_sq=grad_sq(u),
        l3=lp_norm(u, 3),
        h_half=math.sqrt(sobolev_norm_sq(u, 0.5)),
        y_left_share=left,
        y_cut_share=outer,
    )


@dataclass
class SphereAudit:
    """Every audited identity with its residual, plus the per-snapshot measures."""

    params: SphereParams
    items: list[AuditItem] = field(default_factory=list)
    snapshots: list[SnapshotMeasures] = field(default_factory=list)
    rate_snapshots: list[SnapshotMeasures] = field(default_factory=list)
    rate_exponents: dict[str, float] = field(default_factory=dict)

    @property
    def failed(self) -> list[str]:
        return [item.name for item in self.items if not item.ok]

    @property
    def ok(self) -> bool:
        return not self.failed

    def to_record(self) -> dict:
        return {
            "params": self.params.to_record(),
            "ok": self.ok,
            "failed": self.failed,
            "items": [asdict(item) for item in self.items],
            "snapshots": [asdict(m) for m in self.snapshots],
            "rate_snapshots": [asdict(m) for m in self.rate_snapshots],
            "rate_exponents": self.rate_exponents,
        }


def _require_ladder(taus: Sequence[float], T: float) -> list[float]:
    taus = sorted((float(tau) for tau in taus), reverse=True)
    if len(taus) < 3 or taus[-1] <= 0 or taus[0] >= T:
        raise ValueError("audit ladder needs at least 3 values of T - t inside (0, T)")
    if taus[0] / taus[-1] < 100:
        raise ValueError("audit ladder must span at least two decades of T - t")
    return taus


def _measure_ladder(
    sp: SphereParams, taus: Sequence[float], points_per_lambda: float, y_cut_widths: float
) -> list[SnapshotMeasures]:
    def one(tau: float) -> SnapshotMeasures:
        return measure_snapshot(sp, tau, points_per_lambda, y_cut_widths)

    with ThreadPoolExecutor(max_workers=sweep_threads()) as pool:
        return list(pool.map(one, taus))


def conservation_audit(
    sp: SphereParams,
    taus: Sequence[float],
    rate_taus: Sequence[float] | None = None,
    *,
    y_cut_widths: float = 40.0,
    y_points: int = 8001,
    points_per_lambda: float = 10.0,
    tolerance: float = 1e-8,
    raise_on_failure: bool = True,
) -> SphereAudit:
    """Audit the scenario's conservation laws on ladders of T − t.

    The mass and frame checks run on taus; the 3-D rate fits run on rate_taus
    (taus when omitted), which must be deep enough for λ/r0 ≪ 1.
    """
    taus = _require_ladder(taus, sp.T)
    rate_taus = _require_ladder(rate_taus if rate_taus is not None else taus, sp.T)
    audit = SphereAudit(params=sp)
    add = audit.items.append

    # constants
    add(_item("kappa_two_ways", abs(sp.kappa), 2 * math.sqrt(sp.sigma / 3), 1e-12))
    add(_item("nu_is_kappa_sq", sp.nu, 4 / 3 * sp.sigma, 1e-12))
    add(_item("soliton_energy_closed", sp.soliton_energy, SOLITON_ENERGY, 1e-12))
    add(_item("beta_virial", sp.beta**3 * sp.mass, 18.0, 1e-12))

    # w-frame closed forms
    add(_item("w_mass_closed", w_mass_closed(sp), sp.soliton_mass, _CLOSED_FORM_RTOL))
    add(
        _item(
            "w_momentum_closed",
            w_momentum_closed(sp),
            -2 * sp.kappa * math.sqrt(sp.sigma),
            _CLOSED_FORM_RTOL,
        )
    )
    add(_item("w_momentum_virial", w_momentum_virial(sp), w_momentum_closed(sp), _CLOSED_FORM_RTOL))
    tilde = w_tilde_energy_closed(sp)
    add(_item("w_tilde_energy_closed", tilde, SOLITON_ENERGY, _CLOSED_FORM_RTOL))
    zero_phase = sp.kappa**2 / 8 * sp.soliton_mass + sp.soliton_energy
    add(_absolute_item("zero_energy_phase_closed", zero_phase, 0.0, 1e-12))

    # w-frame quadrature
    quad = w_quadrature(sp, y_cut_widths, y_points)
    add(_item("soliton_mass_quadrature", quad.soliton_mass, sp.soliton_mass, tolerance))
    add(_item("soliton_energy_quadrature", quad.soliton_energy, SOLITON_ENERGY, tolerance))
    add(_item("w_mass_quadrature", quad.w_mass, w_mass_closed(sp), tolerance))
    add(_item("w_momentum_quadrature", quad.w_momentum, w_momentum_closed(sp), tolerance))
    add(_item("w_gradient_quadrature", quad.w_gradient_sq, W_GRADIENT_SQ, tolerance))
    add(_item("w_tilde_energy_quadrature", quad.w_tilde_energy, SOLITON_ENERGY, tolerance))
    add(_absolute_item("zero_energy_phase_quadrature", quad.w_energy, 0.0, tolerance))

    # 3-D profile on the ladder
    for tau in taus:
        frame = sp.frame(tau)
        law = 4 * math.pi * frame.r0**2 * sp.soliton_mass / frame.lam
        add(_item("mass_law", law, sp.mass, 1e-12, tau))
    audit.snapshots = _measure_ladder(sp, taus, points_per_lambda, y_cut_widths)
    for m in audit.snapshots:
        add(_item("mass_recovery", m.mass, sp.mass, _MASS_ERROR_FACTOR * m.lam / m.r0, m.tau))

    audit.rate_snapshots = _measure_ladder(sp, rate_taus, points_per_lambda, y_cut_widths)
    rs = audit.rate_snapshots
    audit.rate_exponents = {
        "l3": fit_exponent(rate_taus, [m.l3 for m in rs]),
        "h_half": fit_exponent(rate_taus, [m.h_half for m in rs]),
        "grad": fit_exponent(rate_taus, [math.sqrt(m.grad_sq) for m in rs]),
    }
    for name, expected in _RATE_EXPONENTS.items():
        add(_absolute_item(f"rate_{name}", audit.rate_exponents[name], expected, _RATE_TOLERANCE))
    for m in rs:
        defined = m.grad_sq * m.lam**3 / m.r0**2
        add(_item("lambda_definition", defined, 1.0, _MASS_ERROR_FACTOR * m.lam / m.r0, m.tau))

    for item in audit.items:
        if not item.ok:
            logger.warning(
                "audit %s failed: value=%.12g reference=%.12g residual=%.3e",
                item.name,
                item.value,
                item.reference,
                item.residual,
            )
    logger.info("sphere audit: %d items, %d failed", len(audit.items), len(audit.failed))
    if raise_on_failure and audit.failed:
        raise AuditFailure(audit, audit.failed)
    return audit


# ---------------------------------------------------------------------------
# Dropped terms and cancellations
# ---------------------------------------------------------------------------


def _fourth_order_derivatives(f: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    """Centered fourth-order first and second derivatives on the interior f[2:-2]."""
    d1 = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    d2 = (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * h**2)
    return d1, d2


@dataclass
class ResidualScaling:
    """Sizes of the terms the reduced w-equation drops, along a ladder of T − t.

    Attributes:
        taus: Ladder of T − t.
        coefficient: λ/r0 at each point.
        transport_term: ‖(2λ/r0) ∂_y w‖ in L²(dy).
        scaling_term: ‖(λ_s/λ) Λw‖ in L²(dy), Λw = w + y ∂_y w.
        retained_residual: ‖residual of the reduced equation‖, evaluated with
            finite differences; roundoff-sized when the soliton solves it.
        full_residual: ‖residual of the equation with both terms kept‖.
        exponents: Fitted power of T − t for coefficient, transport_term,
            scaling_term and full_residual.
    """

    taus: list[float]
    coefficient: list[float]
    transport_term: list[float]
    scaling_term: list[float]
    retained_residual: list[float]
    full_residual: list[float]
    exponents: dict[str, float]


def _l2(f: np.ndarray, y: np.ndarray) -> float:
    return math.sqrt(trapezoid(np.abs(f) ** 2, y))


def _lambda_s_over_lambda(sp: SphereParams, tau: float) -> float:
    """λ_s/λ = λ_t λ = −(2/3)β² (T−t)^{1/3}."""
    return -2 / 3 * sp.beta**2 * tau ** (1 / 3)


def residual_scaling(
    sp: SphereParams, taus: Sequence[float], y_cut_widths: float = 40.0, points: int = 8001
) -> ResidualScaling:
    """Term-by-term evaluation with r ≈ r0 in the transport coefficient."""
    taus = _require_ladder(taus, sp.T)
    y = y_grid(sp, y_cut_widths, points)
    h = y[1] - y[0]
    inner = y[2:-2]
    out = ResidualScaling(list(taus), [], [], [], [], [], {})
    for tau in taus:
        frame = sp.frame(tau)
        w = w_profile(y, sp, frame.s)
        dw, d2w = _fourth_order_derivatives(w, h)
        wi = w[2:-2]
        ds_w = 1j * sp.nu * wi
        retained = 1j * ds_w + d2w - 1j * sp.kappa * dw + np.abs(wi) ** 2 * wi
        coefficient = frame.lam / frame.r0
        transport = 2 * coefficient * dw
        scaling = -1j * _lambda_s_over_lambda(sp, tau) * (wi + inner * dw)
        out.coefficient.append(coefficient)
        out.transport_term.append(_l2(transport, inner))
        out.scaling_term.append(_l2(scaling, inner))
        out.retained_residual.append(_l2(retained, inner))
        out.full_residual.append(_l2(retained + transport + scaling, inner))
    out.exponents = {
        "coefficient": fit_exponent(taus, out.coefficient),
        "transport_term": fit_exponent(taus, out.transport_term),
        "scaling_term": fit_exponent(taus, out.scaling_term),
        "full_residual": fit_exponent(taus, out.full_residual),
    }
    logger.info(
        "dropped terms: transport ~ tau^%.4f, scaling ~ tau^%.4f",
        out.exponents["transport_term"],
        out.exponents["scaling_term"],
    )
    return out


@dataclass
class Cancellation:
    """Two drift terms of M[w] or P[w] and their sum."""

    first: float
    second: float
    residual: float


@dataclass
class CancellationReport:
    tau: float
    mass_pair: Cancellation
    momentum_pair: Cancellation
    w_gradient_sq: float


def _pair(name: str, first: float, second: float) -> Cancellation:
    scale = max(abs(first), abs(second))
    residual = abs(first + second) / scale if scale > 0 else 0.0
    if residual > _CANCELLATION_RTOL:
        raise CancellationFailure(name, residual)
    return Cancellation(first, second, residual)


def refined_cancellation(
    sp: SphereParams, tau: float, y_cut_widths: float = 40.0, points: int = 8001
) -> CancellationReport:
    """Drift terms of M[w] and P[w] once the transport and scaling terms are kept.

    Mass: −(2λ/r0)P[w] − (λ_s/2λ)M[w]. Momentum: (4λ/r0)∫|∂_y w|² + (2λ_s/λ)P[w].
    Both pairs must cancel.
    """
    frame = sp.frame(tau)
    quad = w_quadrature(sp, y_cut_widths, points)
    ratio = frame.lam / frame.r0
    rate = _lambda_s_over_lambda(sp, tau)
    report = CancellationReport(
        tau=tau,
        mass_pair=_pair("mass", -2 * ratio * quad.w_momentum, -rate / 2 * quad.w_mass),
        momentum_pair=_pair(
            "momentum", 4 * ratio * quad.w_gradient_sq, 2 * rate * quad.w_momentum
        ),
        w_gradient_sq=quad.w_gradient_sq,
    )
    logger.info(
        "cancellations at T-t=%.3g: mass %.2e, momentum %.2e",
        tau,
        report.mass_pair.residual,
        report.momentum_pair.residual,
    )
    return report


# ---------------------------------------------------------------------------
# General (p, N)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RegimeRecord:
    p: Fraction
    N: int
    gamma: Fraction
    r0_exponent: Fraction
    regime: Regime

    def to_record(self) -> dict:
        def exact(q: Fraction) -> int | str:
            return q.numerator if q.denominator == 1 else f"{q.numerator}/{q.denominator}"

        return {
            "p": exact(self.p),
            "N": self.N,
            "gamma": exact(self.gamma),
            "r0_exponent": exact(self.r0_exponent),
            "regime": self.regime,
        }


def _exact(value: float | int | str | Fraction) -> Fraction:
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def general_exponents(p: float | int | str | Fraction, N: int) -> RegimeRecord:
    """λ ~ (T−t)^γ and r0 ~ (T−t)^{r0_exponent} for NLS_p on R^N."""
    p = _exact(p)
    if N < 2:
        raise ValueError(f"a sphere needs N >= 2, got N = {N}")
    if p <= 1 + Fraction(4, N):
        raise NotSupercritical(f"p = {p} is not mass-supercritical in N = {N}; need p > 1 + 4/N")
    spread = (p - 1) * (N - 1)
    denominator = spread + 5 - p
    regime: Regime = "Contracting" if p < 5 else "ConstantRadius" if p == 5 else "Expanding"
    return RegimeRecord(p, N, spread / denominator, (5 - p) / denominator, regime)
