"""L³ concentration windows and the space/frequency split of a radial field."""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
from scipy.integrate import simpson, trapezoid

from .config import sweep_threads
from .errors import UnsupportedDimension, ZeroField
from .fields import (
    ComplexField,
    SineCoefficients,
    grad_sq,
    lp_integral,
    lp_norm,
    radial_derivative,
    radial_integral,
    radial_inverse,
    radial_transform,
)

logger = logging.getLogger(__name__)

Scenario = Literal["Tight", "Wide", "Both", "Neither"]

_CHI_INNER = 1 / (8 * np.pi)
_CHI_OUTER = 1 / (2 * np.pi)
_CHI_NODES = 2001
# χ̂ is below roundoff past this frequency; the quadrature would not resolve it anyway.
_XI_CUTOFF = 200.0
_XI_CHUNK = 256
# Scenario flags over a snapshot series.
_TIGHT_KEEP_FRACTION = 0.1
_WIDE_GROWTH = 2.0


def _smooth_step(t: np.ndarray) -> np.ndarray:
    """C^∞ step: 0 for t ≤ 0, 1 for t ≥ 1."""
    t = np.asarray(t, dtype=float)

    def bump(s):
        out = np.zeros_like(s)
        pos = s > 0
        out[pos] = np.exp(-1 / s[pos])
        return out

    left, right = bump(t), bump(1 - t)
    return left / (left + right)


@dataclass(frozen=True)
class Cutoffs:
    """Spatial cutoff φ, frequency mollifier χ and the window constants.

    Attributes:
        c1: Spatial window constant in R = c1‖u₀‖^{3/2}‖∇u‖^{-1/2}.
        c2: Frequency window constant in ρ = c2‖∇u‖².
        strauss_c: Constant of the exterior bound on ‖u2‖₄⁴.
        high_freq_c: Constant of the bound on ‖u1H‖₄⁴.
        interior_c: Constant of the lower bound ‖∇u‖² ≤ c‖u1L‖₄⁴.
    """

    c1: float = 10.0
    c2: float = 1.0
    strauss_c: float = 4.0
    high_freq_c: float = 4.0
    interior_c: float = 4.0

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not value > 0:
                raise ValueError(f"cutoff constant {name} must be positive")

    @classmethod
    def from_config(cls, cfg) -> Cutoffs:
        return cls(**cfg.model_dump())

    @staticmethod
    def phi(r: np.ndarray) -> np.ndarray:
        """1 on r ≤ 1, 0 on r ≥ 2."""
        return 1 - _smooth_step(np.asarray(r, dtype=float) - 1)

    @staticmethod
    def chi(r: np.ndarray) -> np.ndarray:
        """1 on r ≤ 1/8π, 0 on r ≥ 1/2π."""
        r = np.asarray(r, dtype=float)
        return 1 - _smooth_step((r - _CHI_INNER) / (_CHI_OUTER - _CHI_INNER))

    @cached_property
    def _chi_samples(self) -> tuple[np.ndarray, np.ndarray]:
        r = np.linspace(0.0, _CHI_OUTER, _CHI_NODES)
        return r, self.chi(r)

    @cached_property
    def chi_hat_origin(self) -> float:
        """χ̂(0) = ∫χ dx."""
        r, chi = self._chi_samples
        return float(4 * np.pi * simpson(r**2 * chi, x=r))

    def multiplier(self, xi: np.ndarray) -> np.ndarray:
        """m(ξ) = χ̂(ξ)/χ̂(0), with χ̂(ξ) = (2/ξ)∫ r χ(r) sin(2πξr) dr."""
        xi = np.abs(np.asarray(xi, dtype=float))
        r, chi = self._chi_samples
        out = np.zeros_like(xi)
        out[xi == 0] = 1.0
        live = np.flatnonzero((xi > 0) & (xi <= _XI_CUTOFF))
        for start in range(0, live.size, _XI_CHUNK):
            idx = live[start : start + _XI_CHUNK]
            kernel = r * chi * np.sin(2 * np.pi * np.outer(xi[idx], r))
            out[idx] = 2 / xi[idx] * simpson(kernel, x=r, axis=1) / self.chi_hat_origin
        return out


def smallfreq_constant(cutoffs: Cutoffs, xi: np.ndarray) -> float:
    """sup |1 − m(ξ)| / min(|ξ|, 1) over the given nonzero frequencies."""
    xi = np.abs(np.asarray(xi, dtype=float))
    xi = xi[xi > 0]
    if xi.size == 0:
        return 0.0
    return float(np.max(np.abs(1 - cutoffs.multiplier(xi)) / np.minimum(xi, 1.0)))


# ---------------------------------------------------------------------------
# Windows and decomposition
# ---------------------------------------------------------------------------


def windows(u: ComplexField, u0_mass: float, cutoffs: Cutoffs) -> tuple[float, float]:
    """(R, ρ) with R = c1‖u₀‖₂^{3/2}‖∇u‖₂^{-1/2} and ρ = c2‖∇u‖₂²."""
    g = grad_sq(u)
    if g <= 0:
        raise ZeroField("concentration windows need a field with nonzero gradient")
    if u0_mass < 0:
        raise ValueError(f"mass must be non-negative, got {u0_mass}")
    R = cutoffs.c1 * u0_mass ** 0.75 * g ** -0.25
    return R, cutoffs.c2 * g


@dataclass(frozen=True, eq=False)
class Decomposition:
    """u = u1L + u1H + u2 at window (R, ρ); u1 = u1L + u1H = φ(·/R)u."""

    R: float
    rho: float
    u1: ComplexField
    u1L: ComplexField
    u1H: ComplexField
    u2: ComplexField


def decompose(u: ComplexField, R: float, rho: float, cutoffs: Cutoffs) -> Decomposition:
    if u.params.N != 3:
        raise UnsupportedDimension(
            f"frequency split uses the sine representation, N = 3 only, got N = {u.params.N}"
        )
    if not (R > 0 and rho > 0):
        raise ValueError(f"windows must be positive, got R={R}, rho={rho}")
    u1 = u.with_values(cutoffs.phi(u.r / R) * u.values)
    u2 = u.with_values(u.values - u1.values)
    coefficients = radial_transform(u1)
    # Sine wavenumber k corresponds to frequency ξ = k/2π.
    m = cutoffs.multiplier(u.grid.wavenumbers / (2 * np.pi * rho))
    u1L = radial_inverse(SineCoefficients(u.grid, u.params, m * coefficients.values))
    u1H = u.with_values(u1.values - u1L.values)
    return Decomposition(R, rho, u1, u1L, u1H, u2)


# ---------------------------------------------------------------------------
# Bound checks
# ---------------------------------------------------------------------------


@dataclass
class BoundCheck:
    lhs: float
    rhs: float
    ok: bool


def _check(lhs: float, rhs: float) -> BoundCheck:
    return BoundCheck(lhs, rhs, bool(lhs <= rhs * (1 + 1e-12)))


def _exterior(density: np.ndarray, u: ComplexField, R: float) -> float:
    return radial_integral(np.where(u.r > R, density, 0.0), u.grid, u.params)


def strauss_ratio(u: ComplexField, R: float) -> float:
    """‖u‖⁴_{L⁴(|x|>R)} R² / (‖u‖³_{L²(|x|>R)} ‖∇u‖_{L²(|x|>R)}).

    0 for a vanishing tail.
    """
    amplitude = np.abs(u.values)
    l4 = _exterior(amplitude**4, u, R)
    l2 = _exterior(amplitude**2, u, R)
    grad = _exterior(np.abs(radial_derivative(u)) ** 2, u, R)
    denominator = l2**1.5 * math.sqrt(grad)
    if denominator == 0:
        return 0.0
    return l4 * R**2 / denominator


def check_bounds(
    u: ComplexField, parts: Decomposition | None, u0_mass: float, cutoffs: Cutoffs
) -> dict[str, BoundCheck]:
    """Both sides of the exterior, high-frequency and low-frequency bounds.

    Violations are reported, never raised. A field without gradient has no
    windows; pass parts=None and every side is 0.
    """
    if u.params.N != 3 or u.params.p != 3:
        raise UnsupportedDimension("the concentration bounds are for the 3-D cubic equation")
    g = grad_sq(u)
    if g == 0 or parts is None:
        zero = _check(0.0, 0.0)
        return {"u2_quarter": zero, "u1H_quarter": zero, "u1L_lower": zero}
    checks = {
        "u2_quarter": _check(
            lp_integral(parts.u2, 4),
            cutoffs.strauss_c / parts.R**2 * u0_mass**1.5 * math.sqrt(g),
        ),
        "u1H_quarter": _check(lp_integral(parts.u1H, 4), cutoffs.high_freq_c * g**2 / parts.rho),
        "u1L_lower": _check(g, cutoffs.interior_c * lp_integral(parts.u1L, 4)),
    }
    for name, check in checks.items():
        if not check.ok:
            logger.warning("bound %s violated: lhs=%.6g rhs=%.6g", name, check.lhs, check.rhs)
    return checks


# ---------------------------------------------------------------------------
# Window integrals
# ---------------------------------------------------------------------------


def ball_integral(u: ComplexField, center: float, radius: float, q: float = 3.0) -> float:
    """∫_{|x − x₀| ≤ radius} |u|^q dx for radial u and |x₀| = center (N = 3).

    The shell of radius r meets the ball in a cap of area 2πr²(1 − cos θ),
    cos θ = (r² + d² − a²)/(2rd).
    """
    r = u.r
    d, a = abs(center), radius
    if d == 0:
        area = np.where(r <= a, 4 * np.pi * r**2, 0.0)
    else:
        cos_theta = np.clip((r**2 + d**2 - a**2) / (2 * r * d), -1.0, 1.0)
        area = 2 * np.pi * r**2 * (1 - cos_theta)
    integrand = np.abs(u.values) ** q * area
    padded = np.concatenate(([0.0], integrand, [0.0]))
    nodes = np.concatenate(([0.0], r, [u.grid.r_max]))
    return float(trapezoid(padded, x=nodes))


@dataclass
class ConcentrationReport:
    """Windows, L³ quantities and bound checks of one snapshot.

    l3_tight_window and l3_wide_window hold ∫|u|³ over the balls of radius
    c1²‖∇u‖⁻² and c2‖u₀‖^{3/2}‖∇u‖^{-1/2}; l3_u1L and l3_u1 are L³ norms.
    The narrow_* fields describe the ball of radius 1/ρ about x₀ = argmax |u1L|.
    """

    t: float | None
    R: float
    rho: float
    grad_sq: float
    l3_u1L: float
    l3_u1: float
    l3_tight_window: float
    l3_wide_window: float
    narrow_center: float
    narrow_l3: float
    narrow_ratio: float
    c_star: float
    bound_checks: dict[str, BoundCheck] = field(default_factory=dict)

    def to_record(self) -> dict:
        record = asdict(self)
        checks = record.pop("bound_checks")
        for name, check in checks.items():
            record[f"{name}_lhs"] = check["lhs"]
            record[f"{name}_rhs"] = check["rhs"]
            record[f"{name}_ok"] = check["ok"]
        return record


def report_snapshot(
    u: ComplexField, u0_mass: float, cutoffs: Cutoffs, t: float | None = None
) -> ConcentrationReport:
    R, rho = windows(u, u0_mass, cutoffs)
    parts = decompose(u, R, rho, cutoffs)
    g = rho / cutoffs.c2
    x0 = float(u.r[np.argmax(np.abs(parts.u1L.values))])
    l4_low = lp_integral(parts.u1L, 4)
    return ConcentrationReport(
        t=t,
        R=R,
        rho=rho,
        grad_sq=g,
        l3_u1L=lp_norm(parts.u1L, 3),
        l3_u1=lp_norm(parts.u1, 3),
        l3_tight_window=ball_integral(u, 0.0, cutoffs.c1**2 / g),
        l3_wide_window=ball_integral(u, 0.0, cutoffs.c2 * u0_mass**0.75 * g**-0.25),
        narrow_center=x0,
        narrow_l3=ball_integral(parts.u1, x0, 1 / rho) ** (1 / 3),
        narrow_ratio=x0 * rho,
        c_star=g / l4_low if l4_low > 0 else math.inf,
        bound_checks=check_bounds(u, parts, u0_mass, cutoffs),
    )


def concentration_report(
    snapshots: Sequence[ComplexField],
    u0_mass: float,
    cutoffs: Cutoffs,
    times: Sequence[float] | None = None,
) -> list[ConcentrationReport]:
    """Per-snapshot reports, computed in parallel, returned in snapshot order."""
    if times is None:
        times = [None] * len(snapshots)
    if len(times) != len(snapshots):
        raise ValueError("times and snapshots differ in length")

    def one(item: tuple[ComplexField, float | None]) -> ConcentrationReport:
        return report_snapshot(item[0], u0_mass, cutoffs, item[1])

    with ThreadPoolExecutor(max_workers=sweep_threads()) as pool:
        reports = list(pool.map(one, zip(snapshots, times)))
    logger.info("concentration: %d snapshots processed", len(reports))
    return reports


def classify_scenario(reports: Sequence[ConcentrationReport]) -> Scenario:
    """Which window behaviour the series shows.

    Tight when the tight-window integral at the last snapshot keeps a fixed
    share of its largest value; Wide when the wide-window integral has grown
    by a factor of at least two over the series.
    """
    if len(reports) < 2:
        raise ValueError("scenario flags need at least two snapshots")
    tight = np.array([rep.l3_tight_window for rep in reports])
    wide = np.array([rep.l3_wide_window for rep in reports])
    tight_bounded = tight.max() > 0 and tight[-1] >= _TIGHT_KEEP_FRACTION * tight.max()
    wide_growing = wide[0] > 0 and wide[-1] >= _WIDE_GROWTH * wide[0]
    if tight_bounded and wide_growing:
        return "Both"
    if tight_bounded:
        return "Tight"
    if wide_growing:
        return "Wide"
    return "Neither"
