"""Radial grids, complex fields and the functionals computed on them."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal

import numpy as np
from scipy.fft import dct, dst, idst
from scipy.integrate import simpson, trapezoid
from scipy.special import gamma

from .errors import TailNotResolved, UnsupportedDimension

logger = logging.getLogger(__name__)

Quadrature = Literal["trapezoid", "simpson"]
GradientMode = Literal["auto", "spectral", "fd"]

# Virial tail check: weight beyond this fraction of r_max must stay below the ratio.
_TAIL_START = 0.9
_TAIL_WARN_RATIO = 1e-6


@dataclass(frozen=True)
class NlsParams:
    """Parameters of i u_t + Δu + |u|^{p-1} u = 0 on R^N.

    Attributes:
        N: Spatial dimension, at least 1.
        p: Nonlinearity exponent, strictly above 1.
    """

    N: int
    p: float

    def __post_init__(self) -> None:
        if self.N < 1:
            raise ValueError(f"dimension must be >= 1, got N={self.N}")
        if not self.p > 1:
            raise ValueError(f"nonlinearity must be > 1, got p={self.p}")

    @property
    def s_c(self) -> float:
        return self.N / 2 - 2 / (self.p - 1)

    @property
    def sphere_area(self) -> float:
        """|S^{N-1}|, the surface measure of the unit sphere."""
        return float(2 * math.pi ** (self.N / 2) / gamma(self.N / 2))

    def require_intercritical(self, allow_energy_supercritical: bool = False) -> None:
        if self.s_c <= 0:
            raise ValueError(
                f"N={self.N}, p={self.p} is not mass-supercritical (s_c={self.s_c:.6g})"
            )
        if self.s_c >= 1 and not allow_energy_supercritical:
            raise ValueError(
                f"N={self.N}, p={self.p} is not energy-subcritical (s_c={self.s_c:.6g})"
            )


@dataclass(frozen=True)
class RadialGrid:
    """Uniform interior nodes r_j = j*dr, j = 1..n, with dr = r_max/(n+1).

    Both r = 0 and r = r_max are excluded; the quadrature rule and the
    gradient mode travel with the grid so every functional on it agrees.
    """

    r_max: float
    n: int
    quadrature: Quadrature = "trapezoid"
    gradient: GradientMode = "auto"

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError(f"grid needs at least one interior node, got n={self.n}")
        if not self.r_max > 0:
            raise ValueError(f"r_max must be positive, got {self.r_max}")
        if self.quadrature not in ("trapezoid", "simpson"):
            raise ValueError(f"unknown quadrature rule {self.quadrature!r}")
        if self.gradient not in ("auto", "spectral", "fd"):
            raise ValueError(f"unknown gradient mode {self.gradient!r}")

    @classmethod
    def from_spacing(cls, r_max: float, dr: float, **kwargs) -> RadialGrid:
        return cls(r_max=r_max, n=max(1, round(r_max / dr) - 1), **kwargs)

    @property
    def dr(self) -> float:
        return self.r_max / (self.n + 1)

    @cached_property
    def r(self) -> np.ndarray:
        nodes = np.arange(1, self.n + 1) * self.dr
        nodes.flags.writeable = False
        return nodes

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """k_m = pi*m/r_max for the sine modes m = 1..n."""
        k = np.pi * np.arange(1, self.n + 1) / self.r_max
        k.flags.writeable = False
        return k


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples u(r_j) on a radial grid. Values are copied and frozen."""

    grid: RadialGrid
    values: np.ndarray
    params: NlsParams

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n,):
            raise ValueError(
                f"field has shape {values.shape}, grid expects ({self.grid.n},)"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(
        cls, grid: RadialGrid, params: NlsParams, fn: Callable[[np.ndarray], np.ndarray]
    ) -> ComplexField:
        return cls(grid, fn(grid.r), params)

    @classmethod
    def zeros(cls, grid: RadialGrid, params: NlsParams) -> ComplexField:
        return cls(grid, np.zeros(grid.n, dtype=np.complex128), params)

    def with_values(self, values: np.ndarray) -> ComplexField:
        return ComplexField(self.grid, values, self.params)

    @property
    def r(self) -> np.ndarray:
        return self.grid.r

    @property
    def linf(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __repr__(self) -> str:
        return (
            f"ComplexField(N={self.params.N}, p={self.params.p}, n={self.grid.n}, "
            f"r_max={self.grid.r_max}, linf={self.linf:.4g})"
        )


@dataclass(frozen=True, eq=False)
class SineCoefficients:
    """Orthonormal DST-I coefficients of v = r*u (the N = 3 spectral representation)."""

    grid: RadialGrid
    params: NlsParams
    values: np.ndarray


@dataclass
class FunctionalSet:
    """Conserved and monitored quantities of one field.

    Attributes:
        mass: ‖u‖₂².
        energy: ½‖∇u‖² − ‖u‖_{p+1}^{p+1}/(p+1), recombined from the stored parts.
        grad_sq: ‖∇u‖₂².
        lp_norms: ‖u‖_q keyed by q (2, 3, 4 and p+1).
        virial: ∫|x|²|u|² dx.
        virial_rate: d/dt of the virial moment, 4 Im ∫ ū x·∇u dx.
    """

    mass: float
    energy: float
    grad_sq: float
    lp_norms: dict[float, float]
    virial: float
    virial_rate: float


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def radial_integral(
    density: np.ndarray, grid: RadialGrid, params: NlsParams, moment: int = 0
) -> float:
    """|S^{N-1}| ∫₀^{r_max} density(r) r^{N-1+moment} dr on the padded grid.

    The r = r_max node is a Dirichlet point and contributes 0. The r = 0 node
    contributes 0 unless the weight is r^0, where the even extension is
    extrapolated to fourth order.
    """
    power = params.N - 1 + moment
    integrand = density * grid.r**power
    origin = 0.0
    if power == 0:
        origin = density[0] if grid.n < 2 else (4 * density[0] - density[1]) / 3
    padded = np.concatenate(([origin], integrand, [0.0]))
    nodes = np.concatenate(([0.0], grid.r, [grid.r_max]))
    rule = trapezoid if grid.quadrature == "trapezoid" else simpson
    return float(params.sphere_area * rule(padded, x=nodes))


def lp_integral(u: ComplexField, q: float) -> float:
    """∫|u|^q dx."""
    return radial_integral(np.abs(u.values) ** q, u.grid, u.params)


def lp_norm(u: ComplexField, q: float) -> float:
    return lp_integral(u, q) ** (1 / q)


def mass(u: ComplexField) -> float:
    return radial_integral(np.abs(u.values) ** 2, u.grid, u.params)


# ---------------------------------------------------------------------------
# Sine representation (N = 3)
# ---------------------------------------------------------------------------


def _sine(x: np.ndarray, inverse: bool = False) -> np.ndarray:
    transform = idst if inverse else dst
    real = transform(np.real(x), type=1, norm="ortho")
    imag = transform(np.imag(x), type=1, norm="ortho")
    return real + 1j * imag


def _require_spectral(params: NlsParams) -> None:
    if params.N != 3:
        raise UnsupportedDimension(
            f"the sine representation exists for N = 3 only, got N = {params.N}"
        )


def radial_transform(u: ComplexField) -> SineCoefficients:
    """DST-I of r*u. Inverse of radial_inverse to roundoff."""
    _require_spectral(u.params)
    return SineCoefficients(u.grid, u.params, _sine(u.r * u.values))


def radial_inverse(coefficients: SineCoefficients) -> ComplexField:
    _require_spectral(coefficients.params)
    v = _sine(coefficients.values, inverse=True)
    return ComplexField(coefficients.grid, v / coefficients.grid.r, coefficients.params)


def _spectral_gradient(grid: RadialGrid, params: NlsParams) -> bool:
    if grid.gradient == "fd":
        return False
    if grid.gradient == "spectral":
        _require_spectral(params)
        return True
    return params.N == 3


def sobolev_norm_sq(u: ComplexField, s: float) -> float:
    """Homogeneous ‖u‖²_{Ḣ^s(R³)} through the sine modes of r*u."""
    c = radial_transform(u).values
    k = u.grid.wavenumbers
    return float(4 * np.pi * u.grid.dr * np.sum(k ** (2 * s) * np.abs(c) ** 2))


def radial_derivative(u: ComplexField) -> np.ndarray:
    """∂_r u at the nodes.

    Spectral path: ∂_r(r u) is a cosine series whose values at the nodes are a
    DCT-I of k_m c_m padded with zeros for m = 0 and m = n+1.
    """
    if not _spectral_gradient(u.grid, u.params):
        return np.gradient(u.values, u.grid.dr, edge_order=2)
    c = radial_transform(u).values
    padded = np.concatenate(([0.0], u.grid.wavenumbers * c, [0.0]))
    scale = math.sqrt(2 / (u.grid.n + 1)) / 2
    v_r = scale * (dct(padded.real, type=1) + 1j * dct(padded.imag, type=1))[1:-1]
    return (v_r - u.values) / u.r


def grad_sq(u: ComplexField) -> float:
    """‖∇u‖₂²; Parseval over the sine modes on the spectral path."""
    if _spectral_gradient(u.grid, u.params):
        return sobolev_norm_sq(u, 1.0)
    du = radial_derivative(u)
    return radial_integral(np.abs(du) ** 2, u.grid, u.params)


# ---------------------------------------------------------------------------
# Energy and virial
# ---------------------------------------------------------------------------


def energy(u: ComplexField) -> float:
    p = u.params.p
    return grad_sq(u) / 2 - lp_integral(u, p + 1) / (p + 1)


def virial_tail_ratio(u: ComplexField) -> float:
    """Share of the virial moment carried by r > 0.9 r_max."""
    density = np.abs(u.values) ** 2
    total = radial_integral(density, u.grid, u.params, moment=2)
    if total == 0:
        return 0.0
    tail = np.where(u.r > _TAIL_START * u.grid.r_max, density, 0.0)
    return radial_integral(tail, u.grid, u.params, moment=2) / total


def virial_moment(u: ComplexField) -> float:
    """V[u] = ∫|x|²|u|² dx; warns TailNotResolved when r_max is too small."""
    ratio = virial_tail_ratio(u)
    if ratio > _TAIL_WARN_RATIO:
        warnings.warn(
            f"virial moment not resolved: {ratio:.2e} of it lies beyond "
            f"{_TAIL_START:g}*r_max = {_TAIL_START * u.grid.r_max:g}",
            TailNotResolved,
            stacklevel=2,
        )
    return radial_integral(np.abs(u.values) ** 2, u.grid, u.params, moment=2)


def virial_rate(u: ComplexField) -> float:
    """dV/dt = 4 Im ∫ ū x·∇u dx = 4|S^{N-1}| Im ∫ r^N ū ∂_r u dr."""
    current = np.imag(np.conj(u.values) * radial_derivative(u))
    return 4 * radial_integral(current, u.grid, u.params, moment=1)


def functionals(u: ComplexField) -> FunctionalSet:
    p = u.params.p
    exponents = sorted({2.0, 3.0, 4.0, float(p + 1)})
    norms = {q: lp_norm(u, q) for q in exponents}
    g = grad_sq(u)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TailNotResolved)
        v = virial_moment(u)
    return FunctionalSet(
        mass=mass(u),
        energy=g / 2 - norms[float(p + 1)] ** (p + 1) / (p + 1),
        grad_sq=g,
        lp_norms=norms,
        virial=v,
        virial_rate=virial_rate(u),
    )


# ---------------------------------------------------------------------------
# Test fields
# ---------------------------------------------------------------------------


def gaussian(
    grid: RadialGrid,
    params: NlsParams,
    amplitude: float = 1.0,
    a: float = 1.0,
    chirp: float = 0.0,
) -> ComplexField:
    """A*exp((-a + i*chirp) r²)."""
    return ComplexField(grid, amplitude * np.exp((-a + 1j * chirp) * grid.r**2), params)


def random_bumps(
    grid: RadialGrid, params: NlsParams, count: int, rng: np.random.Generator
) -> list[ComplexField]:
    """Sums of one to three chirped Gaussian shells kept well inside r_max."""
    fields = []
    for _ in range(count):
        values = np.zeros(grid.n, dtype=np.complex128)
        for _ in range(rng.integers(1, 4)):
            center = rng.uniform(0.0, grid.r_max / 5)
            width = rng.uniform(0.3, min(2.0, grid.r_max / 10))
            amplitude = rng.uniform(0.2, 3.0)
            chirp = rng.uniform(-0.5, 0.5)
            envelope = np.exp(-(((grid.r - center) / width) ** 2))
            values += amplitude * envelope * np.exp(1j * chirp * grid.r**2)
        fields.append(ComplexField(grid, values, params))
    return fields
