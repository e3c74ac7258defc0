"""Exceptions and warnings raised across nlslab."""

from __future__ import annotations

from typing import Any


class NlsLabError(Exception):
    """Base class for every error the lab raises on purpose."""


class UsageError(NlsLabError):
    """Bad command line or missing input file."""


class UnsupportedDimension(NlsLabError):
    """The spectral path only exists for N = 3."""


class NoBracket(NlsLabError):
    """The shooting bracket does not separate overshoot from undershoot."""


class TailDivergence(NlsLabError):
    """Converged ground state does not decay to the grid boundary."""


class IdentityViolation(NlsLabError):
    """A closed-form identity between ground-state constants failed."""


class TechnicalRestriction(NlsLabError):
    """(p, N) lies outside the range of the localized virial argument."""


class RefinementPrecondition(NlsLabError):
    """Data does not satisfy the strictly refined threshold (needs 0 < delta < 1)."""


class Overflow(NlsLabError):
    """A field amplitude left the floating-point range during a step."""


class InsufficientSamples(NlsLabError):
    """Too few trace samples for a finite-difference or fit."""


class FitIllConditioned(NlsLabError):
    """A least-squares fit did not produce finite parameters."""


class ZeroField(NlsLabError):
    """Operation needs a non-zero gradient."""


class NotSupercritical(NlsLabError):
    """p does not exceed the mass-critical exponent 1 + 4/N."""


class AuditFailure(NlsLabError):
    def __init__(self, report: Any, failed: list[str]) -> None:
        self.report = report
        self.failed = failed
        super().__init__(f"{len(failed)} audit item(s) failed: {', '.join(failed)}")


class CancellationFailure(NlsLabError):
    def __init__(self, pair: str, residual: float) -> None:
        self.pair = pair
        self.residual = residual
        super().__init__(f"{pair} pair does not cancel: relative residual {residual:.3e}")


class TailNotResolved(UserWarning):
    """Virial moment has non-negligible weight near r_max."""
