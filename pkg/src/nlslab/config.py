"""Config loading from nlslab.yml with sensible defaults."""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path
from typing import Literal

import yaml
from pydantic import BaseModel, ValidationError, field_validator, model_validator

from .errors import UsageError


DEFAULT_CONFIG_PATH = "nlslab.yml"
DEFAULT_BRACKET = (0.1, 50.0)
DEFAULT_LADDER = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]
DEFAULT_RATE_LADDER = [1e-8, 1e-9, 1e-10, 1e-11, 1e-12]

Quadrature = Literal["trapezoid", "simpson"]
GradientMode = Literal["auto", "spectral", "fd"]
LinearSolver = Literal["auto", "spectral", "crank_nicolson"]


def _positive(name: str, v: float) -> float:
    if not v > 0:
        raise ValueError(f"{name} must be positive, got {v}")
    return v


class ProblemConfig(BaseModel):
    N: int = 3
    p: float = 3.0

    @field_validator("N")
    @classmethod
    def dimension_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("problem.N must be >= 1")
        return v

    @field_validator("p")
    @classmethod
    def nonlinearity_above_one(cls, v: float) -> float:
        if v <= 1:
            raise ValueError("problem.p must be > 1")
        return v


class GridConfig(BaseModel):
    r_max: float = 30.0
    n: int = 2999
    quadrature: Quadrature = "trapezoid"
    gradient: GradientMode = "auto"

    @field_validator("r_max")
    @classmethod
    def r_max_positive(cls, v: float) -> float:
        return _positive("grid.r_max", v)

    @field_validator("n")
    @classmethod
    def nodes_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("grid.n must be >= 1")
        return v


class GroundStateConfig(BaseModel):
    tol: float = 1e-12
    bracket: tuple[float, float] = DEFAULT_BRACKET
    tail_ratio: float = 1e-8
    attempts: int = 3
    widen_factor: float = 4.0

    @field_validator("bracket")
    @classmethod
    def bracket_ordered(cls, v: tuple[float, float]) -> tuple[float, float]:
        lo, hi = v
        if not 0 < lo < hi:
            raise ValueError("ground_state.bracket must satisfy 0 < low < high")
        return v

    @field_validator("tol", "tail_ratio", "widen_factor")
    @classmethod
    def strictly_positive(cls, v: float) -> float:
        return _positive("ground_state value", v)


class StepConfig(BaseModel):
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

    @field_validator(
        "dt0", "cfl", "grad_growth_cap", "t_max", "resolution_guard", "sample_dt", "dt_min"
    )
    @classmethod
    def strictly_positive(cls, v: float) -> float:
        return _positive("steps value", v)

    @field_validator("growth_sample_factor")
    @classmethod
    def growth_factor_above_one(cls, v: float) -> float:
        if v <= 1:
            raise ValueError("steps.growth_sample_factor must be > 1")
        return v


class ClassifierConfig(BaseModel):
    tie_tol: float = 1e-4
    c1: float = 4.0
    c2: float = 4.0
    delta: float | None = None

    @field_validator("delta")
    @classmethod
    def delta_in_unit_interval(cls, v: float | None) -> float | None:
        if v is not None and not 0 < v < 1:
            raise ValueError("classifier.delta must lie in (0, 1)")
        return v


class ConcentrationConfig(BaseModel):
    c1: float = 10.0
    c2: float = 1.0
    strauss_c: float = 4.0
    high_freq_c: float = 4.0
    interior_c: float = 4.0

    @field_validator("c1", "c2", "strauss_c", "high_freq_c", "interior_c")
    @classmethod
    def strictly_positive(cls, v: float) -> float:
        return _positive("concentration constant", v)


class SphereConfig(BaseModel):
    mass: float = 1.0
    T: float = 1.0
    theta: float = 0.0
    ladder: list[float] = DEFAULT_LADDER
    rate_ladder: list[float] = DEFAULT_RATE_LADDER
    y_cut_widths: float = 40.0
    y_points: int = 8001
    points_per_lambda: float = 10.0
    tolerance: float = 1e-8

    @field_validator("mass", "T", "y_cut_widths", "points_per_lambda", "tolerance")
    @classmethod
    def strictly_positive(cls, v: float) -> float:
        return _positive("sphere value", v)

    @field_validator("ladder", "rate_ladder")
    @classmethod
    def ladder_spans_decades(cls, v: list[float]) -> list[float]:
        if len(v) < 3 or any(tau <= 0 for tau in v):
            raise ValueError("sphere ladders need at least 3 positive T-t values")
        if max(v) / min(v) < 100:
            raise ValueError("sphere ladders must span at least two decades of T-t")
        return sorted(v, reverse=True)


class RunConfig(BaseModel):
    problem: ProblemConfig = ProblemConfig()
    grid: GridConfig = GridConfig()
    ground_state: GroundStateConfig = GroundStateConfig()
    steps: StepConfig = StepConfig()
    classifier: ClassifierConfig = ClassifierConfig()
    concentration: ConcentrationConfig = ConcentrationConfig()
    sphere: SphereConfig = SphereConfig()
    output_dir: Path = Path("runs")
    seed: int = 0

    @model_validator(mode="after")
    def sphere_ladder_inside_horizon(self) -> RunConfig:
        if max(self.sphere.ladder + self.sphere.rate_ladder) >= self.sphere.T:
            raise ValueError("sphere ladders must lie inside (0, T)")
        return self


def load_config(path: Path | None = None) -> RunConfig:
    """Load config from path, or from NLS_LAB_CONFIG_PATH / nlslab.yml.

    Only the implicit lookup falls back to defaults when the file is absent; an
    explicit path that does not exist raises UsageError.
    """
    if path is not None:
        if not path.exists():
            raise UsageError(f"config file {path} does not exist")
    else:
        path = Path(os.environ.get("NLS_LAB_CONFIG_PATH", DEFAULT_CONFIG_PATH))
        if not path.exists():
            return RunConfig()

    raw = yaml.safe_load(path.read_text()) or {}
    try:
        return RunConfig.model_validate(raw)
    except ValidationError as e:
        raise SystemExit(f"nlslab: invalid config at {path}:\n{e}") from e


def dump_config(config: RunConfig) -> str:
    return yaml.safe_dump(config.model_dump(mode="json"), sort_keys=True)


def config_hash(config: RunConfig, command: str) -> str:
    """Short stable digest naming the artifacts of one run."""
    payload = json.dumps(
        {"command": command, "config": config.model_dump(mode="json")}, sort_keys=True
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


def sweep_threads() -> int:
    """Thread cap for snapshot series and audit ladders, from NLS_LAB_THREADS."""
    raw = os.environ.get("NLS_LAB_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise SystemExit(f"nlslab: NLS_LAB_THREADS must be an integer, got {raw!r}") from None
    return os.cpu_count() or 1
