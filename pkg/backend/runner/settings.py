# backend/runner/settings.py
"""
Run configuration.

A run is described by one JSON document validated against RunConfig.
Unknown keys are rejected at every level. CLI flags are applied on top with
apply_overrides, which re-validates the merged document.

Example:
    {
        "benchmark": "cantilever2d",
        "mesh": [200, 100],
        "layout": {"grid": [4, 4], "fields_per_cell": 2},
        "projection": {"epsilon": 0.02, "threshold": 0.5},
        "optimizer": {"max_iters": 200},
        "out": "runs/c2d"
    }
"""

import json
import logging
import re
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from config import (
    ANGLE_BOUND,
    CONVERGENCE_PATIENCE,
    CONVERGENCE_TOL,
    MAX_ITERS,
    MMA_MOVE_LIMIT,
    PROJECTION_ALPHA_FLOOR,
    PROJECTION_EPSILON,
    PROJECTION_THRESHOLD,
    SENSITIVITY_SIGNIFICANT_DIGITS,
    SIGMA_MAX_FRACTION,
    SIGMA_MIN_FRACTION,
)
from errors import ConfigError
from numeric.projection import ProjectionParams
from optimizer.loop import OptimizerSettings
from optimizer.mma import MmaSettings
from problems.benchmarks import build_benchmark
from problems.definitions import InitialLayoutSpec, ProblemDefinition, default_layout_angles

logger = logging.getLogger(__name__)

EXPORT_NAMES = ("density", "contours", "curvature", "stress", "history", "binary")


# =============================================================================
# Schema
# =============================================================================

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ProjectionConfig(_Strict):
    threshold: float = Field(PROJECTION_THRESHOLD, gt=0, description="Cut-off threshold T")
    epsilon: float = Field(PROJECTION_EPSILON, ge=0, description="Heaviside band half-width")
    alpha_floor: float = Field(PROJECTION_ALPHA_FLOOR, gt=0, lt=0.5, description="Void density floor")


class OptimizerConfig(_Strict):
    max_iters: int = Field(MAX_ITERS, ge=0)
    tolerance: float = Field(CONVERGENCE_TOL, gt=0)
    patience: int = Field(CONVERGENCE_PATIENCE, ge=1)
    move_limit: float = Field(MMA_MOVE_LIMIT, gt=0, le=1)
    round_sensitivities: Optional[bool] = Field(None, description="None follows the problem")
    significant_digits: int = Field(SENSITIVITY_SIGNIFICANT_DIGITS, ge=1, le=15)
    solver: Optional[Literal["direct", "cg"]] = None
    sigma_min_fraction: float = Field(SIGMA_MIN_FRACTION, gt=0)
    sigma_max_fraction: float = Field(SIGMA_MAX_FRACTION, gt=0)
    angle_bound: float = Field(ANGLE_BOUND, gt=0)


class LayoutConfig(_Strict):
    grid: List[int] = Field(..., min_length=2, max_length=3)
    fields_per_cell: int = Field(2, ge=1)
    sigma_major_fraction: Optional[float] = Field(None, gt=0)
    sigma_minor_fraction: Optional[float] = Field(None, gt=0)


class ExportConfig(_Strict):
    density: bool = True
    contours: bool = True
    curvature: bool = True
    stress: bool = False
    history: bool = True
    binary: bool = True

    def enabled(self) -> List[str]:
        return [name for name in EXPORT_NAMES if getattr(self, name)]


class RunConfig(_Strict):
    """Everything one `get run` needs; validated before any compute."""

    benchmark: Optional[str] = None
    problem: Optional[Dict[str, Any]] = None
    mesh: Optional[List[int]] = Field(None, min_length=2, max_length=3)
    layout: Optional[LayoutConfig] = None
    volume_bound: Optional[float] = Field(None, gt=0, lt=1)
    projection: ProjectionConfig = Field(default_factory=ProjectionConfig)
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    exports: ExportConfig = Field(default_factory=ExportConfig)
    evaluation_meshes: List[List[int]] = Field(default_factory=list)
    out: str = "runs/get"
    seed: Optional[int] = None  # reserved; every default is deterministic

    @model_validator(mode="after")
    def _one_problem_source(self) -> "RunConfig":
        if self.benchmark is None and self.problem is None:
            raise ValueError("config must name a 'benchmark' or give an inline 'problem'")
        if self.benchmark is not None and self.problem is not None:
            raise ValueError("config gives both 'benchmark' and 'problem'; keep one")
        if self.mesh is not None and any(n < 1 for n in self.mesh):
            raise ValueError(f"mesh counts must be positive, got {self.mesh}")
        for mesh in self.evaluation_meshes:
            if len(mesh) not in (2, 3) or any(n < 1 for n in mesh):
                raise ValueError(f"evaluation mesh {mesh} is not 2 or 3 positive counts")
        return self


# =============================================================================
# Loading
# =============================================================================

def _line_of(text: str, key: str) -> Optional[int]:
    match = re.search(r'"' + re.escape(str(key)) + r'"\s*:', text)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


def _validation_error(exc: ValidationError, text: str = "", source: str = "config") -> ConfigError:
    first = exc.errors()[0]
    loc = [str(part) for part in first.get("loc", ())]
    where = ".".join(loc) or "<root>"
    line = _line_of(text, loc[-1]) if text and loc else None
    prefix = f"{source}:{line}" if line else source
    return ConfigError(f"{prefix}: {where}: {first.get('msg', 'invalid value')}", line=line)


def parse_config(text: str, source: str = "config") -> RunConfig:
    """
    Validate a JSON config document.

    Raises:
        ConfigError: Malformed JSON or schema violation, with the line when known
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}", line=exc.lineno
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be an object", line=1)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise _validation_error(exc, text, source) from exc


def load_config(path: Union[str, Path]) -> RunConfig:
    """
    Read and validate a config file.

    Raises:
        FileNotFoundError: Missing file
        ConfigError: Invalid content
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    config = parse_config(text, source=str(path))
    logger.info(f"Loaded config {path}")
    return config


def apply_overrides(config: RunConfig, **overrides: Any) -> RunConfig:
    """
    Merge CLI overrides (None means "not given") and re-validate.

    Recognized keys: benchmark, iters, epsilon, threshold, layout, mesh, out,
    exports. A benchmark override replaces an inline problem.
    """
    data = config.model_dump()
    if overrides.get("benchmark") is not None:
        data["benchmark"] = overrides["benchmark"]
        data["problem"] = None
    if overrides.get("iters") is not None:
        data["optimizer"]["max_iters"] = overrides["iters"]
    if overrides.get("epsilon") is not None:
        data["projection"]["epsilon"] = overrides["epsilon"]
    if overrides.get("threshold") is not None:
        data["projection"]["threshold"] = overrides["threshold"]
    if overrides.get("layout") is not None:
        grid, per_cell = parse_layout(overrides["layout"])
        data["layout"] = {"grid": list(grid), "fields_per_cell": per_cell}
    if overrides.get("mesh") is not None:
        data["mesh"] = list(parse_mesh(overrides["mesh"]))
    if overrides.get("out") is not None:
        data["out"] = overrides["out"]
    if overrides.get("exports") is not None:
        wanted = set(overrides["exports"])
        unknown = wanted - set(EXPORT_NAMES)
        if unknown:
            raise ConfigError(f"unknown export(s): {', '.join(sorted(unknown))}")
        data["exports"] = {name: name in wanted for name in EXPORT_NAMES}

    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        raise _validation_error(exc, source="command line") from exc


# =============================================================================
# Flag parsing
# =============================================================================

def _counts(text: str, what: str) -> Tuple[int, ...]:
    parts = str(text).lower().split("x")
    try:
        counts = tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"cannot parse {what} '{text}'") from None
    if any(c < 1 for c in counts):
        raise ConfigError(f"{what} '{text}' has non-positive counts")
    return counts


def parse_layout(text: str) -> Tuple[Tuple[int, ...], int]:
    """'4x4x2' -> ((4, 4), 2); '4x2x2x4' -> ((4, 2, 2), 4)."""
    counts = _counts(text, "layout")
    if len(counts) not in (3, 4):
        raise ConfigError(f"layout '{text}' must be NXxNYxK or NXxNYxNZxK")
    return counts[:-1], counts[-1]


def parse_mesh(text: str) -> Tuple[int, ...]:
    """'200x100' -> (200, 100); '80x40x40' -> (80, 40, 40)."""
    counts = _counts(text, "mesh")
    if len(counts) not in (2, 3):
        raise ConfigError(f"mesh '{text}' must be NXxNY or NXxNYxNZ")
    return counts


# =============================================================================
# Resolution into runtime objects
# =============================================================================

def resolve_problem(config: RunConfig) -> ProblemDefinition:
    """
    Problem definition with the config's mesh, layout and volume overrides.

    Raises:
        DefinitionError: Unknown benchmark or inconsistent overrides
    """
    if config.benchmark is not None:
        problem = build_benchmark(config.benchmark)
    else:
        problem = ProblemDefinition.from_dict(config.problem)

    if config.mesh is not None:
        problem = problem.with_resolution(config.mesh)
    if config.layout is not None:
        current = problem.layout
        layout = InitialLayoutSpec(
            grid=tuple(config.layout.grid),
            angles=default_layout_angles(len(config.layout.grid), config.layout.fields_per_cell),
            sigma_major_fraction=config.layout.sigma_major_fraction or current.sigma_major_fraction,
            sigma_minor_fraction=config.layout.sigma_minor_fraction or current.sigma_minor_fraction,
            skip_void=current.skip_void,
        )
        problem = problem.with_layout(layout)
    if config.volume_bound is not None:
        problem = replace(problem, volume_bound=config.volume_bound)
    return problem


def projection_params(config: RunConfig) -> ProjectionParams:
    p = config.projection
    return ProjectionParams(threshold=p.threshold, epsilon=p.epsilon, alpha_floor=p.alpha_floor)


def optimizer_settings(config: RunConfig) -> OptimizerSettings:
    o = config.optimizer
    return OptimizerSettings(
        max_iters=o.max_iters,
        tolerance=o.tolerance,
        patience=o.patience,
        mma=MmaSettings(move_limit=o.move_limit),
        round_sensitivities=o.round_sensitivities,
        significant_digits=o.significant_digits,
        solver_method=o.solver,
        sigma_min_fraction=o.sigma_min_fraction,
        sigma_max_fraction=o.sigma_max_fraction,
        angle_bound=o.angle_bound,
    )


def evaluation_resolutions(config: RunConfig) -> List[Tuple[int, ...]]:
    return [tuple(m) for m in config.evaluation_meshes]


def default_config(benchmark: str = "cantilever2d", **overrides: Any) -> RunConfig:
    """A benchmark config with CLI-style overrides applied."""
    return apply_overrides(RunConfig(benchmark=benchmark), **overrides)


def config_dump(config: RunConfig) -> Dict[str, Any]:
    return config.model_dump(mode="json")
