# backend/runner/orchestrate.py
"""
Run orchestration behind the CLI subcommands.

    run_from_config   config -> optimize -> exports (+ cross-mesh evaluations)
    evaluate_design   design.json -> re-evaluation on another mesh
    post_from_design  design.json -> regenerated exports
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from errors import DefinitionError
from numeric.projection import ProjectionParams
from optimizer.loop import OptimizationResult, run_optimization
from postprocess.evaluation import DesignEvaluation, reevaluate_on_mesh
from runner.exports import export_artifacts, load_design, result_from_design
from runner.settings import (
    RunConfig,
    config_dump,
    evaluation_resolutions,
    optimizer_settings,
    projection_params,
    resolve_problem,
)

logger = logging.getLogger(__name__)


@dataclass
class RunOutcome:
    result: OptimizationResult
    paths: Dict[str, Path]
    evaluations: List[DesignEvaluation] = field(default_factory=list)


def run_from_config(config: RunConfig) -> RunOutcome:
    """
    Execute one configured run and write its artifacts.

    Raises:
        DefinitionError: Invalid problem
        OptimizationError: Numerical failure during the loop
        SingularSystemError: Under-constrained problem or void binary design
        OSError: Unwritable output directory
    """
    problem = resolve_problem(config)
    params = projection_params(config)
    settings = optimizer_settings(config)

    result = run_optimization(problem, params=params, settings=settings)
    paths = export_artifacts(result, config.out, config.exports.enabled(), config=config_dump(config))

    evaluations = [
        reevaluate_on_mesh(result.ensemble, resolution, problem, params, solver_method=settings.solver_method)
        for resolution in evaluation_resolutions(config)
    ]
    return RunOutcome(result=result, paths=paths, evaluations=evaluations)


def evaluate_design(
    design_path: Union[str, Path],
    resolution: Optional[Sequence[int]] = None,
    params: Optional[ProjectionParams] = None,
) -> DesignEvaluation:
    """
    Re-evaluate a saved design, by default on its own training mesh.

    Raises:
        FileNotFoundError: Missing design file
        ConfigError: Corrupt design file
    """
    record = load_design(design_path)
    resolution = tuple(resolution) if resolution is not None else record.problem.resolution
    if len(resolution) != record.problem.dim:
        raise DefinitionError(
            f"mesh {'x'.join(map(str, resolution))} does not match a {record.problem.dim}D design"
        )
    return reevaluate_on_mesh(record.ensemble, resolution, record.problem, params or record.params)


def post_from_design(
    design_path: Union[str, Path],
    out_dir: Optional[Union[str, Path]] = None,
    exports: Sequence[str] = ("density", "contours", "curvature", "history", "binary"),
    threshold: Optional[float] = None,
) -> Dict[str, Path]:
    """
    Regenerate exports from design.json (next to it unless `out_dir` is given).

    A different threshold re-projects the same ensemble; design.json itself
    is left untouched.
    """
    design_path = Path(design_path)
    record = load_design(design_path)
    if threshold is not None:
        record.params = replace(record.params, threshold=threshold)
    result = result_from_design(record)
    out = Path(out_dir) if out_dir is not None else design_path.parent
    return export_artifacts(result, out, exports, write_design_file=False)
