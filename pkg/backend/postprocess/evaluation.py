# backend/postprocess/evaluation.py
"""
Design evaluation after optimization.

- binary_extract: project with epsilon = 0, so every element is strictly
  solid or void by its centroid TDF, and re-solve that same field. Binary
  V_f is its solid element fraction.
- reevaluate_on_mesh: project the same ensemble onto another mesh of the
  same domain and re-solve; the ensemble itself is never touched.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from errors import SingularSystemError
from fea.elements import MaterialModel
from geometry.gaussians import GaussianField
from numeric.analysis import AnalysisState, analyze
from numeric.projection import ProjectionParams, measure_nondiscreteness
from problems.context import ProblemContext, build_context
from problems.definitions import ProblemDefinition

logger = logging.getLogger(__name__)


@dataclass
class BinaryDesign:
    """Result of the epsilon = 0 re-analysis."""

    densities: np.ndarray
    objective: float
    volume_fraction: float
    state: AnalysisState

    def to_dict(self) -> Dict[str, Any]:
        return {"objective": self.objective, "volume_fraction": self.volume_fraction}


@dataclass
class DesignEvaluation:
    """Smooth and binary metrics of one ensemble on one mesh."""

    resolution: Sequence[int]
    objective: float
    volume_fraction: float
    nondiscreteness: float
    binary: BinaryDesign

    def to_dict(self) -> Dict[str, Any]:
        return {
            "resolution": list(self.resolution),
            "objective": self.objective,
            "volume_fraction": self.volume_fraction,
            "nondiscreteness": self.nondiscreteness,
            "binary_objective": self.binary.objective,
            "binary_volume_fraction": self.binary.volume_fraction,
        }


def binary_extract(
    ensemble: Sequence[GaussianField],
    context: ProblemContext,
    params: Optional[ProjectionParams] = None,
    solver_method: Optional[str] = None,
) -> BinaryDesign:
    """
    Two-valued densities (alpha_floor or 1) at epsilon = 0, re-solved.

    Raises:
        SingularSystemError: If no element is solid
    """
    binary = (params or ProjectionParams()).binary()
    state = analyze(ensemble, context, binary, solve=False)
    solid = state.densities >= 1.0
    if not np.any(solid):
        raise SingularSystemError("binary design is fully void")

    state = analyze(ensemble, context, binary, solver_method=solver_method)
    volume = float(np.count_nonzero(state.densities >= 1.0)) / state.densities.size
    logger.debug(f"Binary design: objective={state.objective:.6g}, V_f={volume:.4f}")
    return BinaryDesign(
        densities=state.densities,
        objective=float(state.objective),
        volume_fraction=volume,
        state=state,
    )


def evaluate_design(
    ensemble: Sequence[GaussianField],
    context: ProblemContext,
    params: ProjectionParams,
    solver_method: Optional[str] = None,
) -> DesignEvaluation:
    """Smooth objective, V_f and M_nd plus the binary re-analysis on the context's mesh."""
    state = analyze(ensemble, context, params, solver_method=solver_method)
    return DesignEvaluation(
        resolution=context.full_problem.resolution,
        objective=float(state.objective),
        volume_fraction=state.volume_fraction,
        nondiscreteness=measure_nondiscreteness(state.densities),
        binary=binary_extract(ensemble, context, params, solver_method=solver_method),
    )


def reevaluate_on_mesh(
    ensemble: Sequence[GaussianField],
    new_resolution: Sequence[int],
    problem: ProblemDefinition,
    params: Optional[ProjectionParams] = None,
    material: Optional[MaterialModel] = None,
    solver_method: Optional[str] = None,
) -> DesignEvaluation:
    """
    Evaluate an ensemble on `new_resolution` (full-domain element counts).

    The problem is re-resolved on the new grid (including its symmetry
    reduction), so `ensemble` must describe the same analysed domain the
    design was optimized on.
    """
    params = params or ProjectionParams()
    context = build_context(problem.with_resolution(new_resolution), material)
    result = evaluate_design(ensemble, context, params, solver_method=solver_method)
    logger.info(
        f"Re-evaluated on {'x'.join(map(str, new_resolution))}: C={result.objective:.6g}, "
        f"V_f={result.volume_fraction:.4f}, binary C={result.binary.objective:.6g}"
    )
    return result
