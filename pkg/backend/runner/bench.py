# backend/runner/bench.py
"""
Parameter studies.

Each study returns a pandas DataFrame (one row per run) and can be written
to CSV by run_study:

- count:     Gaussian-count sweep over layouts 1x1, 2x2, 4x4, 6x6
- epsilon:   band-width sweep (M_nd and binary V_f overshoot)
- threshold: crossed-pair boundary at several T (area, junction curvature,
             rotational symmetry of kappa(theta))
- mesh:      optimize on each mesh, cross-evaluate on the finest
- timing:    mean per-stage wall time and FEA share per mesh
"""

import logging
import math
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from errors import ContourError, DefinitionError
from fea.mesh import StructuredMesh
from geometry.gaussians import GaussianField, eval_tdf
from numeric.projection import ProjectionParams, measure_nondiscreteness
from optimizer.loop import OptimizationResult, OptimizerSettings, run_optimization
from postprocess.contours import contours_from_mesh
from postprocess.curvature import (
    contour_curvature,
    curvature_profile_by_angle,
    fit_pair_sigmas,
    junction_curvature,
    rotation_rms,
)
from postprocess.evaluation import binary_extract, reevaluate_on_mesh
from problems.definitions import InitialLayoutSpec, ProblemDefinition, default_layout_angles

logger = logging.getLogger(__name__)

COUNT_LAYOUTS: Tuple[Tuple[int, int], ...] = ((1, 1), (2, 2), (4, 4), (6, 6))
EPSILONS: Tuple[float, ...] = (0.2, 0.1, 0.02, 0.002)
THRESHOLDS: Tuple[float, ...] = (0.1, 0.5, 0.9)
MESHES: Tuple[Tuple[int, int], ...] = ((100, 50), (200, 100), (1000, 500))


def _metrics(result: OptimizationResult) -> Dict[str, float]:
    state = result.final_state
    bound = result.context.problem.volume_bound
    binary = binary_extract(result.ensemble, result.context, result.params)
    return {
        "objective": float(state.objective),
        "volume_fraction": float(state.volume_fraction),
        "nondiscreteness": measure_nondiscreteness(state.densities),
        "binary_objective": binary.objective,
        "binary_volume_fraction": binary.volume_fraction,
        "binary_overshoot": (binary.volume_fraction - bound) / bound,
        "active_fields": result.active_count,
        "iterations": result.iterations,
    }


# =============================================================================
# Optimization sweeps
# =============================================================================

def gaussian_count_sweep(
    problem: ProblemDefinition,
    layouts: Sequence[Tuple[int, ...]] = COUNT_LAYOUTS,
    fields_per_cell: int = 2,
    params: Optional[ProjectionParams] = None,
    settings: Optional[OptimizerSettings] = None,
) -> pd.DataFrame:
    """One optimization per initial layout, everything else fixed."""
    rows = []
    for grid in layouts:
        layout = InitialLayoutSpec(
            grid=tuple(grid),
            angles=default_layout_angles(len(grid), fields_per_cell),
            sigma_major_fraction=problem.layout.sigma_major_fraction,
            sigma_minor_fraction=problem.layout.sigma_minor_fraction,
            skip_void=problem.layout.skip_void,
        )
        result = run_optimization(problem.with_layout(layout), params=params, settings=settings)
        row = {"layout": "x".join(map(str, grid)), "fields": len(result.ensemble)}
        row.update(_metrics(result))
        rows.append(row)
        logger.info(f"count sweep {row['layout']}: C={row['objective']:.4g}, binary C={row['binary_objective']:.4g}")
    return pd.DataFrame(rows)


def epsilon_sweep(
    problem: ProblemDefinition,
    epsilons: Sequence[float] = EPSILONS,
    params: Optional[ProjectionParams] = None,
    settings: Optional[OptimizerSettings] = None,
) -> pd.DataFrame:
    """One optimization per band half-width (threshold and floor from `params`)."""
    base = params or ProjectionParams()
    rows = []
    for eps in epsilons:
        params = replace(base, epsilon=eps)
        result = run_optimization(problem, params=params, settings=settings)
        row = {"epsilon": eps}
        row.update(_metrics(result))
        rows.append(row)
        logger.info(
            f"epsilon sweep {eps}: M_nd={row['nondiscreteness']:.2f}%, "
            f"overshoot={100 * row['binary_overshoot']:.2f}%"
        )
    return pd.DataFrame(rows)


def mesh_independence(
    problem: ProblemDefinition,
    resolutions: Sequence[Tuple[int, ...]] = MESHES,
    evaluate_on: Optional[Tuple[int, ...]] = None,
    params: Optional[ProjectionParams] = None,
    settings: Optional[OptimizerSettings] = None,
) -> pd.DataFrame:
    """
    Optimize on every mesh, then evaluate every design on `evaluate_on`
    (default: the finest mesh) without touching its parameters.
    """
    params = params or ProjectionParams()
    if evaluate_on is None:
        evaluate_on = max(resolutions, key=lambda r: int(np.prod(r)))
    rows = []
    for resolution in resolutions:
        result = run_optimization(problem.with_resolution(resolution), params=params, settings=settings)
        evaluation = reevaluate_on_mesh(result.ensemble, evaluate_on, problem, params)
        rows.append({
            "design_mesh": "x".join(map(str, resolution)),
            "eval_mesh": "x".join(map(str, evaluate_on)),
            "objective_own": float(result.final_state.objective),
            "volume_fraction_own": float(result.final_state.volume_fraction),
            "objective": evaluation.objective,
            "volume_fraction": evaluation.volume_fraction,
            "binary_objective": evaluation.binary.objective,
            "binary_volume_fraction": evaluation.binary.volume_fraction,
        })
    return pd.DataFrame(rows)


def objective_spread(frame: pd.DataFrame, column: str = "objective") -> float:
    """(max - min) / mean of a study column."""
    values = frame[column].to_numpy(dtype=float)
    return float((values.max() - values.min()) / values.mean())


def timing_sweep(
    problem: ProblemDefinition,
    resolutions: Sequence[Tuple[int, ...]] = MESHES,
    params: Optional[ProjectionParams] = None,
    settings: Optional[OptimizerSettings] = None,
) -> pd.DataFrame:
    """Mean stage times and shares of one run per mesh."""
    rows = []
    for resolution in resolutions:
        result = run_optimization(problem.with_resolution(resolution), params=params, settings=settings)
        means = result.history.mean_stage_times()
        shares = result.history.stage_shares()
        row: Dict[str, object] = {"mesh": "x".join(map(str, resolution))}
        row.update({f"{s}_seconds": t for s, t in means.items()})
        row.update({f"{s}_share": t for s, t in shares.items()})
        rows.append(row)
    return pd.DataFrame(rows)


# =============================================================================
# Crossed pair
# =============================================================================

def crossed_pair(
    sigma_major: float,
    sigma_minor: float,
    center: Sequence[float] = (0.0, 0.0),
) -> List[GaussianField]:
    """Two coincident fields rotated +pi/4 and -pi/4."""
    return [
        GaussianField(mu=list(center), sigma=[sigma_major, sigma_minor], angles=[angle])
        for angle in (math.pi / 4, -math.pi / 4)
    ]


def threshold_sweep(
    thresholds: Sequence[float] = THRESHOLDS,
    sigmas: Optional[Tuple[float, float]] = None,
    half_width: Optional[float] = None,
    resolution: int = 400,
) -> pd.DataFrame:
    """
    Boundary of the crossed pair at each threshold.

    Columns: threshold, area, kappa_junction (most negative sampled
    curvature), kappa_closed_form, rotation_rms (relative RMS difference
    between kappa(theta) and kappa(theta + pi/2)).
    """
    a, b = sigmas if sigmas is not None else fit_pair_sigmas()
    half = half_width or 1.1 * a * math.sqrt(2 * math.log(2 / min(thresholds)))
    mesh = StructuredMesh((resolution, resolution), (2 * half, 2 * half), origin=(-half, -half))
    pair = crossed_pair(a, b)
    nodal = eval_tdf(pair, mesh.node_coordinates())

    rows = []
    for level in thresholds:
        contours = contours_from_mesh(nodal, mesh, level, pair)
        if len(contours) != 1:
            raise ContourError(f"expected one boundary at T={level}, found {len(contours)}")
        contour = contours[0]
        profile = contour_curvature(contour)
        _, kappa_theta = curvature_profile_by_angle(profile, center=(0.0, 0.0), n_angles=720)
        rows.append({
            "threshold": level,
            "area": contour.signed_area,
            "kappa_junction": float(profile.kappa.min()),
            "kappa_closed_form": junction_curvature(a, b, level),
            "total_turning": profile.total_turning,
            "rotation_rms": rotation_rms(kappa_theta),
        })
        logger.info(f"T={level}: kappa_junction={rows[-1]['kappa_junction']:.4g}")
    return pd.DataFrame(rows)


# =============================================================================
# Dispatch
# =============================================================================

STUDIES: Tuple[str, ...] = ("count", "epsilon", "threshold", "mesh", "timing")


def run_study(
    name: str,
    problem: ProblemDefinition,
    out_dir: Union[str, Path],
    params: Optional[ProjectionParams] = None,
    settings: Optional[OptimizerSettings] = None,
    resolutions: Optional[Sequence[Tuple[int, ...]]] = None,
) -> Tuple[pd.DataFrame, Path]:
    """
    Run one named study and write `<out_dir>/<name>.csv`.

    Raises:
        DefinitionError: Unknown study name
    """
    if name not in STUDIES:
        raise DefinitionError(f"unknown study '{name}'; choose one of: {', '.join(STUDIES)}")

    if name == "count":
        frame = gaussian_count_sweep(problem, params=params, settings=settings)
    elif name == "epsilon":
        frame = epsilon_sweep(problem, params=params, settings=settings)
    elif name == "threshold":
        frame = threshold_sweep()
    elif name == "mesh":
        frame = mesh_independence(problem, resolutions or MESHES, params=params, settings=settings)
    else:
        frame = timing_sweep(problem, resolutions or MESHES, params=params, settings=settings)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{name}.csv"
    frame.to_csv(path, index=False, float_format="%.10g")
    logger.info(f"Study {name}: {len(frame)} row(s) -> {path}")
    return frame, path
