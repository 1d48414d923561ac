# backend/runner/exports.py
"""
On-disk artifacts of a run.

- design.json   ensemble, active flags, problem definition and fingerprint,
                projection params, run config and history (sorted keys)
- history.csv   iteration, objective, volume_fraction, active_fields, band_elements
- timing.csv    per-iteration wall time of tdf / sen / fea / mma
- density.vtk   legacy ASCII STRUCTURED_POINTS with CELL_DATA density
- contours.csv  contour_id, point_index, x, y, kappa (2D only)
- stress.vtk    element von Mises stress (optional)
- summary.json  final metrics, binary metrics, mean stage times

Everything except timing.csv and the timing block of summary.json is a
deterministic function of design.json, so `get post` can rebuild it.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from errors import ConfigError, ContourError
from fea.mesh import StructuredMesh
from fea.stress import von_mises_field
from geometry.gaussians import GaussianField, eval_tdf
from numeric.analysis import AnalysisState, analyze
from numeric.projection import ProjectionParams, measure_nondiscreteness
from optimizer.history import ConvergenceHistory
from optimizer.loop import OptimizationResult
from postprocess.contours import contours_from_mesh
from postprocess.curvature import contour_curvature
from postprocess.evaluation import BinaryDesign, binary_extract
from problems.context import ProblemContext, build_context
from problems.definitions import ProblemDefinition

logger = logging.getLogger(__name__)

DESIGN_FORMAT = "get-design/1"
FLOAT_FORMAT = "%.12g"


# =============================================================================
# design.json
# =============================================================================

@dataclass
class DesignRecord:
    """Deserialized design.json."""

    problem: ProblemDefinition
    ensemble: List[GaussianField]
    params: ProjectionParams
    history: ConvergenceHistory
    config: Dict[str, Any] = field(default_factory=dict)
    iterations: int = 0
    converged: bool = False
    deactivated: int = 0


def design_payload(result: OptimizationResult, config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    problem = result.context.full_problem
    return {
        "format": DESIGN_FORMAT,
        "problem": problem.to_dict(),
        "fingerprint": problem.fingerprint(),
        "dim": problem.dim,
        "ensemble": [f.to_dict() for f in result.ensemble],
        "active": [bool(f.active) for f in result.ensemble],
        "params": result.params.to_dict(),
        "history": result.history.to_dict(),
        "iterations": result.iterations,
        "converged": result.converged,
        "deactivated": result.deactivated,
        "config": config or {},
    }


def _write_json(path: Path, payload: Dict[str, Any]) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def write_design(result: OptimizationResult, path: Path, config: Optional[Dict[str, Any]] = None) -> Path:
    return _write_json(Path(path), design_payload(result, config))


def load_design(path: Union[str, Path]) -> DesignRecord:
    """
    Read design.json.

    Raises:
        FileNotFoundError: Missing file
        ConfigError: Corrupt JSON (with line and column), missing keys, or a
            problem that no longer matches its fingerprint
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", line=exc.lineno) from exc

    try:
        if data.get("format") != DESIGN_FORMAT:
            raise ConfigError(f"{path}: not a design file (format {data.get('format')!r})")
        problem = ProblemDefinition.from_dict(data["problem"])
        ensemble = [GaussianField.from_dict(f) for f in data["ensemble"]]
        params = ProjectionParams(**data["params"])
        history = ConvergenceHistory.from_dict(data.get("history", {}))
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"{path}: malformed design file: {exc}") from exc

    if problem.fingerprint() != data.get("fingerprint"):
        raise ConfigError(f"{path}: problem does not match its fingerprint")

    return DesignRecord(
        problem=problem,
        ensemble=ensemble,
        params=params,
        history=history,
        config=data.get("config", {}),
        iterations=int(data.get("iterations", len(history))),
        converged=bool(data.get("converged", False)),
        deactivated=int(data.get("deactivated", 0)),
    )


def result_from_design(record: DesignRecord, context: Optional[ProblemContext] = None) -> OptimizationResult:
    """An OptimizationResult rebuilt from design.json (final state re-analysed)."""
    context = context or build_context(record.problem)
    state = analyze(record.ensemble, context, record.params)
    return OptimizationResult(
        ensemble=list(record.ensemble),
        history=record.history,
        context=context,
        params=record.params,
        final_state=state,
        iterations=record.iterations,
        converged=record.converged,
        deactivated=record.deactivated,
    )


# =============================================================================
# Tables
# =============================================================================

def write_history(history: ConvergenceHistory, path: Path) -> Path:
    history.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def write_timing(history: ConvergenceHistory, path: Path) -> Path:
    history.timing_frame().to_csv(path, index=False, float_format="%.6g")
    return path


# =============================================================================
# VTK
# =============================================================================

def _vtk_header(mesh: StructuredMesh, title: str) -> List[str]:
    dims = list(mesh.node_shape) + [1] * (3 - mesh.dim)
    origin = list(mesh.origin) + [0.0] * (3 - mesh.dim)
    spacing = list(mesh.element_size) + [float(mesh.element_size[0])] * (3 - mesh.dim)
    return [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {' '.join(str(int(d)) for d in dims)}",
        f"ORIGIN {' '.join(f'{v:.12g}' for v in origin)}",
        f"SPACING {' '.join(f'{v:.12g}' for v in spacing)}",
        f"CELL_DATA {mesh.n_elements}",
    ]


def write_cell_vtk(
    mesh: StructuredMesh,
    scalars: Dict[str, np.ndarray],
    path: Path,
    title: str = "get",
) -> Path:
    """
    Legacy ASCII structured-points file with one CELL_DATA scalar per entry.

    Values are ordered x fastest, which is both the mesh's element order and
    the VTK cell order.
    """
    lines = _vtk_header(mesh, title)
    for name, values in scalars.items():
        values = np.asarray(values, dtype=float).ravel()
        if values.size != mesh.n_elements:
            raise ValueError(f"'{name}' has {values.size} values for {mesh.n_elements} cells")
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(f"{v:.12g}" for v in values)
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def _full_mesh(context: ProblemContext) -> StructuredMesh:
    full = context.full_problem
    return StructuredMesh(full.resolution, full.extents)


def _to_full(context: ProblemContext, element_values: np.ndarray) -> np.ndarray:
    if context.reconstruction is None:
        return np.asarray(element_values)
    return context.reconstruction.densities(element_values)


# =============================================================================
# Contours
# =============================================================================

def contour_frame(
    ensemble: Sequence[GaussianField],
    mesh: StructuredMesh,
    level: float,
    curvature: bool = True,
) -> pd.DataFrame:
    """
    Boundary points of the TDF at `level` on a 2D mesh.

    With curvature, each contour is replaced by its uniform arc-length
    resampling and kappa is filled; contours too short for curvature keep
    their raw points with kappa = NaN.
    """
    columns = ["contour_id", "point_index", "x", "y", "kappa"]
    nodal = eval_tdf(ensemble, mesh.node_coordinates())
    rows = []
    for cid, contour in enumerate(contours_from_mesh(nodal, mesh, level, ensemble)):
        points, kappa = contour.points[:-1], np.full(contour.n_points, np.nan)
        if curvature:
            try:
                profile = contour_curvature(contour)
                points, kappa = profile.points, profile.kappa
            except ContourError as exc:
                logger.debug(f"contour {cid}: {exc}")
        for k, ((x, y), kap) in enumerate(zip(points, kappa)):
            rows.append((cid, k, float(x), float(y), float(kap)))
    return pd.DataFrame(rows, columns=columns)


def write_contours(
    context: ProblemContext,
    ensemble: Sequence[GaussianField],
    params: ProjectionParams,
    path: Path,
    curvature: bool = True,
) -> Optional[Path]:
    """contours.csv over the full domain; skipped (None) for 3D problems."""
    if context.dim != 2:
        logger.info("Skipping contours.csv for a 3D problem")
        return None
    full_ensemble = ensemble if context.reconstruction is None else context.reconstruction.ensemble(ensemble)
    frame = contour_frame(full_ensemble, _full_mesh(context), params.threshold, curvature)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


# =============================================================================
# Summary
# =============================================================================

def summary_payload(
    result: OptimizationResult,
    state: AnalysisState,
    binary: Optional[BinaryDesign],
) -> Dict[str, Any]:
    problem = result.context.problem
    bound = problem.volume_bound
    out: Dict[str, Any] = {
        "problem": problem.name,
        "fingerprint": result.context.full_problem.fingerprint(),
        "objective_kind": problem.objective,
        "objective": float(state.objective),
        "volume_fraction": float(state.volume_fraction),
        "volume_bound": bound,
        "nondiscreteness": measure_nondiscreteness(state.densities),
        "fields": len(result.ensemble),
        "active_fields": result.active_count,
        "deactivated": result.deactivated,
        "iterations": result.iterations,
        "converged": result.converged,
        "params": result.params.to_dict(),
    }
    if binary is not None:
        out["binary_objective"] = binary.objective
        out["binary_volume_fraction"] = binary.volume_fraction
        out["binary_overshoot"] = (binary.volume_fraction - bound) / bound
    if result.history.has_timing:
        out["mean_stage_times"] = result.history.mean_stage_times()
        out["stage_shares"] = result.history.stage_shares()
    return out


# =============================================================================
# Entry point
# =============================================================================

def export_artifacts(
    result: OptimizationResult,
    out_dir: Union[str, Path],
    exports: Sequence[str] = ("density", "contours", "curvature", "history", "binary"),
    config: Optional[Dict[str, Any]] = None,
    write_design_file: bool = True,
) -> Dict[str, Path]:
    """
    Write the enabled artifacts of a finished run.

    Args:
        result: Optimization result (final_state is analysed here if missing)
        out_dir: Output directory, created if needed
        exports: Names among density, contours, curvature, stress, history, binary
        config: Run config dump stored in design.json
        write_design_file: False when re-exporting from an existing design.json

    Returns:
        Mapping artifact name -> written path

    Raises:
        OSError: Unwritable output directory
        SingularSystemError: Binary extraction of a fully void design
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    wanted = set(exports)
    context = result.context
    state = result.final_state or analyze(result.ensemble, context, result.params)
    written: Dict[str, Path] = {}

    if write_design_file:
        written["design"] = write_design(result, out / "design.json", config)

    if "history" in wanted:
        written["history"] = write_history(result.history, out / "history.csv")
        if result.history.has_timing:
            written["timing"] = write_timing(result.history, out / "timing.csv")

    binary = None
    if "binary" in wanted:
        binary = binary_extract(result.ensemble, context, result.params)

    if "density" in wanted:
        scalars = {"density": _to_full(context, state.densities)}
        if binary is not None:
            scalars["binary"] = _to_full(context, binary.densities)
        written["density"] = write_cell_vtk(_full_mesh(context), scalars, out / "density.vtk", "density")

    if "contours" in wanted:
        path = write_contours(context, result.ensemble, result.params, out / "contours.csv", "curvature" in wanted)
        if path is not None:
            written["contours"] = path

    if "stress" in wanted:
        state.require_solve()
        vm = von_mises_field(state.u, state.densities, context.mesh, context.material)
        written["stress"] = write_cell_vtk(
            _full_mesh(context), {"von_mises": _to_full(context, vm)}, out / "stress.vtk", "stress"
        )

    written["summary"] = _write_json(out / "summary.json", summary_payload(result, state, binary))
    logger.info(f"Wrote {', '.join(sorted(written))} to {out}")
    return written
