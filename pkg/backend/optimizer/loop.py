# backend/optimizer/loop.py
"""
The optimization loop.

Per iteration:
    unpack -> TDF -> densities (frozen regions) -> FE solve(s)
    -> objective and sensitivities -> optional rounding -> record
    -> convergence check -> MMA step -> deactivate degenerate fields

Mechanism problems maximize the mutual energy J, so MMA sees -J.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import (
    ANGLE_BOUND,
    CONVERGENCE_PATIENCE,
    CONVERGENCE_TOL,
    LOG_EVERY,
    MAX_ITERS,
    SENSITIVITY_SIGNIFICANT_DIGITS,
    SIGMA_MAX_FRACTION,
    SIGMA_MIN_ELEMENT_FRACTION,
    SIGMA_MIN_FRACTION,
)
from errors import OptimizationError, TopologyError
from fea.mesh import StructuredMesh
from geometry.gaussians import GaussianField, block_size, deactivate_degenerate, pack, unpack
from numeric.analysis import AnalysisState, analyze
from numeric.projection import ProjectionParams
from numeric.sensitivity import design_sensitivities, round_sensitivities
from optimizer.history import ConvergenceHistory, StageTimer
from optimizer.mma import MmaSettings, MmaState, mma_update
from problems.context import ProblemContext, build_context
from problems.definitions import ProblemDefinition
from problems.layout import generate_layout

logger = logging.getLogger(__name__)

IterationCallback = Callable[[int, AnalysisState], None]


@dataclass
class OptimizerSettings:
    max_iters: int = MAX_ITERS
    tolerance: float = CONVERGENCE_TOL
    patience: int = CONVERGENCE_PATIENCE
    mma: MmaSettings = field(default_factory=MmaSettings)
    round_sensitivities: Optional[bool] = None  # None: follow the problem
    significant_digits: int = SENSITIVITY_SIGNIFICANT_DIGITS
    solver_method: Optional[str] = None
    log_every: int = LOG_EVERY
    sigma_min_fraction: float = SIGMA_MIN_FRACTION
    sigma_max_fraction: float = SIGMA_MAX_FRACTION
    angle_bound: float = ANGLE_BOUND

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError(f"max_iters must be >= 0, got {self.max_iters}")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")


@dataclass
class OptimizationResult:
    ensemble: List[GaussianField]
    history: ConvergenceHistory
    context: ProblemContext
    params: ProjectionParams
    final_state: Optional[AnalysisState]
    iterations: int
    converged: bool
    deactivated: int = 0

    @property
    def active_count(self) -> int:
        return sum(f.active for f in self.ensemble)

    def full_ensemble(self) -> List[GaussianField]:
        """Ensemble over the full domain (mirrored back for reduced runs)."""
        if self.context.reconstruction is None:
            return list(self.ensemble)
        return self.context.reconstruction.ensemble(self.ensemble)


# =============================================================================
# Bounds
# =============================================================================

def design_bounds(
    mesh: StructuredMesh,
    n: int,
    sigma_min_fraction: float = SIGMA_MIN_FRACTION,
    sigma_max_fraction: float = SIGMA_MAX_FRACTION,
    angle_bound: float = ANGLE_BOUND,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-variable (lower, upper) bounds for n fields on `mesh`.

    mu stays in the domain box, sigma in
    [min(sigma_min_fraction * min extent, SIGMA_MIN_ELEMENT_FRACTION * h),
     sigma_max_fraction * max extent], angles in [-angle_bound, angle_bound].
    """
    dim = mesh.dim
    origin = np.array(mesh.origin)
    extents = np.array(mesh.extents)
    sigma_lo = min(sigma_min_fraction * extents.min(), SIGMA_MIN_ELEMENT_FRACTION * mesh.h)
    sigma_hi = sigma_max_fraction * extents.max()
    n_angles = block_size(dim) - 2 * dim

    lo = np.concatenate([origin, np.full(dim, sigma_lo), np.full(n_angles, -angle_bound)])
    hi = np.concatenate([origin + extents, np.full(dim, sigma_hi), np.full(n_angles, angle_bound)])
    return np.tile(lo, n), np.tile(hi, n)


def _inactive_variables(active: Sequence[bool], dim: int) -> np.ndarray:
    size = block_size(dim)
    mask = np.repeat(~np.asarray(active, dtype=bool), size)
    return np.nonzero(mask)[0]


# =============================================================================
# Loop
# =============================================================================

def run_optimization(
    problem: Union[ProblemDefinition, ProblemContext],
    initial_ensemble: Optional[Sequence[GaussianField]] = None,
    params: Optional[ProjectionParams] = None,
    settings: Optional[OptimizerSettings] = None,
    callback: Optional[IterationCallback] = None,
) -> OptimizationResult:
    """
    Optimize an ensemble for one problem.

    Args:
        problem: Definition (resolved here) or an already resolved context
        initial_ensemble: Starting fields (default: the problem's layout)
        params: Projection parameters (must have epsilon > 0)
        settings: Iteration limits, MMA constants, rounding
        callback: Called as callback(iteration, state) after each analysis

    Returns:
        OptimizationResult with the final ensemble (analysed domain) and history

    Raises:
        OptimizationError: Numerical failure, carrying the iteration index
    """
    context = problem if isinstance(problem, ProblemContext) else build_context(problem)
    params = params or ProjectionParams()
    settings = settings or OptimizerSettings()
    analysed = context.problem
    mesh = context.mesh
    dim = mesh.dim

    if initial_ensemble is None:
        initial_ensemble = generate_layout(analysed.layout, analysed.extents, void_regions=analysed.regions)
    ensemble = list(initial_ensemble)
    n = len(ensemble)
    history = ConvergenceHistory()

    if settings.max_iters == 0:
        return OptimizationResult(ensemble, history, context, params, None, 0, False)
    if params.epsilon == 0:
        raise OptimizationError("cannot optimize with epsilon = 0", 0)

    rounding = analysed.round_sensitivities if settings.round_sensitivities is None else settings.round_sensitivities
    maximize = analysed.objective == "mpe"
    xmin, xmax = design_bounds(
        mesh, n, settings.sigma_min_fraction, settings.sigma_max_fraction, settings.angle_bound
    )
    x = np.clip(pack(ensemble), xmin, xmax)
    active = [f.active for f in ensemble]
    mma_state = MmaState.new(x.size)

    logger.info(
        f"Optimizing {analysed.name}: {n} fields, {x.size} variables, "
        f"mesh {'x'.join(map(str, mesh.resolution))}, eps={params.epsilon}, T={params.threshold}"
    )

    scale: Optional[float] = None
    previous: Optional[float] = None
    streak = 0
    converged = False
    deactivated = 0
    warm: Optional[List[np.ndarray]] = None
    iteration = 0
    state: Optional[AnalysisState] = None

    for iteration in range(1, settings.max_iters + 1):
        timer = StageTimer()
        try:
            ensemble = unpack(x, dim, n, active)
            state = analyze(
                ensemble, context, params, x0=warm, timer=timer, solver_method=settings.solver_method
            )
            warm = [state.u] if state.u_out is None else [state.u, state.u_out]

            with timer.stage("sen"):
                sens = design_sensitivities(state, context)
                df0, dv = sens.objective, sens.volume
                f0 = state.objective
                if maximize:
                    f0, df0 = -f0, -df0
                if rounding:
                    df0 = round_sensitivities(df0, settings.significant_digits)
                    dv = round_sensitivities(dv, settings.significant_digits)

            if not np.isfinite(state.objective):
                raise OptimizationError(f"objective became {state.objective}", iteration)
            if scale is None:
                scale = abs(f0) if f0 != 0 else 1.0

            g = state.volume_fraction - analysed.volume_bound
            history.record(
                state.objective, state.volume_fraction, sum(active), sens.band_elements, timer.lap()
            )
            if callback is not None:
                callback(iteration, state)

            if iteration == 1 or iteration % settings.log_every == 0:
                logger.info(
                    f"iter {iteration:4d}  obj={state.objective:.6g}  V_f={state.volume_fraction:.4f}  "
                    f"active={sum(active)}  band={sens.band_elements}"
                )

            if previous is not None:
                change = abs(state.objective - previous) / max(abs(previous), 1e-300)
                streak = streak + 1 if change < settings.tolerance and max(g, 0.0) < settings.tolerance else 0
            previous = state.objective
            if streak >= settings.patience:
                converged = True
                break

            with timer.stage("mma"):
                x_next = mma_update(
                    x, f0 / scale, df0 / scale, g, dv, (xmin, xmax), mma_state, settings.mma
                )
                frozen = _inactive_variables(active, dim)
                x_next[frozen] = x[frozen]
            history.add_time("mma", timer.lap()["mma"])

            x = x_next
            ensemble, count = deactivate_degenerate(unpack(x, dim, n, active), mesh.h)
            deactivated += count
            active = [f.active for f in ensemble]
        except OptimizationError:
            raise
        except (TopologyError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            raise OptimizationError(str(exc), iteration) from exc

    ensemble = unpack(x, dim, n, active)
    try:
        final_state = analyze(ensemble, context, params, x0=warm, solver_method=settings.solver_method)
    except (TopologyError, ValueError, ArithmeticError) as exc:
        raise OptimizationError(f"final analysis failed: {exc}", iteration) from exc

    logger.info(
        f"Finished {analysed.name} after {len(history)} iteration(s)"
        f"{' (converged)' if converged else ''}: obj={final_state.objective:.6g}, "
        f"V_f={final_state.volume_fraction:.4f}, active={sum(active)}/{n}"
    )
    return OptimizationResult(
        ensemble=ensemble,
        history=history,
        context=context,
        params=params,
        final_state=final_state,
        iterations=len(history),
        converged=converged,
        deactivated=deactivated,
    )
