# backend/numeric/analysis.py
"""
One forward pass of the pipeline: ensemble -> nodal TDF -> element densities
-> frozen regions -> FE solve(s) -> objective and element energies.

The optimizer, the finite-difference oracle, binary extraction and mesh
re-evaluation all go through `analyze`, so they agree on every number.
"""

import logging
from contextlib import nullcontext
from dataclasses import dataclass
from typing import Any, List, Optional, Sequence, Tuple

import numpy as np

from errors import StateError
from fea.mesh import StructuredMesh
from fea.solver import StiffnessSystem, compliance, mutual_potential_energy
from geometry.gaussians import GaussianField, eval_tdf
from numeric.projection import ProjectionParams, element_density
from problems.context import ProblemContext
from problems.nondesign import ResolvedRegions, apply_nondesign

logger = logging.getLogger(__name__)


@dataclass
class AnalysisState:
    """Everything one forward pass produced."""

    ensemble: List[GaussianField]
    params: ProjectionParams
    nodal_tdf: np.ndarray
    densities: np.ndarray
    volume_fraction: float
    u: Optional[np.ndarray] = None
    u_out: Optional[np.ndarray] = None
    objective: Optional[float] = None
    element_energy: Optional[np.ndarray] = None

    @property
    def solved(self) -> bool:
        return self.u is not None

    def require_solve(self) -> None:
        if self.u is None or self.element_energy is None:
            raise StateError("displacements have not been computed for this state")


def _stage(timer: Any, name: str):
    return timer.stage(name) if timer is not None else nullcontext()


def project_densities(
    ensemble: Sequence[GaussianField],
    mesh: StructuredMesh,
    params: ProjectionParams,
    regions: Optional[ResolvedRegions] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Nodal TDF and element densities (frozen regions applied).

    Returns:
        (nodal_tdf of length n_nodes, densities of length n_elements)
    """
    tdf = eval_tdf(ensemble, mesh.node_coordinates())
    rho = element_density(tdf[mesh.connectivity], params)
    if regions is not None and not regions.is_empty:
        rho = apply_nondesign(rho, regions)
    return tdf, rho


def element_energies(mesh: StructuredMesh, ke: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """u_e^T k0 v_e for every element (density not included)."""
    ue = u[mesh.edof]
    ve = v[mesh.edof]
    return np.einsum("ei,ij,ej->e", ue, ke, ve)


def analyze(
    ensemble: Sequence[GaussianField],
    context: ProblemContext,
    params: ProjectionParams,
    solve: bool = True,
    x0: Optional[Sequence[Optional[np.ndarray]]] = None,
    timer: Any = None,
    solver_method: Optional[str] = None,
) -> AnalysisState:
    """
    Run the forward pipeline on the context's mesh.

    Args:
        ensemble: Gaussian fields (inactive ones contribute nothing)
        context: Resolved problem
        params: Projection parameters
        solve: Skip the FE solve when False (densities and V_f only)
        x0: Optional warm starts for the CG path, one per load case
        timer: Object with a `stage(name)` context manager (StageTimer)
        solver_method: Force "direct" or "cg"

    Raises:
        SingularSystemError: From the solver
    """
    mesh = context.mesh
    with _stage(timer, "tdf"):
        tdf, rho = project_densities(ensemble, mesh, params, context.regions)
    volume_fraction = float(np.mean(rho))

    state = AnalysisState(
        ensemble=list(ensemble),
        params=params,
        nodal_tdf=tdf,
        densities=rho,
        volume_fraction=volume_fraction,
    )
    if not solve:
        return state

    with _stage(timer, "fea"):
        lc = context.loadcase
        system = StiffnessSystem(mesh, rho, context.ke, lc.spring_diagonal(), method=solver_method)
        if context.problem.objective == "mpe":
            u1, u2 = system.solve([lc, context.output_loadcase], x0=x0)
            state.u, state.u_out = u1, u2
            state.objective = mutual_potential_energy(u1, u2, system, context.output_loadcase.force)
            state.element_energy = element_energies(mesh, context.ke, u1, u2)
        else:
            (u,) = system.solve([lc], x0=x0)
            state.u = u
            state.objective = compliance(u, lc.force)
            state.element_energy = element_energies(mesh, context.ke, u, u)

    return state
