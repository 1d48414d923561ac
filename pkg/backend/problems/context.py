# backend/problems/context.py
"""
Resolve a ProblemDefinition against its mesh.

Builds the pieces every analysis needs once per run: the mesh, the reference
element stiffness, the load case(s) in dof space, and the frozen regions.
Symmetry reduction happens first, so the context always describes the
domain that is actually analysed.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from errors import DefinitionError
from fea.elements import MaterialModel, element_stiffness
from fea.mesh import StructuredMesh
from fea.solver import LoadCase
from problems.definitions import DistributedLoad, PointLoad, ProblemDefinition
from problems.nondesign import ResolvedRegions, resolve_regions
from problems.symmetry import ReconstructionMap, prepare_problem

logger = logging.getLogger(__name__)


@dataclass
class ProblemContext:
    """Everything fixed for the lifetime of one run."""

    problem: ProblemDefinition
    full_problem: ProblemDefinition
    mesh: StructuredMesh
    material: MaterialModel
    ke: np.ndarray
    loadcase: LoadCase
    output_loadcase: Optional[LoadCase]
    regions: ResolvedRegions
    reconstruction: Optional[ReconstructionMap] = None

    @property
    def dim(self) -> int:
        return self.mesh.dim

    @property
    def is_reduced(self) -> bool:
        return self.reconstruction is not None


# =============================================================================
# Loads
# =============================================================================

def _axis_weights(coords: np.ndarray, lo: float, hi: float) -> np.ndarray:
    """Trapezoid weights of the sorted node coordinates spanning [lo, hi]."""
    if coords.size == 1:
        return np.array([hi - lo])
    gaps = np.diff(coords)
    w = np.zeros(coords.size)
    w[:-1] += 0.5 * gaps
    w[1:] += 0.5 * gaps
    # rescale so the weights integrate exactly over [lo, hi]
    return w * ((hi - lo) / w.sum())


def lump_distributed_load(mesh: StructuredMesh, load: DistributedLoad) -> np.ndarray:
    """
    Consistent-enough nodal forces of a line or surface load.

    Flat axes (lo == hi) are snapped to the nearest node layer. Along each
    extended axis the loaded nodes get trapezoid shares (half shares at the
    segment ends), so the total force is intensity * length (area).

    Raises:
        DefinitionError: If no node lies in the loaded box
    """
    dim = mesh.dim
    tol = 1e-9 * max(mesh.extents)
    index_sets: List[np.ndarray] = []
    weight_sets: List[np.ndarray] = []

    for a in range(dim):
        lo, hi = load.lo[a], load.hi[a]
        axis = mesh.axis_coordinates(a)
        if hi - lo <= tol:
            k = int(np.argmin(np.abs(axis - lo)))
            if abs(axis[k] - lo) > tol:
                logger.debug(f"Distributed load plane x{a}={lo} snapped to node layer {axis[k]:.6g}")
            index_sets.append(np.array([k]))
            weight_sets.append(np.array([1.0]))
            continue
        ks = np.nonzero((axis >= lo - tol) & (axis <= hi + tol))[0]
        if ks.size == 0:
            raise DefinitionError(f"distributed load box {load.lo}-{load.hi} covers no nodes")
        index_sets.append(ks)
        weight_sets.append(_axis_weights(axis[ks], lo, hi))

    grids = np.meshgrid(*index_sets, indexing="ij")
    wgrids = np.meshgrid(*weight_sets, indexing="ij")
    ijk = np.column_stack([g.ravel() for g in grids])
    weights = np.prod(np.column_stack([w.ravel() for w in wgrids]), axis=1)

    strides = np.cumprod((1,) + mesh.node_shape[:-1])
    nodes = ijk @ strides

    f = np.zeros(mesh.n_dofs)
    for k, q in enumerate(load.intensity):
        if q:
            np.add.at(f, dim * nodes + k, q * weights)
    return f


def _node_at(mesh: StructuredMesh, point: Sequence[float], what: str) -> int:
    node = mesh.node_on_grid(point)
    if node is None:
        raise DefinitionError(f"{what} at {tuple(point)} does not land on a mesh node")
    return node


def assemble_force(mesh: StructuredMesh, problem: ProblemDefinition) -> np.ndarray:
    dim = mesh.dim
    f = np.zeros(mesh.n_dofs)
    for load in problem.loads:
        if isinstance(load, PointLoad):
            node = _node_at(mesh, load.point, "point load")
            f[dim * node:dim * node + dim] += np.array(load.force)
        else:
            f += lump_distributed_load(mesh, load)
    return f


def fixed_dofs(mesh: StructuredMesh, problem: ProblemDefinition) -> np.ndarray:
    dim = mesh.dim
    dofs = []
    for support in problem.supports:
        nodes = mesh.nodes_in_box(support.lo, support.hi)
        if nodes.size == 0:
            raise DefinitionError(f"support box {support.lo}-{support.hi} covers no nodes")
        for c in support.components:
            dofs.append(dim * nodes + c)
    return np.unique(np.concatenate(dofs)) if dofs else np.zeros(0, dtype=int)


def spring_list(mesh: StructuredMesh, problem: ProblemDefinition) -> List[Tuple[int, float]]:
    springs: Dict[int, float] = {}
    for s in problem.springs:
        dof = mesh.dim * _node_at(mesh, s.point, "spring") + s.axis
        springs[dof] = springs.get(dof, 0.0) + s.stiffness
    return sorted(springs.items())


# =============================================================================
# Context
# =============================================================================

def build_context(
    problem: ProblemDefinition,
    material: Optional[MaterialModel] = None,
    reduce: bool = True,
) -> ProblemContext:
    """
    Resolve `problem` (symmetry-reduced when it asks for it) on its mesh.

    Raises:
        DefinitionError: Off-node point loads/springs/ports, empty support
            boxes, overlapping regions, or a misplaced symmetry plane
    """
    material = material or MaterialModel()
    if reduce:
        analysed, reconstruction = prepare_problem(problem)
    else:
        analysed, reconstruction = problem, None

    mesh = StructuredMesh(analysed.resolution, analysed.extents)
    ke = element_stiffness(mesh, material)

    force = assemble_force(mesh, analysed)
    fixed = fixed_dofs(mesh, analysed)
    springs = spring_list(mesh, analysed)
    loadcase = LoadCase(force=force, fixed_dofs=fixed, springs=springs)

    output_loadcase = None
    if analysed.output_port is not None:
        port = analysed.output_port
        node = _node_at(mesh, port.point, "output port")
        pseudo = np.zeros(mesh.n_dofs)
        pseudo[mesh.dim * node:mesh.dim * node + mesh.dim] = np.array(port.direction)
        output_loadcase = loadcase.with_force(pseudo)

    regions = resolve_regions(mesh, analysed.regions)

    logger.info(
        f"Context {analysed.name}: {mesh.n_elements} elements, {mesh.n_dofs} dofs, "
        f"{fixed.size} fixed, {regions.solid.size} solid / {regions.void.size} void frozen"
    )
    return ProblemContext(
        problem=analysed,
        full_problem=problem,
        mesh=mesh,
        material=material,
        ke=ke,
        loadcase=loadcase,
        output_loadcase=output_loadcase,
        regions=regions,
        reconstruction=reconstruction,
    )
