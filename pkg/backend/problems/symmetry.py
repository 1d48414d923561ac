# backend/problems/symmetry.py
"""
Symmetry reduction and full-domain reconstruction.

A reduced problem keeps the lower half of the domain along every declared
plane (x[axis] <= coordinate). The plane itself gets a zero normal
displacement support; anything lying exactly on it carries half its load
(point forces, springs, flat distributed loads), anything beyond it is
dropped.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from errors import DefinitionError
from geometry.gaussians import GaussianField, block_size, reflect_field
from problems.definitions import (
    DistributedLoad,
    Load,
    NonDesignRegion,
    PointLoad,
    ProblemDefinition,
    Spring,
    Support,
    SymmetryPlane,
)

logger = logging.getLogger(__name__)


def _tol(problem: ProblemDefinition) -> float:
    return 1e-9 * max(problem.extents)


def _set(values: Sequence[float], axis: int, value: float) -> Tuple[float, ...]:
    out = list(values)
    out[axis] = value
    return tuple(out)


def _reduce_once(problem: ProblemDefinition, plane: SymmetryPlane) -> ProblemDefinition:
    a, c = plane.axis, float(plane.coordinate)
    tol = _tol(problem)
    length = problem.extents[a]

    if abs(c - 0.5 * length) > tol:
        raise DefinitionError(
            f"{problem.name}: symmetry plane x{a}={c} does not bisect the domain (extent {length})"
        )
    if problem.resolution[a] % 2:
        raise DefinitionError(
            f"{problem.name}: symmetry plane x{a}={c} is not on a mesh line "
            f"({problem.resolution[a]} elements along axis {a})"
        )

    loads: List[Load] = []
    for load in problem.loads:
        if isinstance(load, PointLoad):
            if load.point[a] > c + tol:
                continue
            if abs(load.point[a] - c) <= tol:
                load = replace(load, force=tuple(0.5 * f for f in load.force))
            loads.append(load)
        elif isinstance(load, DistributedLoad):
            if load.lo[a] > c + tol:
                continue
            if abs(load.lo[a] - c) <= tol and abs(load.hi[a] - c) <= tol:
                load = replace(load, intensity=tuple(0.5 * q for q in load.intensity))
            else:
                load = replace(load, hi=_set(load.hi, a, min(load.hi[a], c)))
            loads.append(load)

    supports = [
        replace(s, hi=_set(s.hi, a, min(s.hi[a], c)))
        for s in problem.supports
        if s.lo[a] <= c + tol
    ]
    extents = _set(problem.extents, a, c)
    supports.append(
        Support(
            lo=_set(tuple(0.0 for _ in extents), a, c),
            hi=extents,
            components=(a,),
        )
    )

    springs: List[Spring] = []
    for s in problem.springs:
        if s.point[a] > c + tol:
            continue
        if abs(s.point[a] - c) <= tol:
            s = replace(s, stiffness=0.5 * s.stiffness)
        springs.append(s)

    port = problem.output_port
    if port is not None and port.point[a] > c + tol:
        raise DefinitionError(f"{problem.name}: output port lies beyond symmetry plane x{a}={c}")

    regions: List[NonDesignRegion] = [
        replace(r, hi=_set(r.hi, a, min(r.hi[a], c)))
        for r in problem.regions
        if r.lo[a] < c - tol
    ]

    resolution = list(problem.resolution)
    resolution[a] //= 2

    return replace(
        problem,
        extents=extents,
        resolution=tuple(resolution),
        loads=loads,
        supports=supports,
        springs=springs,
        regions=regions,
    )


# =============================================================================
# Reconstruction
# =============================================================================

@dataclass
class ReconstructionMap:
    """Mirrors reduced-domain results back onto the full domain."""

    full: ProblemDefinition
    reduced: ProblemDefinition
    planes: List[SymmetryPlane] = field(default_factory=list)

    def _mirror(self, grid: np.ndarray, shared: bool) -> np.ndarray:
        dim = self.full.dim
        for plane in self.planes:
            ax = dim - 1 - plane.axis  # grids are stored [z,] y, x
            flipped = np.flip(grid, axis=ax)
            if shared:
                flipped = np.take(flipped, np.arange(1, flipped.shape[ax]), axis=ax)
            grid = np.concatenate([grid, flipped], axis=ax)
        return grid

    def densities(self, reduced: np.ndarray) -> np.ndarray:
        """Element values on the full mesh (x-fastest flat array)."""
        grid = np.asarray(reduced).reshape(self.reduced.resolution[::-1])
        return self._mirror(grid, shared=False).ravel()

    def node_values(self, reduced: np.ndarray) -> np.ndarray:
        """Node values on the full mesh; plane nodes are shared, not doubled."""
        shape = tuple(n + 1 for n in self.reduced.resolution[::-1])
        grid = np.asarray(reduced).reshape(shape)
        return self._mirror(grid, shared=True).ravel()

    def ensemble(self, fields: Sequence[GaussianField]) -> List[GaussianField]:
        """The reduced ensemble plus its reflections across every plane."""
        out = list(fields)
        for plane in self.planes:
            out = out + [reflect_field(f, plane.axis, plane.coordinate) for f in out]
        return out


def symmetry_reduce(problem: ProblemDefinition) -> Tuple[ProblemDefinition, ReconstructionMap]:
    """
    Reduced problem over the lower half (quarter) of the domain.

    Raises:
        DefinitionError: If a plane does not bisect the domain on a mesh line,
            or the output port lies in the dropped part
    """
    if not problem.symmetry_planes:
        raise DefinitionError(f"{problem.name}: no symmetry planes declared")

    reduced = problem
    for plane in problem.symmetry_planes:
        reduced = _reduce_once(reduced, plane)
    reduced = replace(reduced, symmetry_planes=[], reduce_symmetry=False)

    logger.info(
        f"Reduced {problem.name}: mesh {'x'.join(map(str, problem.resolution))} -> "
        f"{'x'.join(map(str, reduced.resolution))}"
    )
    return reduced, ReconstructionMap(problem, reduced, list(problem.symmetry_planes))


def prepare_problem(
    problem: ProblemDefinition,
) -> Tuple[ProblemDefinition, Optional[ReconstructionMap]]:
    """The problem actually analysed, plus a reconstruction map when reduced."""
    if problem.reduce_symmetry and problem.symmetry_planes:
        return symmetry_reduce(problem)
    return problem, None


# =============================================================================
# Mirror parameter map
# =============================================================================

def mirror_parameter_map(
    ensemble: Sequence[GaussianField],
    plane: SymmetryPlane,
    tol: float = 1e-9,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Pair every field with its mirror image across `plane`.

    For a mirror-symmetric 2D ensemble any quantity g that is a derivative of
    a mirror-invariant scalar satisfies

        g[block i] == signs * g[block partner[i]]

    Returns:
        (partner indices, per-block sign vector)

    Raises:
        DefinitionError: For 3D ensembles or when some field has no mirror
    """
    if not ensemble:
        return np.zeros(0, dtype=int), np.zeros(0)
    dim = ensemble[0].dim
    if dim != 2:
        raise DefinitionError("mirror parameter map is defined for 2D ensembles")

    vectors = np.array([f.as_vector() for f in ensemble])
    scale = max(1.0, float(np.max(np.abs(vectors))))
    partner = np.full(len(ensemble), -1, dtype=int)
    for i, f in enumerate(ensemble):
        image = reflect_field(f, plane.axis, plane.coordinate).as_vector()
        gaps = np.max(np.abs(vectors - image), axis=1)
        j = int(np.argmin(gaps))
        if gaps[j] > tol * scale:
            raise DefinitionError(f"field {i} has no mirror image across x{plane.axis}={plane.coordinate}")
        partner[i] = j

    signs = np.ones(block_size(dim))
    signs[plane.axis] = -1.0
    signs[-1] = -1.0
    return partner, signs
