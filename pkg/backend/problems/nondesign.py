# backend/problems/nondesign.py
"""
Frozen solid / frozen void regions.

Regions are resolved once per mesh by element-centroid membership. The
clamped element set is what the sensitivity code skips: a clamped element's
density does not depend on the design, so neither does its energy term.
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from config import RHO_VOID
from errors import DefinitionError, ShapeError
from fea.mesh import StructuredMesh
from problems.definitions import NonDesignRegion


@dataclass
class ResolvedRegions:
    """Element index sets of the frozen regions on one mesh."""

    n_elements: int
    solid: np.ndarray
    void: np.ndarray
    rho_void: float = RHO_VOID

    @property
    def clamped(self) -> np.ndarray:
        """Boolean mask over elements, True where the density is frozen."""
        mask = np.zeros(self.n_elements, dtype=bool)
        mask[self.solid] = True
        mask[self.void] = True
        return mask

    @property
    def is_empty(self) -> bool:
        return self.solid.size == 0 and self.void.size == 0


def resolve_regions(
    mesh: StructuredMesh,
    regions: Sequence[NonDesignRegion],
    rho_void: float = RHO_VOID,
) -> ResolvedRegions:
    """
    Map region boxes to element indices.

    Raises:
        DefinitionError: If a solid and a void region claim the same element
    """
    solid, void = [], []
    for region in regions:
        elements = mesh.elements_in_box(region.lo, region.hi)
        (solid if region.kind == "solid" else void).append(elements)

    solid_idx = np.unique(np.concatenate(solid)) if solid else np.zeros(0, dtype=int)
    void_idx = np.unique(np.concatenate(void)) if void else np.zeros(0, dtype=int)

    overlap = np.intersect1d(solid_idx, void_idx)
    if overlap.size:
        raise DefinitionError(
            f"{overlap.size} element(s) belong to both a solid and a void region"
        )
    return ResolvedRegions(mesh.n_elements, solid_idx.astype(int), void_idx.astype(int), rho_void)


def apply_nondesign(densities: np.ndarray, resolved: ResolvedRegions) -> np.ndarray:
    """Copy of `densities` with solid elements at 1 and void elements at rho_void."""
    rho = np.array(densities, dtype=float)
    if rho.size != resolved.n_elements:
        raise ShapeError(f"got {rho.size} densities for {resolved.n_elements} elements")
    rho[resolved.solid] = 1.0
    rho[resolved.void] = resolved.rho_void
    return rho
