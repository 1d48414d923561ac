# backend/problems/layout.py
"""Initial staggered X-pattern layouts."""

import itertools
import logging
from typing import List, Optional, Sequence

import numpy as np

from geometry.gaussians import GaussianField
from problems.definitions import InitialLayoutSpec, NonDesignRegion

logger = logging.getLogger(__name__)


def _inside(point: np.ndarray, region: NonDesignRegion) -> bool:
    return bool(np.all(point >= np.array(region.lo)) and np.all(point <= np.array(region.hi)))


def generate_layout(
    spec: InitialLayoutSpec,
    extents: Sequence[float],
    origin: Optional[Sequence[float]] = None,
    void_regions: Sequence[NonDesignRegion] = (),
) -> List[GaussianField]:
    """
    Place fields_per_cell rotated copies at the centre of every layout cell.

    Cells are visited x-fastest so the ensemble order is deterministic. Cells
    whose centre lies in a void region are skipped when spec.skip_void is set.

    Args:
        spec: Layout grid, rotations, and sigma fractions
        extents: Domain (or reduced domain) size per axis
        origin: Lower domain corner (default zero)
        void_regions: Frozen-void boxes used for skipping

    Returns:
        List of active GaussianField
    """
    extents = np.asarray(extents, dtype=float)
    dim = extents.size
    if spec.dim != dim:
        raise ValueError(f"layout is {spec.dim}D, domain is {dim}D")
    origin = np.zeros(dim) if origin is None else np.asarray(origin, dtype=float)

    cell = extents / np.array(spec.grid)
    diagonal = float(np.linalg.norm(cell))
    sigma = np.full(dim, spec.sigma_minor_fraction * diagonal)
    sigma[0] = spec.sigma_major_fraction * diagonal

    voids = [r for r in void_regions if r.kind == "void"] if spec.skip_void else []

    ensemble: List[GaussianField] = []
    skipped = 0
    # x-fastest: iterate the reversed axes and flip each index tuple back
    for rev in itertools.product(*(range(n) for n in reversed(spec.grid))):
        idx = np.array(rev[::-1])
        centre = origin + (idx + 0.5) * cell
        if any(_inside(centre, r) for r in voids):
            skipped += 1
            continue
        for angle in spec.angles:
            ensemble.append(GaussianField(mu=centre, sigma=sigma, angles=angle))

    logger.debug(
        f"Layout {'x'.join(map(str, spec.grid))}: {len(ensemble)} fields, {skipped} void cells skipped"
    )
    return ensemble
