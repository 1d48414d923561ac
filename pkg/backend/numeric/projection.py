# backend/numeric/projection.py
"""
Regularized Heaviside projection from nodal TDF values to element densities.

Inside the band |phi - T| <= eps the density follows the cubic blend

    H(phi) = 3(1 - a)/4 * ((phi - T)/eps - (phi - T)^3 / (3 eps^3)) + (1 + a)/2

which meets the floor a below the band and 1 above it with zero slope at both
edges. With eps = 0 the projection is a pure step, phi == T counts as solid,
and every element comes out exactly solid or void.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict

import numpy as np

from config import MND_CLAMP, PROJECTION_ALPHA_FLOOR, PROJECTION_EPSILON, PROJECTION_THRESHOLD
from errors import ProjectionError, ShapeError


@dataclass(frozen=True)
class ProjectionParams:
    """Threshold T, band half-width epsilon, and void floor alpha."""

    threshold: float = PROJECTION_THRESHOLD
    epsilon: float = PROJECTION_EPSILON
    alpha_floor: float = PROJECTION_ALPHA_FLOOR

    def __post_init__(self):
        if not self.threshold > 0:
            raise ProjectionError(f"threshold must be positive, got {self.threshold}")
        if self.epsilon < 0:
            raise ProjectionError(f"epsilon must be >= 0, got {self.epsilon}")
        if not 0 < self.alpha_floor < 0.5:
            raise ProjectionError(f"alpha_floor must lie in (0, 0.5), got {self.alpha_floor}")

    def binary(self) -> "ProjectionParams":
        """Same threshold and floor with the band collapsed (eps = 0)."""
        return ProjectionParams(threshold=self.threshold, epsilon=0.0, alpha_floor=self.alpha_floor)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def heaviside(phi, p: ProjectionParams):
    """
    Project TDF values to densities in [alpha_floor, 1].

    Accepts scalars or arrays; returns the same kind.
    """
    values = np.asarray(phi, dtype=float)
    a = p.alpha_floor

    if p.epsilon == 0:
        out = np.where(values >= p.threshold, 1.0, a)
    else:
        t = (values - p.threshold) / p.epsilon
        blend = 0.75 * (1 - a) * (t - t**3 / 3.0) + 0.5 * (1 + a)
        out = np.where(t > 1, 1.0, np.where(t < -1, a, blend))

    return float(out) if out.ndim == 0 else out


def heaviside_derivative(phi, p: ProjectionParams):
    """
    d(density)/d(phi): 3(1 - a)/(4 eps) (1 - (phi - T)^2 / eps^2) inside the band.

    Raises:
        ProjectionError: If epsilon is zero (the step has no derivative)
    """
    if p.epsilon == 0:
        raise ProjectionError("heaviside derivative is undefined for epsilon = 0")

    values = np.asarray(phi, dtype=float)
    t = (values - p.threshold) / p.epsilon
    bump = 0.75 * (1 - p.alpha_floor) / p.epsilon * (1 - t**2)
    out = np.where(np.abs(t) < 1, bump, 0.0)
    return float(out) if out.ndim == 0 else out


def element_density(nodal_tdf, p: ProjectionParams) -> np.ndarray:
    """
    Element densities from the TDF at each element's nodes.

    With a band (eps > 0) the density is the mean projected nodal value. With
    eps = 0 the element is strictly solid or void: the step is applied to the
    TDF at the element centroid, which for Q4/Hex8 interpolation is the mean
    of the nodal values.

    Args:
        nodal_tdf: (n_elements, nodes_per_element) TDF values, 4 (Q4) or 8 (Hex8)
            nodes per element; a single element may be passed as a 1-D array.

    Raises:
        ShapeError: If the node count is not 4 or 8
    """
    values = np.asarray(nodal_tdf, dtype=float)
    single = values.ndim == 1
    values = np.atleast_2d(values)
    if values.shape[1] not in (4, 8):
        raise ShapeError(f"expected 4 or 8 nodes per element, got {values.shape[1]}")
    if p.epsilon == 0:
        rho = np.asarray(heaviside(np.mean(values, axis=1), p), dtype=float)
    else:
        rho = np.mean(heaviside(values, p), axis=1)
    return rho[0] if single else rho


def measure_nondiscreteness(densities, clamp: float = MND_CLAMP) -> float:
    """
    Mean of 4 rho (1 - rho) over all elements, in percent.

    Densities below `clamp` (the void floor) count as exactly 0 so a clean
    black-and-white design reports 0%.

    Example:
        >>> measure_nondiscreteness([0.5, 0.5])
        100.0
    """
    rho = np.asarray(densities, dtype=float).ravel()
    if rho.size == 0:
        return 0.0
    rho = np.where(rho < clamp, 0.0, rho)
    return float(np.mean(4.0 * rho * (1.0 - rho)) * 100.0)
