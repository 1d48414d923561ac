# backend/geometry/gaussians.py
"""
Anisotropic Gaussian fields and their superposed topology description function.

Each field is exp(-1/2 d^T Sigma^-1 d) with d = x - mu and
Sigma^-1 = R diag(1/sigma^2) R^T built in closed form from the rotation and
the per-axis scales (never by numeric inversion). The TDF of an ensemble is
the plain sum over active fields.

Design-vector block order per field:
    2D: (mu_x, mu_y, sigma_x, sigma_y, theta)
    3D: (mu_x, mu_y, mu_z, sigma_x, sigma_y, sigma_z, alpha, beta, gamma)

Usage:
    from geometry.gaussians import GaussianField, eval_tdf

    field = GaussianField(mu=[1.0, 0.5], sigma=[0.3, 0.1], angles=[0.4])
    values = eval_tdf([field], mesh.node_coordinates())
"""

import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import TRUNCATION_SIGMAS
from errors import InvalidFieldError, ShapeError
from geometry.rotations import (
    euler_angles_from_rotation,
    rotation_derivatives,
    rotation_matrix,
)

logger = logging.getLogger(__name__)


def block_size(dim: int) -> int:
    """Number of design variables per field (5 in 2D, 9 in 3D)."""
    if dim == 2:
        return 5
    if dim == 3:
        return 9
    raise ShapeError(f"dim must be 2 or 3, got {dim}")


@dataclass(eq=False)
class GaussianField:
    """One anisotropic Gaussian primitive."""

    mu: np.ndarray
    sigma: np.ndarray
    angles: np.ndarray
    active: bool = True

    def __post_init__(self):
        self.mu = np.atleast_1d(np.asarray(self.mu, dtype=float)).copy()
        self.sigma = np.atleast_1d(np.asarray(self.sigma, dtype=float)).copy()
        self.angles = np.atleast_1d(np.asarray(self.angles, dtype=float)).copy()
        dim = self.mu.size
        n_angles = 1 if dim == 2 else 3
        if dim not in (2, 3) or self.sigma.size != dim or self.angles.size != n_angles:
            raise ShapeError(
                f"inconsistent field shapes: mu={self.mu.shape}, "
                f"sigma={self.sigma.shape}, angles={self.angles.shape}"
            )
        self.active = bool(self.active)

    @property
    def dim(self) -> int:
        return self.mu.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.mu, self.sigma, self.angles])

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "angles": self.angles.tolist(),
            "active": self.active,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GaussianField":
        return cls(
            mu=data["mu"],
            sigma=data["sigma"],
            angles=data["angles"],
            active=data.get("active", True),
        )


# =============================================================================
# Evaluation
# =============================================================================

def covariance_inverse(field: GaussianField) -> np.ndarray:
    """
    Closed-form inverse covariance R diag(1/sigma^2) R^T.

    Raises:
        InvalidFieldError: If any sigma component is not strictly positive
    """
    if not np.all(np.isfinite(field.sigma)) or np.any(field.sigma <= 0):
        raise InvalidFieldError(f"sigma must be strictly positive, got {field.sigma.tolist()}")
    R = rotation_matrix(field.angles)
    return (R * (1.0 / field.sigma**2)) @ R.T


def _as_points(x, dim: int) -> Tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[1] != dim:
        raise ShapeError(f"points must have {dim} columns, got shape {pts.shape}")
    return pts, single


def _local_coordinates(field: GaussianField, pts: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Offsets d and their principal-axis coordinates R^T d, row-wise."""
    R = rotation_matrix(field.angles)
    d = pts - field.mu
    return d, d @ R


def eval_field(field: GaussianField, x) -> Any:
    """
    Evaluate one field at a point (returns float) or at (N, dim) points.

    No truncation is applied here; the value is strictly positive.
    """
    covariance_inverse(field)  # validates sigma
    pts, single = _as_points(x, field.dim)
    _, local = _local_coordinates(field, pts)
    q = np.sum(local**2 / field.sigma**2, axis=1)
    values = np.exp(-0.5 * q)
    return float(values[0]) if single else values


def support_mask(field: GaussianField, points: np.ndarray) -> np.ndarray:
    """
    Boolean mask of points inside the truncated support of a field.

    The support is the oriented box of TRUNCATION_SIGMAS * sigma along each
    principal axis. An axis-aligned bounding box prefilter keeps the cost
    close to the number of points actually covered.
    """
    pts = np.asarray(points, dtype=float)
    R = rotation_matrix(field.angles)
    reach = TRUNCATION_SIGMAS * field.sigma
    half_extent = np.abs(R) @ reach

    mask = np.all(np.abs(pts - field.mu) <= half_extent, axis=1)
    candidates = np.nonzero(mask)[0]
    if candidates.size:
        local = (pts[candidates] - field.mu) @ R
        inside = np.all(np.abs(local) <= reach, axis=1)
        mask[candidates[~inside]] = False
    return mask


def eval_tdf(ensemble: Sequence[GaussianField], points) -> np.ndarray:
    """
    Superposed TDF: per-point sum of the active fields (truncated support).

    Inactive fields contribute exactly zero; an empty ensemble gives zeros.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    total = np.zeros(pts.shape[0])
    for f in ensemble:
        if not f.active:
            continue
        idx = np.nonzero(support_mask(f, pts))[0]
        if idx.size == 0:
            continue
        total[idx] += eval_field(f, pts[idx])
    return total


# =============================================================================
# Parameter gradients
# =============================================================================

def grad_field_params(field: GaussianField, x) -> np.ndarray:
    """
    Exact derivatives of eval_field with respect to the field's own parameters.

    Args:
        field: Gaussian field
        x: One point (dim,) or points (N, dim)

    Returns:
        (block,) for a single point, (N, block) otherwise, in design-vector
        block order (mu, sigma, angles).
    """
    covariance_inverse(field)
    pts, single = _as_points(x, field.dim)
    d, local = _local_coordinates(field, pts)
    R = rotation_matrix(field.angles)
    inv_s2 = 1.0 / field.sigma**2

    phi = np.exp(-0.5 * np.sum(local**2 * inv_s2, axis=1))

    # d phi / d mu = phi * Sigma^-1 d
    d_mu = phi[:, None] * ((local * inv_s2) @ R.T)
    # d phi / d sigma_k = phi * (R^T d)_k^2 / sigma_k^3
    d_sigma = phi[:, None] * local**2 / field.sigma**3
    # d phi / d angle = -phi * (dR^T d) . S^-2 (R^T d)
    d_angles = np.column_stack([
        -phi * np.sum((d @ dR) * local * inv_s2, axis=1)
        for dR in rotation_derivatives(field.angles)
    ])

    grad = np.hstack([d_mu, d_sigma, d_angles])
    return grad[0] if single else grad


# =============================================================================
# Ensemble bookkeeping
# =============================================================================

def active_mask(ensemble: Sequence[GaussianField]) -> np.ndarray:
    return np.array([f.active for f in ensemble], dtype=bool)


def deactivate_degenerate(
    ensemble: Sequence[GaussianField],
    h: float,
) -> Tuple[List[GaussianField], int]:
    """
    Deactivate every active field whose smallest sigma dropped below h/2.

    The threshold is strict (sigma == h/2 stays active) and applies to every
    axis, so 3D fields also retire on a thin sigma_z. Deactivation is never
    undone here.

    Returns:
        (new ensemble, number of fields deactivated by this call)
    """
    if h <= 0:
        raise ValueError(f"element edge length must be positive, got {h}")

    updated: List[GaussianField] = []
    count = 0
    for f in ensemble:
        if f.active and np.min(f.sigma) < 0.5 * h:
            updated.append(replace(f, active=False))
            count += 1
        else:
            updated.append(f)

    if count:
        logger.info(f"Deactivated {count} degenerate field(s) (h={h:.4g})")
    return updated, count


def pack(ensemble: Sequence[GaussianField]) -> np.ndarray:
    """Flatten an ensemble into its design vector (active flags not included)."""
    if not ensemble:
        return np.zeros(0)
    return np.concatenate([f.as_vector() for f in ensemble])


def unpack(
    vector,
    dim: int,
    n: int,
    active: Optional[Sequence[bool]] = None,
) -> List[GaussianField]:
    """
    Rebuild an ensemble from a design vector.

    Args:
        vector: Flat parameters, length n * block_size(dim)
        dim: 2 or 3
        n: Number of fields
        active: Optional per-field active flags (default all active)

    Raises:
        ShapeError: On any length mismatch
    """
    vec = np.asarray(vector, dtype=float).ravel()
    size = block_size(dim)
    if vec.size != n * size:
        raise ShapeError(f"design vector has {vec.size} entries, expected {n} x {size}")
    if active is None:
        active = [True] * n
    elif len(active) != n:
        raise ShapeError(f"got {len(active)} active flags for {n} fields")

    blocks = vec.reshape(n, size)
    return [
        GaussianField(
            mu=b[:dim],
            sigma=b[dim:2 * dim],
            angles=b[2 * dim:],
            active=bool(flag),
        )
        for b, flag in zip(blocks, active)
    ]


def reflect_field(field: GaussianField, axis: int, coordinate: float) -> GaussianField:
    """
    Mirror a field across the plane x[axis] = coordinate.

    In 2D the orientation angle flips sign. In 3D the reflected rotation
    M R N (M the mirror, N a diagonal sign matrix with det -1) is proper and
    produces the same covariance; its Euler angles are recovered in closed form.
    """
    mu = field.mu.copy()
    mu[axis] = 2.0 * coordinate - mu[axis]

    if field.dim == 2:
        angles = -field.angles
    else:
        M = np.eye(3)
        M[axis, axis] = -1.0
        N = np.diag([1.0, 1.0, -1.0])
        angles = euler_angles_from_rotation(M @ rotation_matrix(field.angles) @ N)

    return GaussianField(mu=mu, sigma=field.sigma.copy(), angles=angles, active=field.active)
