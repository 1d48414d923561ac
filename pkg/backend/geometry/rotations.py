# backend/geometry/rotations.py
"""
Rotation matrices for 2D and 3D Gaussian fields and their angle derivatives.

2D uses a single angle theta:

    R = [[cos t, -sin t],
         [sin t,  cos t]]

3D uses the Euler triple (alpha, beta, gamma) in the row layout below
(c = cos, s = sin):

    R = [[ cb*cg,              cb*sg,             -sb   ],
         [ sa*sb*cg - ca*sg,   sa*sb*sg + ca*cg,   sa*cb],
         [ ca*sb*cg + sa*sg,   ca*sb*sg - sa*cg,   ca*cb]]

Angles are plain reals; nothing here wraps them.
"""

from typing import List

import numpy as np

from errors import ShapeError


def _as_angles(angles) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(angles, dtype=float))
    if arr.shape not in ((1,), (3,)):
        raise ShapeError(f"expected 1 (2D) or 3 (3D) angles, got shape {arr.shape}")
    return arr


def rotation_matrix(angles) -> np.ndarray:
    """Return the 2x2 or 3x3 rotation matrix for one angle or an Euler triple."""
    a = _as_angles(angles)
    if a.size == 1:
        c, s = np.cos(a[0]), np.sin(a[0])
        return np.array([[c, -s], [s, c]])

    ca, cb, cg = np.cos(a)
    sa, sb, sg = np.sin(a)
    return np.array([
        [cb * cg, cb * sg, -sb],
        [sa * sb * cg - ca * sg, sa * sb * sg + ca * cg, sa * cb],
        [ca * sb * cg + sa * sg, ca * sb * sg - sa * cg, ca * cb],
    ])


def rotation_derivatives(angles) -> List[np.ndarray]:
    """
    Derivatives of rotation_matrix with respect to each angle.

    Returns a list with one matrix in 2D (dR/dtheta) and three in 3D
    (dR/dalpha, dR/dbeta, dR/dgamma), in design-vector order.
    """
    a = _as_angles(angles)
    if a.size == 1:
        c, s = np.cos(a[0]), np.sin(a[0])
        return [np.array([[-s, -c], [c, -s]])]

    ca, cb, cg = np.cos(a)
    sa, sb, sg = np.sin(a)

    d_alpha = np.array([
        [0.0, 0.0, 0.0],
        [ca * sb * cg + sa * sg, ca * sb * sg - sa * cg, ca * cb],
        [-sa * sb * cg + ca * sg, -sa * sb * sg - ca * cg, -sa * cb],
    ])
    d_beta = np.array([
        [-sb * cg, -sb * sg, -cb],
        [sa * cb * cg, sa * cb * sg, -sa * sb],
        [ca * cb * cg, ca * cb * sg, -ca * sb],
    ])
    d_gamma = np.array([
        [-cb * sg, cb * cg, 0.0],
        [-sa * sb * sg - ca * cg, sa * sb * cg - ca * sg, 0.0],
        [-ca * sb * sg + sa * cg, ca * sb * cg + sa * sg, 0.0],
    ])
    return [d_alpha, d_beta, d_gamma]


def euler_angles_from_rotation(R: np.ndarray) -> np.ndarray:
    """
    Recover (alpha, beta, gamma) from a proper 3x3 rotation in the layout above.

    At gimbal lock (|cos beta| ~ 0) alpha is pinned to 0 and gamma absorbs the
    remaining rotation.
    """
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3):
        raise ShapeError(f"expected a 3x3 rotation, got shape {R.shape}")

    beta = -np.arcsin(np.clip(R[0, 2], -1.0, 1.0))
    if abs(np.cos(beta)) > 1e-12:
        alpha = np.arctan2(R[1, 2], R[2, 2])
        gamma = np.arctan2(R[0, 1], R[0, 0])
    else:
        alpha = 0.0
        gamma = np.arctan2(-R[1, 0], R[1, 1])
    return np.array([alpha, beta, gamma])
