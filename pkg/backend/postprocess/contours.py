# backend/postprocess/contours.py
"""
Marching squares on a nodal TDF grid.

Points with value >= T are solid. Every segment is emitted with the solid on
its left, so outer boundaries come out counter-clockwise and holes
clockwise. The grid is padded with a ring below T first, which closes every
contour along the domain boundary.

Cell corners run counter-clockwise from the lower-left node:

    c3 ---e2--- c2
    |           |
    e3          e1
    |           |
    c0 ---e0--- c1

Edge k goes from corner k to corner k+1. A segment starts on the edge where
the walk leaves the solid and ends on the edge where it re-enters.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from fea.mesh import StructuredMesh
from geometry.gaussians import GaussianField, eval_tdf

logger = logging.getLogger(__name__)

EdgeKey = Tuple[int, int, int]  # (0 horizontal | 1 vertical, i, j)


@dataclass
class Contour:
    """Closed polyline (first point repeated last) at iso-level `level`."""

    points: np.ndarray
    level: float

    @property
    def n_points(self) -> int:
        """Distinct vertices (closing point not counted)."""
        return len(self.points) - 1

    @property
    def signed_area(self) -> float:
        x, y = self.points[:, 0], self.points[:, 1]
        return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))

    @property
    def is_counterclockwise(self) -> bool:
        return self.signed_area > 0

    @property
    def length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.points, axis=0), axis=1)))


def _edge_keys(i: int, j: int) -> Tuple[EdgeKey, EdgeKey, EdgeKey, EdgeKey]:
    return (0, i, j), (1, i + 1, j), (0, i, j + 1), (1, i, j)


def _edge_point(
    key: EdgeKey,
    grid: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    level: float,
) -> Tuple[float, float]:
    kind, i, j = key
    if kind == 0:
        a, b = grid[j, i], grid[j, i + 1]
        t = (level - a) / (b - a)
        return float(xs[i] + t * (xs[i + 1] - xs[i])), float(ys[j])
    a, b = grid[j, i], grid[j + 1, i]
    t = (level - a) / (b - a)
    return float(xs[i]), float(ys[j] + t * (ys[j + 1] - ys[j]))


def _dedupe(points: List[Tuple[float, float]]) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(np.diff(pts, axis=0) != 0, axis=1)
    pts = pts[keep]
    while len(pts) > 1 and np.all(pts[0] == pts[-1]):
        pts = pts[:-1]
    return pts


def extract_contours(
    grid: np.ndarray,
    level: float,
    x_coords: Optional[Sequence[float]] = None,
    y_coords: Optional[Sequence[float]] = None,
    center_values: Optional[np.ndarray] = None,
) -> List[Contour]:
    """
    All closed level curves of a node grid.

    Args:
        grid: Values indexed [y, x] (shape (ny + 1, nx + 1))
        level: Iso-level T
        x_coords, y_coords: Node coordinates per axis (default: indices)
        center_values: Optional (ny, nx) values at cell centres used to
            resolve saddle cells (default: mean of the four corners)

    Returns:
        Contours with at least 4 distinct points, empty when T is outside
        the grid's range
    """
    values = np.asarray(grid, dtype=float)
    ny1, nx1 = values.shape
    xs = np.arange(nx1, dtype=float) if x_coords is None else np.asarray(x_coords, dtype=float)
    ys = np.arange(ny1, dtype=float) if y_coords is None else np.asarray(y_coords, dtype=float)
    if xs.size != nx1 or ys.size != ny1:
        raise ValueError("coordinate arrays do not match the grid shape")
    if values.size == 0 or not np.any(values >= level):
        return []

    pad_value = min(float(values.min()), level) - 1.0
    padded = np.pad(values, 1, constant_values=pad_value)
    pxs = np.concatenate([[xs[0]], xs, [xs[-1]]])
    pys = np.concatenate([[ys[0]], ys, [ys[-1]]])

    centers = 0.25 * (padded[:-1, :-1] + padded[:-1, 1:] + padded[1:, 1:] + padded[1:, :-1])
    if center_values is not None:
        centers[1:-1, 1:-1] = np.asarray(center_values, dtype=float)

    inside = padded >= level
    # corner bits: c0 (j, i), c1 (j, i+1), c2 (j+1, i+1), c3 (j+1, i)
    case = (
        inside[:-1, :-1].astype(int)
        | (inside[:-1, 1:].astype(int) << 1)
        | (inside[1:, 1:].astype(int) << 2)
        | (inside[1:, :-1].astype(int) << 3)
    )
    cells = np.argwhere((case != 0) & (case != 15))

    successor: Dict[EdgeKey, EdgeKey] = {}
    for j, i in cells:
        bits = int(case[j, i])
        corner_in = [(bits >> k) & 1 for k in range(4)]
        keys = _edge_keys(int(i), int(j))
        exits = [k for k in range(4) if corner_in[k] and not corner_in[(k + 1) % 4]]
        entries = [k for k in range(4) if not corner_in[k] and corner_in[(k + 1) % 4]]

        if len(exits) == 1:
            successor[keys[exits[0]]] = keys[entries[0]]
            continue

        # saddle: connect through the centre if it is solid, else separate
        step = 1 if centers[j, i] >= level else -1
        for k in exits:
            successor[keys[k]] = keys[(k + step) % 4]

    contours: List[Contour] = []
    visited = set()
    for start in sorted(successor):
        if start in visited:
            continue
        loop: List[Tuple[float, float]] = []
        key = start
        while key not in visited:
            visited.add(key)
            loop.append(_edge_point(key, padded, pxs, pys, level))
            key = successor[key]
        pts = _dedupe(loop)
        if len(pts) < 4:
            continue
        contours.append(Contour(points=np.vstack([pts, pts[:1]]), level=float(level)))

    logger.debug(f"Extracted {len(contours)} contour(s) at T={level}")
    return contours


def contours_from_mesh(
    nodal_tdf: np.ndarray,
    mesh: StructuredMesh,
    level: float,
    ensemble: Optional[Sequence[GaussianField]] = None,
) -> List[Contour]:
    """
    Contours of nodal TDF values on a 2D mesh.

    When the ensemble is given, saddle cells are resolved with the exact TDF
    at the cell centre.
    """
    if mesh.dim != 2:
        raise ValueError("contour extraction is 2D only")
    centers = None
    if ensemble is not None:
        centers = mesh.element_grid(eval_tdf(ensemble, mesh.element_centroids()))
    return extract_contours(
        mesh.node_grid(nodal_tdf),
        level,
        mesh.axis_coordinates(0),
        mesh.axis_coordinates(1),
        centers,
    )
