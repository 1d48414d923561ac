# backend/fea/mesh.py
"""
Regular Q4 (2D) / Hex8 (3D) grids.

Numbering is x-fastest for both nodes and elements:
    node    = i + (nx + 1) * (j + (ny + 1) * k)
    element = ex + nx * (ey + ny * ez)

Element nodes run counter-clockwise on the bottom face, then the top face in
3D. Element dofs are node-major: [n0x, n0y(, n0z), n1x, ...].
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from errors import ShapeError

# Corner offsets (i, j[, k]) in element-local node order
_Q4_OFFSETS = np.array([[0, 0], [1, 0], [1, 1], [0, 1]])
_HEX8_OFFSETS = np.array([
    [0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
    [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1],
])


@dataclass(eq=False)
class StructuredMesh:
    """Uniform grid of `resolution` elements spanning `extents` from `origin`."""

    resolution: Tuple[int, ...]
    extents: Tuple[float, ...]
    origin: Optional[Tuple[float, ...]] = field(default=None)

    def __post_init__(self):
        self.resolution = tuple(int(n) for n in self.resolution)
        self.extents = tuple(float(L) for L in self.extents)
        if len(self.resolution) not in (2, 3) or len(self.extents) != len(self.resolution):
            raise ShapeError(
                f"resolution {self.resolution} and extents {self.extents} must both be 2D or 3D"
            )
        if any(n < 1 for n in self.resolution):
            raise ShapeError(f"resolution must be positive, got {self.resolution}")
        if any(not L > 0 for L in self.extents):
            raise ShapeError(f"extents must be positive, got {self.extents}")
        if self.origin is None:
            self.origin = tuple(0.0 for _ in self.extents)
        self.origin = tuple(float(o) for o in self.origin)

    # ------------------------------------------------------------------
    # Sizes
    # ------------------------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.resolution)

    @property
    def nodes_per_element(self) -> int:
        return 4 if self.dim == 2 else 8

    @property
    def node_shape(self) -> Tuple[int, ...]:
        return tuple(n + 1 for n in self.resolution)

    @property
    def n_elements(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.node_shape))

    @property
    def n_dofs(self) -> int:
        return self.dim * self.n_nodes

    @cached_property
    def element_size(self) -> np.ndarray:
        return np.array(self.extents) / np.array(self.resolution)

    @property
    def h(self) -> float:
        """Element edge length (smallest edge for non-cubic cells)."""
        return float(np.min(self.element_size))

    @property
    def element_volume(self) -> float:
        return float(np.prod(self.element_size))

    @property
    def domain_volume(self) -> float:
        return float(np.prod(self.extents))

    def with_resolution(self, resolution: Sequence[int]) -> "StructuredMesh":
        """Same physical domain, different grid."""
        return StructuredMesh(tuple(resolution), self.extents, self.origin)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "resolution": list(self.resolution),
            "extents": list(self.extents),
            "origin": list(self.origin),
        }

    # ------------------------------------------------------------------
    # Topology
    # ------------------------------------------------------------------

    def node_index(self, *ijk: int) -> int:
        if len(ijk) != self.dim:
            raise ShapeError(f"expected {self.dim} grid indices, got {len(ijk)}")
        index, stride = 0, 1
        for i, n in zip(ijk, self.node_shape):
            index += int(i) * stride
            stride *= n
        return index

    @cached_property
    def element_grid_index(self) -> np.ndarray:
        """(n_elements, dim) integer element positions."""
        e = np.arange(self.n_elements)
        cols = []
        for n in self.resolution:
            cols.append(e % n)
            e = e // n
        return np.column_stack(cols)

    @cached_property
    def connectivity(self) -> np.ndarray:
        """(n_elements, nodes_per_element) node indices."""
        offsets = _Q4_OFFSETS if self.dim == 2 else _HEX8_OFFSETS
        corner = self.element_grid_index[:, None, :] + offsets[None, :, :]
        strides = np.cumprod((1,) + self.node_shape[:-1])
        return corner @ strides

    @cached_property
    def edof(self) -> np.ndarray:
        """(n_elements, nodes_per_element * dim) global dof indices."""
        conn = self.connectivity
        dofs = self.dim * conn[:, :, None] + np.arange(self.dim)[None, None, :]
        return dofs.reshape(self.n_elements, -1)

    @cached_property
    def stiffness_pattern(self) -> Tuple[np.ndarray, np.ndarray]:
        """Row/column index arrays matching ke.ravel() for every element."""
        nd = self.edof.shape[1]
        rows = np.repeat(self.edof, nd, axis=1).ravel()
        cols = np.tile(self.edof, (1, nd)).ravel()
        return rows, cols

    # ------------------------------------------------------------------
    # Coordinates
    # ------------------------------------------------------------------

    @cached_property
    def _node_grid_index(self) -> np.ndarray:
        idx = np.arange(self.n_nodes)
        cols = []
        for n in self.node_shape:
            cols.append(idx % n)
            idx = idx // n
        return np.column_stack(cols)

    @cached_property
    def _coordinates(self) -> np.ndarray:
        return np.array(self.origin) + self._node_grid_index * self.element_size

    def node_coordinates(self) -> np.ndarray:
        """(n_nodes, dim) physical node positions (shared, do not mutate)."""
        return self._coordinates

    def element_centroids(self) -> np.ndarray:
        return np.array(self.origin) + (self.element_grid_index + 0.5) * self.element_size

    def axis_coordinates(self, axis: int) -> np.ndarray:
        """Node coordinates along one axis (length resolution[axis] + 1)."""
        return self.origin[axis] + np.arange(self.node_shape[axis]) * self.element_size[axis]

    def node_grid(self, values: np.ndarray) -> np.ndarray:
        """Reshape per-node values to [y, x] (2D) or [z, y, x] (3D)."""
        return np.asarray(values).reshape(self.node_shape[::-1])

    def element_grid(self, values: np.ndarray) -> np.ndarray:
        """Reshape per-element values to [y, x] (2D) or [z, y, x] (3D)."""
        return np.asarray(values).reshape(self.resolution[::-1])

    # ------------------------------------------------------------------
    # Lookups
    # ------------------------------------------------------------------

    def _tolerance(self) -> float:
        return 1e-9 * max(self.extents)

    def nodes_in_box(self, lo: Sequence[float], hi: Sequence[float]) -> np.ndarray:
        """Indices of nodes with lo <= x <= hi (inclusive, with round-off slack)."""
        tol = self._tolerance()
        coords = self.node_coordinates()
        inside = np.all(
            (coords >= np.asarray(lo, dtype=float) - tol)
            & (coords <= np.asarray(hi, dtype=float) + tol),
            axis=1,
        )
        return np.nonzero(inside)[0]

    def nearest_node(self, point: Sequence[float]) -> Tuple[int, float]:
        """(node index, distance) of the grid node closest to `point`."""
        p = np.asarray(point, dtype=float)
        ijk = np.rint((p - np.array(self.origin)) / self.element_size).astype(int)
        ijk = np.clip(ijk, 0, np.array(self.resolution))
        node = self.node_index(*ijk)
        distance = float(np.linalg.norm(self.node_coordinates()[node] - p))
        return node, distance

    def node_on_grid(self, point: Sequence[float]) -> Optional[int]:
        """Node index if `point` coincides with a grid node, else None."""
        node, distance = self.nearest_node(point)
        return node if distance <= self._tolerance() else None

    def elements_in_box(self, lo: Sequence[float], hi: Sequence[float]) -> np.ndarray:
        """Indices of elements whose centroid lies in the closed box."""
        tol = self._tolerance()
        c = self.element_centroids()
        inside = np.all(
            (c >= np.asarray(lo, dtype=float) - tol) & (c <= np.asarray(hi, dtype=float) + tol),
            axis=1,
        )
        return np.nonzero(inside)[0]
