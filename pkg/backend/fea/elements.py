# backend/fea/elements.py
"""
Isoparametric Q4 / Hex8 element matrices for isotropic linear elasticity.

One reference stiffness k0 serves the whole structured mesh: every element
is the same rectangle (box), so K = sum_e rho_e k0 scattered by connectivity.
Strain ordering is (xx, yy, xy) in 2D and (xx, yy, zz, xy, yz, zx) in 3D with
engineering shear strains.
"""

from dataclasses import asdict, dataclass
from typing import Any, Dict

import numpy as np

from config import PLANE_STRESS, POISSON_RATIO, QUADRATURE_ORDER, YOUNGS_MODULUS
from errors import ShapeError
from fea.mesh import StructuredMesh

_Q4_NATURAL = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
_HEX8_NATURAL = np.array([
    [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
    [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
], dtype=float)


@dataclass(frozen=True)
class MaterialModel:
    """Isotropic solid; plane_stress only matters in 2D."""

    youngs_modulus: float = YOUNGS_MODULUS
    poisson_ratio: float = POISSON_RATIO
    plane_stress: bool = PLANE_STRESS

    def __post_init__(self):
        if not self.youngs_modulus > 0:
            raise ValueError(f"youngs_modulus must be positive, got {self.youngs_modulus}")
        if not 0 <= self.poisson_ratio < 0.5:
            raise ValueError(f"poisson_ratio must lie in [0, 0.5), got {self.poisson_ratio}")

    def elasticity_matrix(self, dim: int) -> np.ndarray:
        """Constitutive matrix D (3x3 in 2D, 6x6 in 3D)."""
        E, nu = self.youngs_modulus, self.poisson_ratio
        if dim == 2:
            if self.plane_stress:
                return E / (1 - nu**2) * np.array([
                    [1, nu, 0],
                    [nu, 1, 0],
                    [0, 0, (1 - nu) / 2],
                ])
            return E / ((1 + nu) * (1 - 2 * nu)) * np.array([
                [1 - nu, nu, 0],
                [nu, 1 - nu, 0],
                [0, 0, (1 - 2 * nu) / 2],
            ])
        if dim == 3:
            lam = E * nu / ((1 + nu) * (1 - 2 * nu))
            G = E / (2 * (1 + nu))
            D = np.zeros((6, 6))
            D[:3, :3] = lam
            D[np.arange(3), np.arange(3)] += 2 * G
            D[np.arange(3, 6), np.arange(3, 6)] = G
            return D
        raise ShapeError(f"dim must be 2 or 3, got {dim}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def natural_node_coordinates(dim: int) -> np.ndarray:
    return _Q4_NATURAL if dim == 2 else _HEX8_NATURAL


def shape_function_gradients(xi: np.ndarray) -> np.ndarray:
    """
    dN_a/dxi_k at natural point xi for the bilinear/trilinear element.

    Returns:
        (nodes_per_element, dim) array
    """
    xi = np.asarray(xi, dtype=float)
    nodes = natural_node_coordinates(xi.size)
    factors = 1.0 + nodes * xi  # (npe, dim)
    scale = 0.5 ** xi.size
    grads = np.empty_like(nodes)
    for k in range(xi.size):
        others = np.prod(np.delete(factors, k, axis=1), axis=1)
        grads[:, k] = scale * nodes[:, k] * others
    return grads


def strain_displacement(mesh: StructuredMesh, xi) -> np.ndarray:
    """B matrix of the reference element at natural point xi."""
    dim = mesh.dim
    # Rectangular cells: d/dx = (2 / size) d/dxi
    dN = shape_function_gradients(np.asarray(xi, dtype=float)) * (2.0 / mesh.element_size)
    npe = dN.shape[0]

    if dim == 2:
        B = np.zeros((3, 2 * npe))
        B[0, 0::2] = dN[:, 0]
        B[1, 1::2] = dN[:, 1]
        B[2, 0::2] = dN[:, 1]
        B[2, 1::2] = dN[:, 0]
        return B

    B = np.zeros((6, 3 * npe))
    B[0, 0::3] = dN[:, 0]
    B[1, 1::3] = dN[:, 1]
    B[2, 2::3] = dN[:, 2]
    B[3, 0::3] = dN[:, 1]
    B[3, 1::3] = dN[:, 0]
    B[4, 1::3] = dN[:, 2]
    B[4, 2::3] = dN[:, 1]
    B[5, 0::3] = dN[:, 2]
    B[5, 2::3] = dN[:, 0]
    return B


def element_stiffness(
    mesh: StructuredMesh,
    material: MaterialModel,
    quadrature_order: int = QUADRATURE_ORDER,
) -> np.ndarray:
    """
    Reference element stiffness k0 (8x8 for Q4, 24x24 for Hex8).

    Gauss-Legendre quadrature with `quadrature_order` points per axis; unit
    thickness in 2D.
    """
    dim = mesh.dim
    D = material.elasticity_matrix(dim)
    points, weights = np.polynomial.legendre.leggauss(quadrature_order)
    det_j = float(np.prod(mesh.element_size / 2.0))

    grids = np.meshgrid(*([points] * dim), indexing="ij")
    wgrids = np.meshgrid(*([weights] * dim), indexing="ij")
    xis = np.column_stack([g.ravel() for g in grids])
    ws = np.prod(np.column_stack([w.ravel() for w in wgrids]), axis=1)

    nd = dim * mesh.nodes_per_element
    ke = np.zeros((nd, nd))
    for xi, w in zip(xis, ws):
        B = strain_displacement(mesh, xi)
        ke += w * det_j * (B.T @ D @ B)
    return 0.5 * (ke + ke.T)
