# backend/fea/stress.py
"""Element-centre von Mises stress for post-processing exports."""

import numpy as np

from fea.elements import MaterialModel, strain_displacement
from fea.mesh import StructuredMesh


def von_mises_field(
    u: np.ndarray,
    densities: np.ndarray,
    mesh: StructuredMesh,
    material: MaterialModel,
) -> np.ndarray:
    """
    Per-element von Mises stress at the centroid, scaled by element density.

    2D uses the plane stress (or plane strain) in-plane components; 3D uses
    the full tensor.
    """
    B = strain_displacement(mesh, np.zeros(mesh.dim))
    D = material.elasticity_matrix(mesh.dim)
    strain = np.asarray(u, dtype=float)[mesh.edof] @ B.T
    stress = (strain @ D.T) * np.asarray(densities, dtype=float)[:, None]

    if mesh.dim == 2:
        sx, sy, txy = stress.T
        return np.sqrt(np.maximum(sx**2 - sx * sy + sy**2 + 3 * txy**2, 0.0))

    sx, sy, sz, txy, tyz, tzx = stress.T
    vm2 = 0.5 * ((sx - sy) ** 2 + (sy - sz) ** 2 + (sz - sx) ** 2) + 3 * (txy**2 + tyz**2 + tzx**2)
    return np.sqrt(np.maximum(vm2, 0.0))
