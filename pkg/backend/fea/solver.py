# backend/fea/solver.py
"""
Global stiffness assembly and linear solves on a structured mesh.

K = sum_e rho_e k0 (scattered) + diag(springs). Dirichlet dofs are eliminated
(rows and columns removed, prescribed values moved to the right-hand side).

Two solve paths satisfy the same residual contract:
- direct: assembled CSR matrix, sparse LU via scipy.sparse.linalg.factorized
  (one factorization shared by every right-hand side)
- cg: matrix-free operator with a Jacobi preconditioner, warm-started from the
  previous displacement when one is supplied (large 3D meshes)
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from config import (
    CG_MAX_ITERS,
    CG_TOLERANCE,
    DIRECT_SOLVER_MAX_DOFS_2D,
    DIRECT_SOLVER_MAX_DOFS_3D,
    MPE_AGREEMENT_TOL,
)
from errors import DefinitionError, ShapeError, SingularSystemError
from fea.mesh import StructuredMesh

logger = logging.getLogger(__name__)


@dataclass
class LoadCase:
    """Nodal forces, Dirichlet set, and lumped springs for one solve."""

    force: np.ndarray
    fixed_dofs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    fixed_values: Optional[np.ndarray] = None
    springs: List[Tuple[int, float]] = field(default_factory=list)

    def __post_init__(self):
        self.force = np.asarray(self.force, dtype=float).ravel()
        self.fixed_dofs = np.asarray(self.fixed_dofs, dtype=int).ravel()
        if self.fixed_values is None:
            self.fixed_values = np.zeros(self.fixed_dofs.size)
        self.fixed_values = np.asarray(self.fixed_values, dtype=float).ravel()

        if self.fixed_values.size != self.fixed_dofs.size:
            raise ShapeError(
                f"{self.fixed_values.size} prescribed values for {self.fixed_dofs.size} fixed dofs"
            )
        if np.unique(self.fixed_dofs).size != self.fixed_dofs.size:
            raise DefinitionError("fixed dofs must be unique")
        if self.fixed_dofs.size and (
            self.fixed_dofs.min() < 0 or self.fixed_dofs.max() >= self.force.size
        ):
            raise DefinitionError("fixed dof index out of range")
        if np.any(self.force[self.fixed_dofs] != 0):
            raise DefinitionError("a dof cannot be both loaded and fixed")
        for dof, k in self.springs:
            if k < 0:
                raise DefinitionError(f"spring stiffness must be >= 0, got {k} at dof {dof}")
            if not 0 <= dof < self.force.size:
                raise DefinitionError(f"spring dof {dof} out of range")

    @property
    def n_dofs(self) -> int:
        return self.force.size

    def spring_diagonal(self) -> np.ndarray:
        diag = np.zeros(self.n_dofs)
        for dof, k in self.springs:
            diag[dof] += k
        return diag

    def with_force(self, force: np.ndarray) -> "LoadCase":
        """Same supports and springs, different load (pseudo-load cases)."""
        return LoadCase(
            force=force,
            fixed_dofs=self.fixed_dofs.copy(),
            fixed_values=np.zeros(self.fixed_dofs.size),
            springs=list(self.springs),
        )


# =============================================================================
# Rigid-body check
# =============================================================================

def rigid_body_modes(mesh: StructuredMesh) -> np.ndarray:
    """(n_dofs, 3 | 6) translations and infinitesimal rotations about the centre."""
    x = mesh.node_coordinates() - (np.array(mesh.origin) + 0.5 * np.array(mesh.extents))
    n, dim = x.shape
    if dim == 2:
        modes = np.zeros((n, 2, 3))
        modes[:, 0, 0] = 1.0
        modes[:, 1, 1] = 1.0
        modes[:, 0, 2] = -x[:, 1]
        modes[:, 1, 2] = x[:, 0]
        return modes.reshape(2 * n, 3)

    modes = np.zeros((n, 3, 6))
    for k in range(3):
        modes[:, k, k] = 1.0
    # rotations about x, y, z
    modes[:, 1, 3], modes[:, 2, 3] = -x[:, 2], x[:, 1]
    modes[:, 0, 4], modes[:, 2, 4] = x[:, 2], -x[:, 0]
    modes[:, 0, 5], modes[:, 1, 5] = -x[:, 1], x[:, 0]
    return modes.reshape(3 * n, 6)


def constraint_null_dimension(mesh: StructuredMesh, loadcase: LoadCase) -> int:
    """Number of rigid-body modes left free by the Dirichlet set and springs."""
    modes = rigid_body_modes(mesh)
    held = np.union1d(
        loadcase.fixed_dofs,
        np.array([dof for dof, k in loadcase.springs if k > 0], dtype=int),
    )
    if held.size == 0:
        return modes.shape[1]
    restricted = modes[held]
    scale = max(1.0, float(np.max(np.abs(restricted))))
    rank = np.linalg.matrix_rank(restricted / scale, tol=1e-9)
    return modes.shape[1] - int(rank)


# =============================================================================
# Stiffness system
# =============================================================================

def assemble_stiffness(
    mesh: StructuredMesh,
    densities: np.ndarray,
    ke: np.ndarray,
    spring_diagonal: Optional[np.ndarray] = None,
) -> sp.csr_matrix:
    """Assembled global stiffness (CSR), duplicates summed in a fixed order."""
    rho = np.asarray(densities, dtype=float)
    if rho.size != mesh.n_elements:
        raise ShapeError(f"got {rho.size} densities for {mesh.n_elements} elements")
    rows, cols = mesh.stiffness_pattern
    values = (rho[:, None] * ke.ravel()[None, :]).ravel()
    K = sp.coo_matrix((values, (rows, cols)), shape=(mesh.n_dofs, mesh.n_dofs)).tocsr()
    if spring_diagonal is not None and np.any(spring_diagonal):
        K = K + sp.diags(spring_diagonal, format="csr")
    return K


class StiffnessSystem:
    """
    K for one density field, usable as `K @ u` and solvable for several loads.

    Args:
        mesh: Structured mesh
        densities: Element densities (length n_elements)
        ke: Reference element stiffness
        spring_diagonal: Optional per-dof spring stiffness added to the diagonal
        method: "direct", "cg", or None to choose by mesh size
    """

    def __init__(
        self,
        mesh: StructuredMesh,
        densities: np.ndarray,
        ke: np.ndarray,
        spring_diagonal: Optional[np.ndarray] = None,
        method: Optional[str] = None,
    ):
        self.mesh = mesh
        self.densities = np.asarray(densities, dtype=float)
        if self.densities.size != mesh.n_elements:
            raise ShapeError(f"got {self.densities.size} densities for {mesh.n_elements} elements")
        self.ke = ke
        self.spring_diagonal = (
            np.zeros(mesh.n_dofs) if spring_diagonal is None else np.asarray(spring_diagonal, float)
        )
        if method is None:
            limit = DIRECT_SOLVER_MAX_DOFS_2D if mesh.dim == 2 else DIRECT_SOLVER_MAX_DOFS_3D
            method = "direct" if mesh.n_dofs <= limit else "cg"
        if method not in ("direct", "cg"):
            raise ValueError(f"unknown solver method '{method}'")
        self.method = method
        self.matrix = (
            assemble_stiffness(mesh, self.densities, ke, self.spring_diagonal)
            if method == "direct"
            else None
        )

    def matvec(self, u: np.ndarray) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix @ u
        edof = self.mesh.edof
        fe = (u[edof] @ self.ke) * self.densities[:, None]
        out = np.bincount(edof.ravel(), weights=fe.ravel(), minlength=self.mesh.n_dofs)
        return out + self.spring_diagonal * u

    def __matmul__(self, u: np.ndarray) -> np.ndarray:
        return self.matvec(np.asarray(u, dtype=float))

    def diagonal(self) -> np.ndarray:
        if self.matrix is not None:
            return self.matrix.diagonal()
        edof = self.mesh.edof
        weights = self.densities[:, None] * np.diag(self.ke)[None, :]
        diag = np.bincount(edof.ravel(), weights=weights.ravel(), minlength=self.mesh.n_dofs)
        return diag + self.spring_diagonal

    def solve(
        self,
        loadcases: Sequence[LoadCase],
        x0: Optional[Sequence[Optional[np.ndarray]]] = None,
    ) -> List[np.ndarray]:
        """
        Displacements for each load case (all must share one Dirichlet set).

        Raises:
            SingularSystemError: If the constraints leave rigid-body modes or
                the factorization/iteration breaks down
        """
        if not loadcases:
            return []
        base = loadcases[0]
        for lc in loadcases[1:]:
            if not np.array_equal(lc.fixed_dofs, base.fixed_dofs):
                raise DefinitionError("load cases solved together must share fixed dofs")
        for lc in loadcases:
            if lc.n_dofs != self.mesh.n_dofs:
                raise ShapeError(f"load vector has {lc.n_dofs} dofs, mesh has {self.mesh.n_dofs}")

        null_dim = constraint_null_dimension(self.mesh, base)
        if null_dim > 0:
            raise SingularSystemError(
                f"stiffness is singular: {null_dim} rigid-body mode(s) unconstrained",
                null_dim=null_dim,
            )

        n = self.mesh.n_dofs
        fixed = base.fixed_dofs
        free = np.setdiff1d(np.arange(n), fixed)
        guesses = list(x0) if x0 is not None else [None] * len(loadcases)

        rhs = []
        for lc in loadcases:
            u_fixed = np.zeros(n)
            u_fixed[fixed] = lc.fixed_values
            r = lc.force - (self.matvec(u_fixed) if np.any(lc.fixed_values) else 0.0)
            rhs.append((r[free], u_fixed))

        if self.method == "direct":
            solutions = self._solve_direct(free, [b for b, _ in rhs])
        else:
            solutions = self._solve_cg(free, [b for b, _ in rhs], guesses)

        out = []
        for (b, u_fixed), u_free, lc in zip(rhs, solutions, loadcases):
            u = u_fixed.copy()
            u[free] = u_free
            if not np.all(np.isfinite(u)):
                raise SingularSystemError("solver produced a non-finite displacement")
            out.append(u)
        return out

    def _solve_direct(self, free: np.ndarray, rhs: List[np.ndarray]) -> List[np.ndarray]:
        K_ff = self.matrix[free, :][:, free].tocsc()
        try:
            solve = spla.factorized(K_ff)
        except RuntimeError as exc:
            raise SingularSystemError(f"sparse factorization failed: {exc}") from exc
        return [solve(b) if np.any(b) else np.zeros_like(b) for b in rhs]

    def _solve_cg(
        self,
        free: np.ndarray,
        rhs: List[np.ndarray],
        guesses: List[Optional[np.ndarray]],
    ) -> List[np.ndarray]:
        n = self.mesh.n_dofs
        inv_diag = 1.0 / self.diagonal()[free]

        def apply(v: np.ndarray) -> np.ndarray:
            full = np.zeros(n)
            full[free] = v
            return self.matvec(full)[free]

        A = spla.LinearOperator((free.size, free.size), matvec=apply, dtype=float)
        M = spla.LinearOperator((free.size, free.size), matvec=lambda v: inv_diag * v, dtype=float)

        results = []
        for b, guess in zip(rhs, guesses):
            if not np.any(b):
                results.append(np.zeros_like(b))
                continue
            start = None if guess is None else np.asarray(guess, dtype=float)[free]
            u, info = spla.cg(A, b, x0=start, rtol=CG_TOLERANCE, atol=0.0, maxiter=CG_MAX_ITERS, M=M)
            if info < 0:
                raise SingularSystemError(f"conjugate gradient breakdown (info={info})")
            if info > 0:
                residual = np.linalg.norm(apply(u) - b) / np.linalg.norm(b)
                logger.warning(f"CG stopped after {info} iterations, relative residual {residual:.2e}")
            results.append(u)
        return results

    def reactions(self, u: np.ndarray, loadcase: LoadCase) -> np.ndarray:
        """Support reactions K u - f at the fixed dofs."""
        return (self.matvec(u) - loadcase.force)[loadcase.fixed_dofs]


def assemble_and_solve(
    mesh: StructuredMesh,
    densities: np.ndarray,
    ke: np.ndarray,
    loadcase: LoadCase,
    method: Optional[str] = None,
) -> np.ndarray:
    """Solve (sum_e rho_e k0 + springs) u = f with Dirichlet elimination."""
    system = StiffnessSystem(mesh, densities, ke, loadcase.spring_diagonal(), method=method)
    return system.solve([loadcase])[0]


# =============================================================================
# Objectives
# =============================================================================

def compliance(u: np.ndarray, f: np.ndarray) -> float:
    """C = f^T u."""
    return float(np.dot(f, u))


def mutual_potential_energy(u1: np.ndarray, u2: np.ndarray, stiffness, f2: np.ndarray) -> float:
    """
    J = f2^T u1, the output-port displacement under the input load.

    The energy form u2^T K u1 is computed as well and a warning is logged if
    the two disagree beyond MPE_AGREEMENT_TOL (relative).
    """
    j_load = float(np.dot(f2, u1))
    j_energy = float(np.dot(u2, stiffness @ u1))
    scale = max(abs(j_load), abs(j_energy), 1e-300)
    if abs(j_load - j_energy) > MPE_AGREEMENT_TOL * scale:
        logger.warning(f"Mutual energy forms disagree: f2.u1={j_load:.12g}, u2.K.u1={j_energy:.12g}")
    return j_load
