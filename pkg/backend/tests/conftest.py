# backend/tests/conftest.py
"""
Shared test fixtures for all backend tests.

Includes:
- Small meshes and the default material
- Projection parameters
- Test problem factories (tiny cantilever, tiny inverter)
- Gaussian ensemble factories
"""

import math
import os
import sys
from typing import List, Optional, Sequence

import numpy as np
import pytest

# Ensure backend is importable
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from fea.elements import MaterialModel, element_stiffness
from fea.mesh import StructuredMesh
from geometry.gaussians import GaussianField
from numeric.projection import ProjectionParams
from problems.context import build_context
from problems.definitions import (
    InitialLayoutSpec,
    OutputPort,
    PointLoad,
    ProblemDefinition,
    Spring,
    Support,
    SymmetryPlane,
)


# =============================================================================
# Mesh Fixtures
# =============================================================================

@pytest.fixture
def mesh2d() -> StructuredMesh:
    """4x2 Q4 grid on [0, 2] x [0, 1]."""
    return StructuredMesh((4, 2), (2.0, 1.0))


@pytest.fixture
def mesh3d() -> StructuredMesh:
    """2x2x2 Hex8 grid on the unit cube."""
    return StructuredMesh((2, 2, 2), (1.0, 1.0, 1.0))


@pytest.fixture
def material() -> MaterialModel:
    return MaterialModel()


@pytest.fixture
def ke2d(mesh2d, material) -> np.ndarray:
    return element_stiffness(mesh2d, material)


@pytest.fixture
def params() -> ProjectionParams:
    """Default projection: T = 0.5, eps = 0.02, alpha = 1e-3."""
    return ProjectionParams()


@pytest.fixture
def wide_params() -> ProjectionParams:
    """Wide band so finite differences see a smooth response."""
    return ProjectionParams(threshold=0.5, epsilon=0.3)


# =============================================================================
# Problem Fixtures
# =============================================================================

@pytest.fixture
def problem_factory():
    """
    Factory fixture for small problems that solve in milliseconds.

    Usage:
        problem = problem_factory.cantilever(resolution=(20, 10))
        context = problem_factory.context(problem)
    """
    class ProblemFactory:
        @staticmethod
        def cantilever(
            resolution: Sequence[int] = (20, 10),
            grid: Sequence[int] = (2, 2),
            volume_bound: float = 0.4,
        ) -> ProblemDefinition:
            """Left edge clamped, unit downward load at the right mid-height."""
            return ProblemDefinition(
                name="tiny_cantilever",
                extents=(2.0, 1.0),
                resolution=tuple(resolution),
                layout=InitialLayoutSpec(grid=tuple(grid)),
                volume_bound=volume_bound,
                loads=[PointLoad(point=(2.0, 0.5), force=(0.0, -1.0))],
                supports=[Support(lo=(0.0, 0.0), hi=(0.0, 1.0))],
            )

        @staticmethod
        def mbb(resolution: Sequence[int] = (24, 8), reduce: bool = False) -> ProblemDefinition:
            """Simply supported beam, centre load on top, mirror plane at x = 1.5."""
            return ProblemDefinition(
                name="tiny_mbb",
                extents=(3.0, 1.0),
                resolution=tuple(resolution),
                layout=InitialLayoutSpec(grid=(6, 2)),
                volume_bound=0.45,
                loads=[PointLoad(point=(1.5, 1.0), force=(0.0, -1.0))],
                supports=[
                    Support(lo=(0.0, 0.0), hi=(0.0, 0.0)),
                    Support(lo=(3.0, 0.0), hi=(3.0, 0.0), components=(1,)),
                ],
                symmetry_planes=[SymmetryPlane(axis=0, coordinate=1.5)],
                reduce_symmetry=reduce,
            )

        @staticmethod
        def inverter(resolution: Sequence[int] = (20, 20)) -> ProblemDefinition:
            """Force inverter on the full square (no reduction)."""
            return ProblemDefinition(
                name="tiny_inverter",
                extents=(1.0, 1.0),
                resolution=tuple(resolution),
                layout=InitialLayoutSpec(grid=(2, 2)),
                objective="mpe",
                volume_bound=0.3,
                loads=[PointLoad(point=(0.0, 0.5), force=(1.0, 0.0))],
                supports=[
                    Support(lo=(0.0, 0.0), hi=(0.0, 0.1)),
                    Support(lo=(0.0, 0.9), hi=(0.0, 1.0)),
                ],
                springs=[
                    Spring(point=(0.0, 0.5), axis=0, stiffness=0.1),
                    Spring(point=(1.0, 0.5), axis=0, stiffness=0.1),
                ],
                output_port=OutputPort(point=(1.0, 0.5), direction=(-1.0, 0.0)),
            )

        @staticmethod
        def context(problem: ProblemDefinition, reduce: bool = True):
            return build_context(problem, reduce=reduce)

    return ProblemFactory


# =============================================================================
# Ensemble Fixtures
# =============================================================================

@pytest.fixture
def ensemble_factory():
    """
    Factory fixture for Gaussian ensembles.

    Usage:
        fields = ensemble_factory.random(n=6, extents=(2.0, 1.0), seed=3)
        pair = ensemble_factory.crossed_pair(0.6, 0.2, center=(1.0, 0.5))
    """
    class EnsembleFactory:
        @staticmethod
        def random(
            n: int = 4,
            extents: Sequence[float] = (2.0, 1.0),
            seed: int = 0,
            sigma_range: Sequence[float] = (0.15, 0.5),
        ) -> List[GaussianField]:
            rng = np.random.default_rng(seed)
            extents = np.asarray(extents, dtype=float)
            dim = extents.size
            n_angles = 1 if dim == 2 else 3
            return [
                GaussianField(
                    mu=rng.uniform(0.2, 0.8, dim) * extents,
                    sigma=rng.uniform(*sigma_range, dim),
                    angles=rng.uniform(-math.pi, math.pi, n_angles),
                )
                for _ in range(n)
            ]

        @staticmethod
        def crossed_pair(
            sigma_major: float,
            sigma_minor: float,
            center: Optional[Sequence[float]] = None,
        ) -> List[GaussianField]:
            center = list(center) if center is not None else [0.0, 0.0]
            return [
                GaussianField(mu=center, sigma=[sigma_major, sigma_minor], angles=[a])
                for a in (math.pi / 4, -math.pi / 4)
            ]

    return EnsembleFactory
