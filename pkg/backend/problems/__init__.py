# backend/problems/__init__.py
"""
Problem definitions and their resolution onto meshes.

Supports:
- Declarative benchmark problems (2D and 3D)
- Initial X-pattern layouts
- Frozen solid/void regions
- Symmetry reduction with full-domain reconstruction
"""

from .benchmarks import BENCHMARK_NAMES, build_benchmark
from .context import ProblemContext, build_context
from .definitions import InitialLayoutSpec, ProblemDefinition
from .layout import generate_layout
from .nondesign import ResolvedRegions, apply_nondesign, resolve_regions
from .symmetry import ReconstructionMap, prepare_problem, symmetry_reduce

__all__ = [
    "BENCHMARK_NAMES",
    "build_benchmark",
    "ProblemContext",
    "build_context",
    "InitialLayoutSpec",
    "ProblemDefinition",
    "generate_layout",
    "ResolvedRegions",
    "apply_nondesign",
    "resolve_regions",
    "ReconstructionMap",
    "prepare_problem",
    "symmetry_reduce",
]
