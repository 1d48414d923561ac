# backend/optimizer/__init__.py
"""
MMA-driven optimization of Gaussian ensembles.

Supports:
- Single-constraint MMA with an exact one-dimensional dual solve
- The full optimization loop with deactivation and convergence tracking
- Convergence history and per-stage timing
"""

from .history import ConvergenceHistory, StageTimer
from .loop import OptimizationResult, OptimizerSettings, design_bounds, run_optimization
from .mma import MmaSettings, MmaState, mma_update

__all__ = [
    "ConvergenceHistory",
    "StageTimer",
    "OptimizationResult",
    "OptimizerSettings",
    "design_bounds",
    "run_optimization",
    "MmaSettings",
    "MmaState",
    "mma_update",
]
