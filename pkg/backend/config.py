# backend/config.py
"""
Centralized configuration for the Gaussian ensemble topology backend.

All magic numbers, thresholds, and tunable parameters should be defined here
to improve maintainability and prevent scattered hardcoded values. Every value
can be overridden from the environment (or a `.env` file next to the backend).
"""

import math
import os
from typing import Dict, List

from dotenv import load_dotenv

load_dotenv()

# ═══════════════════════════════════════════════════════════════════════
# Projection Configuration
# ═══════════════════════════════════════════════════════════════════════

PROJECTION_THRESHOLD = float(os.getenv("GET_THRESHOLD", "0.5"))
PROJECTION_EPSILON = float(os.getenv("GET_EPSILON", "0.02"))
PROJECTION_ALPHA_FLOOR = float(os.getenv("GET_ALPHA_FLOOR", "1e-3"))

# Frozen-void density for non-design regions
RHO_VOID = float(os.getenv("GET_RHO_VOID", "1e-3"))

# Densities below this count as void in the non-discreteness diagnostic
MND_CLAMP = float(os.getenv("GET_MND_CLAMP", "0.005"))

# ═══════════════════════════════════════════════════════════════════════
# Material Configuration
# ═══════════════════════════════════════════════════════════════════════

YOUNGS_MODULUS = float(os.getenv("GET_YOUNGS_MODULUS", "1.0"))
POISSON_RATIO = float(os.getenv("GET_POISSON_RATIO", "0.3"))
PLANE_STRESS = os.getenv("GET_PLANE_STRESS", "true").lower() in ("true", "1", "yes")

# Gauss points per axis for the reference element matrix
QUADRATURE_ORDER = int(os.getenv("GET_QUADRATURE_ORDER", "2"))

# ═══════════════════════════════════════════════════════════════════════
# Geometry Configuration
# ═══════════════════════════════════════════════════════════════════════

# Field support is cut at this many standard deviations per principal axis
TRUNCATION_SIGMAS = float(os.getenv("GET_TRUNCATION_SIGMAS", "6.0"))

# Default X-pair layout (fractions of the cell diagonal)
LAYOUT_SIGMA_MAJOR_FRACTION = float(os.getenv("GET_LAYOUT_SIGMA_MAJOR", "0.45"))
LAYOUT_SIGMA_MINOR_FRACTION = float(os.getenv("GET_LAYOUT_SIGMA_MINOR", "0.12"))
LAYOUT_PAIR_ANGLES: List[float] = [math.pi / 4, -math.pi / 4]

# ═══════════════════════════════════════════════════════════════════════
# Optimizer (MMA) Configuration
# ═══════════════════════════════════════════════════════════════════════

MMA_ASY_INIT = float(os.getenv("GET_MMA_ASY_INIT", "0.5"))
MMA_ASY_INCR = float(os.getenv("GET_MMA_ASY_INCR", "1.2"))
MMA_ASY_DECR = float(os.getenv("GET_MMA_ASY_DECR", "0.7"))
MMA_MOVE_LIMIT = float(os.getenv("GET_MMA_MOVE_LIMIT", "0.1"))
MMA_ALBEFA = 0.1
MMA_RAA0 = 1e-5
MMA_A0 = 1.0
MMA_C = float(os.getenv("GET_MMA_C", "1000.0"))
MMA_D = 1.0

MAX_ITERS = int(os.getenv("GET_MAX_ITERS", "200"))
CONVERGENCE_TOL = float(os.getenv("GET_CONVERGENCE_TOL", "1e-4"))
CONVERGENCE_PATIENCE = int(os.getenv("GET_CONVERGENCE_PATIENCE", "5"))

# Variable bounds
ANGLE_BOUND = float(os.getenv("GET_ANGLE_BOUND", str(4 * math.pi)))
SIGMA_MIN_FRACTION = float(os.getenv("GET_SIGMA_MIN_FRACTION", "0.01"))
SIGMA_MAX_FRACTION = float(os.getenv("GET_SIGMA_MAX_FRACTION", "1.0"))
SIGMA_MIN_ELEMENT_FRACTION = float(os.getenv("GET_SIGMA_MIN_ELEMENT_FRACTION", "0.4"))

SENSITIVITY_SIGNIFICANT_DIGITS = int(os.getenv("GET_SENSITIVITY_DIGITS", "5"))
FD_RELATIVE_STEP = float(os.getenv("GET_FD_STEP", "1e-6"))

# ═══════════════════════════════════════════════════════════════════════
# Solver Configuration
# ═══════════════════════════════════════════════════════════════════════

# Above these dof counts the matrix-free CG path replaces the direct solve
DIRECT_SOLVER_MAX_DOFS_2D = int(os.getenv("GET_DIRECT_MAX_DOFS_2D", "2500000"))
DIRECT_SOLVER_MAX_DOFS_3D = int(os.getenv("GET_DIRECT_MAX_DOFS_3D", "150000"))
CG_TOLERANCE = float(os.getenv("GET_CG_TOLERANCE", "1e-9"))
CG_MAX_ITERS = int(os.getenv("GET_CG_MAX_ITERS", "20000"))

# Relative agreement required between the two mutual energy forms
MPE_AGREEMENT_TOL = 1e-8

# ═══════════════════════════════════════════════════════════════════════
# Post-processing Configuration
# ═══════════════════════════════════════════════════════════════════════

CURVATURE_RESAMPLE_FACTOR = int(os.getenv("GET_CURVATURE_RESAMPLE", "4"))
CURVATURE_MIN_POINTS = 8

# sigma_major / sigma_minor of the crossed-pair demo fields
PAIR_ASPECT_RATIO = float(os.getenv("GET_PAIR_ASPECT", "8.0"))

# ═══════════════════════════════════════════════════════════════════════
# Runtime Configuration
# ═══════════════════════════════════════════════════════════════════════

GET_THREADS = max(1, int(os.getenv("GET_THREADS", "1")))
LOG_LEVEL = os.getenv("GET_LOG_LEVEL", "INFO").upper()
LOG_EVERY = max(1, int(os.getenv("GET_LOG_EVERY", "10")))
RUN_SLOW_TESTS = os.getenv("GET_RUN_SLOW", "false").lower() in ("true", "1", "yes")


def get_projection_defaults() -> Dict[str, float]:
    """Default projection parameters as a plain dict (used by the run schema)."""
    return {
        "threshold": PROJECTION_THRESHOLD,
        "epsilon": PROJECTION_EPSILON,
        "alpha_floor": PROJECTION_ALPHA_FLOOR,
    }


def get_mma_defaults() -> Dict[str, float]:
    """MMA constants in one place for logging and summary export."""
    return {
        "asy_init": MMA_ASY_INIT,
        "asy_incr": MMA_ASY_INCR,
        "asy_decr": MMA_ASY_DECR,
        "move_limit": MMA_MOVE_LIMIT,
        "c": MMA_C,
    }
