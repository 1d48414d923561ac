# backend/postprocess/__init__.py
"""
Boundary extraction and design evaluation.

Supports:
- Marching-squares contours of the TDF
- Signed curvature along contours and the crossed-pair junction law
- Binary (epsilon = 0) extraction and cross-mesh re-evaluation
"""

from .contours import Contour, contours_from_mesh, extract_contours
from .curvature import CurvatureProfile, contour_curvature, curvature_profile_by_angle
from .evaluation import BinaryDesign, DesignEvaluation, binary_extract, reevaluate_on_mesh

__all__ = [
    "Contour",
    "contours_from_mesh",
    "extract_contours",
    "CurvatureProfile",
    "contour_curvature",
    "curvature_profile_by_angle",
    "BinaryDesign",
    "DesignEvaluation",
    "binary_extract",
    "reevaluate_on_mesh",
]
