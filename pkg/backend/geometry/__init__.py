# backend/geometry/__init__.py
"""
Gaussian field geometry.

Supports:
- Anisotropic 2D/3D Gaussian fields and the superposed TDF
- Exact parameter gradients of each field
- Design-vector packing and degenerate-field deactivation
"""

from .gaussians import (
    GaussianField,
    active_mask,
    block_size,
    covariance_inverse,
    deactivate_degenerate,
    eval_field,
    eval_tdf,
    grad_field_params,
    pack,
    reflect_field,
    support_mask,
    unpack,
)

__all__ = [
    "GaussianField",
    "active_mask",
    "block_size",
    "covariance_inverse",
    "deactivate_degenerate",
    "eval_field",
    "eval_tdf",
    "grad_field_params",
    "pack",
    "reflect_field",
    "support_mask",
    "unpack",
]
