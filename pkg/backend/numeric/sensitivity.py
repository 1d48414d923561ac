# backend/numeric/sensitivity.py
"""
Exact design sensitivities through the Heaviside band.

With rho_e = (1/npe) sum_p H(phi_p) and an objective whose element term is
-rho_e * E_e (compliance: E_e = u_e^T k0 u_e; mutual energy: u1_e^T k0 u2_e),

    dObj/dd = -(1/npe) sum_p H'(phi_p) dphi_p/dd * sum_{e ~ p} E_e

so element energies are folded onto nodes once per iteration and each
field's block only touches nodes in its own support that sit in the band.
Frozen elements contribute nothing: their density does not depend on d.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed

from config import FD_RELATIVE_STEP, GET_THREADS, SENSITIVITY_SIGNIFICANT_DIGITS
from errors import StateError
from geometry.gaussians import (
    GaussianField,
    block_size,
    grad_field_params,
    pack,
    support_mask,
    unpack,
)
from numeric.analysis import AnalysisState, analyze
from numeric.projection import ProjectionParams, heaviside_derivative
from problems.context import ProblemContext

logger = logging.getLogger(__name__)


@dataclass
class SensitivityResult:
    """Objective and volume-fraction gradients over the full design vector."""

    objective: np.ndarray
    volume: np.ndarray
    band_elements: int


# =============================================================================
# Nodal accumulation
# =============================================================================

def nodal_weights(context: ProblemContext, element_values: np.ndarray) -> np.ndarray:
    """Sum of per-element values over the free (non-frozen) elements at each node."""
    mesh = context.mesh
    values = np.where(context.regions.clamped, 0.0, np.asarray(element_values, dtype=float))
    npe = mesh.nodes_per_element
    return np.bincount(
        mesh.connectivity.ravel(),
        weights=np.repeat(values, npe),
        minlength=mesh.n_nodes,
    )


def band_element_count(context: ProblemContext, dH: np.ndarray) -> int:
    """Free elements with a nonzero Heaviside derivative at any node."""
    touched = np.any(dH[context.mesh.connectivity] != 0, axis=1)
    return int(np.count_nonzero(touched & ~context.regions.clamped))


def field_sensitivity_block(
    field: GaussianField,
    points: np.ndarray,
    dH: np.ndarray,
    weights: np.ndarray,
    nodes_per_element: int,
) -> np.ndarray:
    """
    (1/npe) sum_p dH_p * weights_p * dphi_field(p)/dd for one field.

    Only points inside the field's truncated support with dH != 0 are
    visited; an inactive field returns zeros.
    """
    block = np.zeros(block_size(field.dim))
    if not field.active:
        return block
    mask = support_mask(field, points)
    mask &= dH != 0
    idx = np.nonzero(mask)[0]
    if idx.size == 0:
        return block
    grad = grad_field_params(field, points[idx])
    return grad.T @ (dH[idx] * weights[idx]) / nodes_per_element


def _accumulate(
    state: AnalysisState,
    context: ProblemContext,
    element_values: np.ndarray,
    dH: Optional[np.ndarray] = None,
) -> np.ndarray:
    mesh = context.mesh
    if dH is None:
        dH = heaviside_derivative(state.nodal_tdf, state.params)
    weights = nodal_weights(context, element_values)
    points = mesh.node_coordinates()
    npe = mesh.nodes_per_element

    if GET_THREADS > 1 and len(state.ensemble) > 1:
        blocks = Parallel(n_jobs=GET_THREADS, prefer="threads")(
            delayed(field_sensitivity_block)(f, points, dH, weights, npe) for f in state.ensemble
        )
    else:
        blocks = [field_sensitivity_block(f, points, dH, weights, npe) for f in state.ensemble]

    if not blocks:
        return np.zeros(0)
    return np.concatenate(blocks)


# =============================================================================
# Objectives
# =============================================================================

def compliance_sensitivity(state: AnalysisState, context: ProblemContext) -> np.ndarray:
    """dC/dD = -sum_e drho_e/dD * u_e^T k0 u_e."""
    state.require_solve()
    return -_accumulate(state, context, state.element_energy)


def volume_sensitivity(state: AnalysisState, context: ProblemContext) -> np.ndarray:
    """d(V_f)/dD, element volumes over the domain volume as weights (positive sign)."""
    mesh = context.mesh
    share = np.full(mesh.n_elements, mesh.element_volume / mesh.domain_volume)
    return _accumulate(state, context, share)


def mpe_sensitivity(state: AnalysisState, context: ProblemContext) -> np.ndarray:
    """dJ/dD = -sum_e drho_e/dD * u1_e^T k0 u2_e."""
    state.require_solve()
    if state.u_out is None:
        raise StateError("mutual energy sensitivity needs the output-port solve")
    return -_accumulate(state, context, state.element_energy)


def design_sensitivities(state: AnalysisState, context: ProblemContext) -> SensitivityResult:
    """Objective (compliance or mutual energy) and volume gradients in one pass."""
    state.require_solve()
    dH = heaviside_derivative(state.nodal_tdf, state.params)
    mesh = context.mesh
    share = np.full(mesh.n_elements, mesh.element_volume / mesh.domain_volume)
    return SensitivityResult(
        objective=-_accumulate(state, context, state.element_energy, dH),
        volume=_accumulate(state, context, share, dH),
        band_elements=band_element_count(context, dH),
    )


def round_sensitivities(
    vector: Sequence[float],
    significant_digits: int = SENSITIVITY_SIGNIFICANT_DIGITS,
) -> np.ndarray:
    """
    Round every entry to `significant_digits` significant decimal digits.

    Example:
        >>> round_sensitivities([1.2345678])
        array([1.2346])
    """
    if significant_digits < 1:
        raise ValueError(f"significant_digits must be >= 1, got {significant_digits}")
    fmt = f"{{:.{significant_digits - 1}e}}"
    return np.array([float(fmt.format(v)) if v != 0 else 0.0 for v in np.asarray(vector, dtype=float)])


# =============================================================================
# Finite-difference oracle
# =============================================================================

def finite_difference_gradient(
    ensemble: Sequence[GaussianField],
    context: ProblemContext,
    params: ProjectionParams,
    quantity: str = "objective",
    indices: Optional[Sequence[int]] = None,
    relative_step: float = FD_RELATIVE_STEP,
    solver_method: Optional[str] = None,
) -> np.ndarray:
    """
    Central differences of the full pipeline (re-project, re-solve).

    Step per variable is max(relative_step, relative_step * |d|).

    Args:
        quantity: "objective" (C or J) or "volume" (V_f)
        indices: Design-vector entries to difference (default all)

    Returns:
        Array aligned with `indices` (or the full vector)
    """
    if quantity not in ("objective", "volume"):
        raise ValueError(f"quantity must be 'objective' or 'volume', got '{quantity}'")

    x = pack(ensemble)
    dim = ensemble[0].dim if ensemble else context.dim
    n = len(ensemble)
    active = [f.active for f in ensemble]
    solve = quantity == "objective"

    def measure(vec: np.ndarray) -> float:
        state = analyze(unpack(vec, dim, n, active), context, params, solve=solve, solver_method=solver_method)
        return float(state.objective if solve else state.volume_fraction)

    picks: List[int] = list(range(x.size)) if indices is None else [int(i) for i in indices]
    out = np.zeros(len(picks))
    for k, i in enumerate(picks):
        step = max(relative_step, relative_step * abs(x[i]))
        plus, minus = x.copy(), x.copy()
        plus[i] += step
        minus[i] -= step
        out[k] = (measure(plus) - measure(minus)) / (2.0 * step)

    logger.debug(f"Finite differences for {len(picks)} variable(s) of {quantity}")
    return out
