# backend/optimizer/mma.py
"""
Method of Moving Asymptotes for one inequality constraint.

Solves, per outer iteration, the convex separable approximation

    min  sum_j p0_j/(U_j - x_j) + q0_j/(x_j - L_j) + c y + d y^2 / 2
    s.t. sum_j P_j/(U_j - x_j) + Q_j/(x_j - L_j) - b <= y
         alpha_j <= x_j <= beta_j,  y >= 0

With a single constraint (and a = 0, so the artificial z variable stays at
zero) the dual is one-dimensional: x(lambda) and y(lambda) are closed form,
and the dual gradient g~(x(lambda)) - y(lambda) is monotone in lambda, so the
multiplier is a bracketed root.

Usage:
    state = MmaState.new(x0.size)
    x1 = mma_update(x0, f0, df0, g, dg, (xmin, xmax), state)
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from config import (
    MMA_A0,
    MMA_ALBEFA,
    MMA_ASY_DECR,
    MMA_ASY_INCR,
    MMA_ASY_INIT,
    MMA_C,
    MMA_D,
    MMA_MOVE_LIMIT,
    MMA_RAA0,
)

logger = logging.getLogger(__name__)

Bounds = Tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class MmaSettings:
    move_limit: float = MMA_MOVE_LIMIT
    asy_init: float = MMA_ASY_INIT
    asy_incr: float = MMA_ASY_INCR
    asy_decr: float = MMA_ASY_DECR
    albefa: float = MMA_ALBEFA
    raa0: float = MMA_RAA0
    a0: float = MMA_A0
    c: float = MMA_C
    d: float = MMA_D

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass
class MmaState:
    """Asymptote memory and the two previous iterates."""

    low: np.ndarray
    upp: np.ndarray
    x_old_1: Optional[np.ndarray] = None
    x_old_2: Optional[np.ndarray] = None
    iteration: int = 0

    @classmethod
    def new(cls, n: int) -> "MmaState":
        return cls(low=np.zeros(n), upp=np.ones(n))


@dataclass
class MmaSubproblem:
    low: np.ndarray
    upp: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    p0: np.ndarray
    q0: np.ndarray
    P: np.ndarray
    Q: np.ndarray
    b: float
    c: float
    d: float

    def x_of(self, lam: float) -> np.ndarray:
        """Minimizer of the Lagrangian over the box for a given multiplier."""
        sp = np.sqrt(self.p0 + lam * self.P)
        sq = np.sqrt(self.q0 + lam * self.Q)
        x = (sp * self.low + sq * self.upp) / (sp + sq)
        return np.clip(x, self.alpha, self.beta)

    def y_of(self, lam: float) -> float:
        return max(0.0, (lam - self.c) / self.d)

    def constraint(self, x: np.ndarray) -> float:
        """Approximate constraint value g~(x) (b already subtracted)."""
        return float(np.sum(self.P / (self.upp - x) + self.Q / (x - self.low)) - self.b)

    def dual_gradient(self, lam: float) -> float:
        return self.constraint(self.x_of(lam)) - self.y_of(lam)

    def objective_gradient(self, x: np.ndarray, lam: float) -> np.ndarray:
        """d/dx of the subproblem Lagrangian (for KKT checks)."""
        p = self.p0 + lam * self.P
        q = self.q0 + lam * self.Q
        return p / (self.upp - x) ** 2 - q / (x - self.low) ** 2


def update_asymptotes(
    x: np.ndarray,
    bounds: Bounds,
    state: MmaState,
    settings: MmaSettings,
) -> Tuple[np.ndarray, np.ndarray]:
    """Place L and U for this iteration (adapting to oscillation after the second)."""
    xmin, xmax = bounds
    span = np.maximum(xmax - xmin, 1e-5)
    if state.iteration <= 2 or state.x_old_1 is None or state.x_old_2 is None:
        return x - settings.asy_init * span, x + settings.asy_init * span

    trend = (x - state.x_old_1) * (state.x_old_1 - state.x_old_2)
    factor = np.ones_like(x)
    factor[trend > 0] = settings.asy_incr
    factor[trend < 0] = settings.asy_decr
    low = x - factor * (state.x_old_1 - state.low)
    upp = x + factor * (state.upp - state.x_old_1)

    low = np.clip(low, x - 10.0 * span, x - 0.01 * span)
    upp = np.clip(upp, x + 0.01 * span, x + 10.0 * span)
    return low, upp


def build_subproblem(
    x: np.ndarray,
    df0: np.ndarray,
    g: float,
    dg: np.ndarray,
    bounds: Bounds,
    low: np.ndarray,
    upp: np.ndarray,
    settings: MmaSettings,
) -> MmaSubproblem:
    xmin, xmax = bounds
    span = np.maximum(xmax - xmin, 1e-5)

    alpha = np.maximum.reduce([
        low + settings.albefa * (x - low),
        x - settings.move_limit * span,
        xmin,
    ])
    beta = np.minimum.reduce([
        upp - settings.albefa * (upp - x),
        x + settings.move_limit * span,
        xmax,
    ])

    ux1 = upp - x
    xl1 = x - low
    ux2, xl2 = ux1**2, xl1**2

    p0 = np.maximum(df0, 0.0)
    q0 = np.maximum(-df0, 0.0)
    reg0 = 0.001 * (p0 + q0) + settings.raa0 / span
    p0 = (p0 + reg0) * ux2
    q0 = (q0 + reg0) * xl2

    P = np.maximum(dg, 0.0)
    Q = np.maximum(-dg, 0.0)
    reg = 0.001 * (P + Q) + settings.raa0 / span
    P = (P + reg) * ux2
    Q = (Q + reg) * xl2
    b = float(np.sum(P / ux1 + Q / xl1) - g)

    return MmaSubproblem(low, upp, alpha, beta, p0, q0, P, Q, b, settings.c, settings.d)


def solve_subproblem(sub: MmaSubproblem) -> Tuple[np.ndarray, float, float]:
    """
    KKT point of the subproblem.

    Returns:
        (x, y, lambda)
    """
    if sub.dual_gradient(0.0) <= 0.0:
        lam = 0.0
    else:
        hi = max(1.0, sub.c)
        while sub.dual_gradient(hi) > 0.0:
            hi *= 2.0
            if hi > 1e300:
                raise ValueError("could not bracket the MMA dual multiplier")
        lam = brentq(sub.dual_gradient, 0.0, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
    x = sub.x_of(lam)
    return x, sub.y_of(lam), float(lam)


def mma_update(
    x: np.ndarray,
    f0: float,
    df0: np.ndarray,
    g: float,
    dg: np.ndarray,
    bounds: Bounds,
    state: MmaState,
    settings: Optional[MmaSettings] = None,
) -> np.ndarray:
    """
    One MMA step from x; updates `state` in place.

    Args:
        x: Current design vector
        f0: Objective value (scaled)
        df0: Objective gradient
        g: Constraint value (g <= 0 feasible)
        dg: Constraint gradient
        bounds: (xmin, xmax)
        state: Asymptote memory, created with MmaState.new(n)

    Raises:
        ValueError: On non-finite inputs or inconsistent lengths
    """
    settings = settings or MmaSettings()
    x = np.asarray(x, dtype=float)
    df0 = np.asarray(df0, dtype=float)
    dg = np.asarray(dg, dtype=float)
    xmin, xmax = (np.asarray(v, dtype=float) for v in bounds)

    if not (df0.shape == dg.shape == x.shape == xmin.shape == xmax.shape):
        raise ValueError("x, gradients and bounds must have equal length")
    if not (np.all(np.isfinite(df0)) and np.all(np.isfinite(dg)) and np.isfinite(f0) and np.isfinite(g)):
        raise ValueError("MMA received a non-finite objective or gradient")
    if np.any(xmin > xmax):
        raise ValueError("lower bounds exceed upper bounds")

    state.iteration += 1
    low, upp = update_asymptotes(x, (xmin, xmax), state, settings)
    sub = build_subproblem(x, df0, g, dg, (xmin, xmax), low, upp, settings)
    x_next, y, lam = solve_subproblem(sub)

    state.x_old_2 = None if state.x_old_1 is None else state.x_old_1.copy()
    state.x_old_1 = x.copy()
    state.low, state.upp = low, upp

    logger.debug(f"MMA step {state.iteration}: lambda={lam:.4g}, y={y:.3g}, g={g:.4g}")
    return x_next
