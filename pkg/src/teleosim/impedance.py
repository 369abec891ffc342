"""Operator-side impedance command pipeline.

Grasp force maps linearly to a stiffness command; damping is coupled to
stiffness by a fixed ratio; stiffness increases are rate-limited so the
follower stays stable while its gains rise.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

DAMPING_RATIO = 0.1  # L2 = 0.1 L1 coupling used everywhere by default


@dataclass(frozen=True)
class GraspMap:
    """Linear grasp-force to stiffness map, clamped to [k_min, saturation]."""

    k_min: float = 80.0
    slope: float = 62.0
    saturation: float = 1320.0

    def __post_init__(self):
        if self.k_min <= 0.0:
            raise ValueError("k_min must be > 0")
        if self.slope < 0.0:
            raise ValueError("slope must be >= 0")
        if self.saturation < self.k_min:
            raise ValueError("saturation must be >= k_min")


def grasp_to_stiffness(grasp: float, gmap: GraspMap = GraspMap()) -> float:
    if grasp < 0.0:
        raise ValueError("grasp force must be >= 0")
    return float(min(gmap.k_min + gmap.slope * grasp, gmap.saturation))


def damping_from_stiffness(l1):
    """Coupled damping L2 = 0.1 L1."""
    l1 = np.asarray(l1, dtype=float)
    if np.any(l1 <= 0.0):
        raise ValueError("stiffness must be > 0")
    return DAMPING_RATIO * l1


def alpha_bound(l2, mass: float) -> float:
    """Smallest damping eigenvalue over largest mass eigenvalue.

    For diagonal damping and scalar mass this is min(L2) / mass.
    """
    l2 = np.atleast_1d(np.asarray(l2, dtype=float))
    if np.any(l2 <= 0.0):
        raise ValueError("damping must be > 0")
    if mass <= 0.0:
        raise ValueError("mass must be > 0")
    return float(l2.min() / mass)


@dataclass
class RateLimiterState:
    """Current shaped gains plus the data needed to bound their rise rate."""

    l1: np.ndarray
    l2: np.ndarray
    mass_bound: float = 12.8
    margin: float = 0.99  # fraction of the strict bound used per tick
    alpha: float = 0.0

    def __post_init__(self):
        self.l1 = np.atleast_1d(np.asarray(self.l1, dtype=float)).copy()
        self.l2 = np.atleast_1d(np.asarray(self.l2, dtype=float)).copy()
        if np.any(self.l1 <= 0.0):
            raise ValueError("stiffness must be > 0")
        self.alpha = alpha_bound(self.l2, self.mass_bound)


def shape_stiffness(desired_l1, state: RateLimiterState, dt: float):
    """Clamp stiffness increases to the stability bound; pass decreases through.

    With the L2 = 0.1 L1 coupling substituted, the rise-rate constraint
    L1' < 2 a L1 - a L2' resolves to L1' < 2 a L1 / (1 + 0.1 a), applied
    with a safety margin per tick. alpha is recomputed from the current
    damping on every call. Returns (l1_next, l2_next, next_state).
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    desired = np.atleast_1d(np.asarray(desired_l1, dtype=float))
    if np.any(desired <= 0.0):
        raise ValueError("desired stiffness must be > 0")
    alpha = alpha_bound(state.l2, state.mass_bound)
    max_rise = state.margin * dt * 2.0 * alpha * state.l1 / (1.0 + DAMPING_RATIO * alpha)
    l1_next = np.where(
        desired >= state.l1,
        np.minimum(desired, state.l1 + max_rise),
        desired,
    )
    l2_next = damping_from_stiffness(l1_next)
    next_state = RateLimiterState(
        l1=l1_next, l2=l2_next, mass_bound=state.mass_bound, margin=state.margin
    )
    return l1_next, l2_next, next_state
