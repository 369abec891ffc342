"""Deterministic operator target trajectories and grasp profiles."""

from __future__ import annotations

import math

import numpy as np

from ..controllers import OperatorModel


def _smoothstep(t: float, t0: float, t1: float) -> float:
    """C1 ramp from 0 at t0 to 1 at t1."""
    if t <= t0:
        return 0.0
    if t >= t1:
        return 1.0
    s = (t - t0) / (t1 - t0)
    return s * s * (3.0 - 2.0 * s)


def _smoothstep_dot(t: float, t0: float, t1: float) -> float:
    if t <= t0 or t >= t1:
        return 0.0
    s = (t - t0) / (t1 - t0)
    return 6.0 * s * (1.0 - s) / (t1 - t0)


def fig2_sine(t: float) -> tuple[np.ndarray, np.ndarray]:
    """Single-axis sinusoid, amplitude 0.10 m at 0.6 Hz."""
    w = 2.0 * math.pi * 0.6
    tau = np.array([0.10 * math.sin(w * t), 0.0, 0.0])
    tau_dot = np.array([0.10 * w * math.cos(w * t), 0.0, 0.0])
    return tau, tau_dot


def seeded_sines(seed: int, speed: float = 1.0):
    """Sum of 3 sinusoids per axis, periods 2-8 s, amplitudes summing to 0.2 m."""
    rng = np.random.default_rng(seed)
    periods = rng.uniform(2.0, 8.0, size=(3, 3)) / speed
    weights = rng.uniform(0.5, 1.0, size=(3, 3))
    amps = 0.2 * weights / weights.sum(axis=1, keepdims=True)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=(3, 3))
    omegas = 2.0 * math.pi / periods

    def trajectory(t: float) -> tuple[np.ndarray, np.ndarray]:
        arg = omegas * t + phases
        tau = (amps * np.sin(arg)).sum(axis=1)
        tau_dot = (amps * omegas * np.cos(arg)).sum(axis=1)
        return tau, tau_dot

    return trajectory


def balloon_descent(start_z: float = 0.3, floor_z: float = 0.05):
    """Free x-motion phase, then a smooth vertical descent onto the balloon.

    Phase 1 (0-8 s): sinusoid in x at constant height for free tracking.
    Phase 2 (8-14 s): descend from start_z to floor_z and hold.
    """
    w = 2.0 * math.pi * 0.4

    def trajectory(t: float) -> tuple[np.ndarray, np.ndarray]:
        envelope = 1.0 - _smoothstep(t, 7.0, 8.0)
        x = 0.10 * math.sin(w * t) * envelope
        xd = 0.10 * (w * math.cos(w * t) * envelope
                     - math.sin(w * t) * _smoothstep_dot(t, 7.0, 8.0))
        s = _smoothstep(t, 8.0, 14.0)
        z = start_z + (floor_z - start_z) * s
        zd = (floor_z - start_z) * _smoothstep_dot(t, 8.0, 14.0)
        return np.array([x, 0.0, z]), np.array([xd, 0.0, zd])

    return trajectory


def square_polish(side: float = 0.10, period: float = 6.0, press_z: float = -0.01):
    """Trace a square of given side in x-y while pressing down onto the table."""

    def trajectory(t: float) -> tuple[np.ndarray, np.ndarray]:
        s = (t % period) / period * 4.0
        edge = int(s)
        f = s - edge
        speed = 4.0 * side / period
        corners = [(0.0, 0.0), (side, 0.0), (side, side), (0.0, side)]
        x0, y0 = corners[edge % 4]
        x1, y1 = corners[(edge + 1) % 4]
        x = x0 + (x1 - x0) * f
        y = y0 + (y1 - y0) * f
        xd = speed * math.copysign(1.0, x1 - x0) if x1 != x0 else 0.0
        yd = speed * math.copysign(1.0, y1 - y0) if y1 != y0 else 0.0
        z = press_z * _smoothstep(t, 0.0, 1.0)
        zd = press_z * _smoothstep_dot(t, 0.0, 1.0)
        return np.array([x, y, z]), np.array([xd, yd, zd])

    return trajectory


def trapezoid_grasp(peak: float = 20.0, duration: float = 30.0):
    """Grasp force ramping 0 -> peak -> 0 across the trial."""

    def grasp(t: float) -> float:
        rise = duration / 3.0
        if t < rise:
            return peak * t / rise
        if t < 2.0 * rise:
            return peak
        return max(0.0, peak * (duration - t) / rise)

    return grasp


def build_operator(config) -> OperatorModel:
    """Operator model for a scenario config."""
    if config.operator == "fig2_sine":
        trajectory = fig2_sine
    elif config.operator == "sines":
        trajectory = seeded_sines(config.seed)
    elif config.operator == "balloon_descent":
        trajectory = balloon_descent()
    elif config.operator == "square_polish":
        trajectory = square_polish()
    else:
        raise ValueError(f"unknown operator model {config.operator!r}")
    grasp = trapezoid_grasp(duration=config.duration) if config.grasp_driven else (lambda t: 5.0)
    return OperatorModel(
        trajectory=trajectory,
        arm_l1=config.operator_l1,
        arm_l2=config.operator_l2,
        grasp=grasp,
    )
