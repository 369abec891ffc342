"""Control laws for the leader/follower pair.

Spring-damper impedance laws throughout: a simulated human driving the
leader, a high-gain baseline, tele-impedance control (TIC) tracking the
delayed leader position, and intention assimilation control (IAC) tracking
the estimated leader target. TIC and IAC consume delayed packets, so their
gains are always the snapshot carried by the packet, never live values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .dynamics import RobotState
from .transport import KIND_RAW_STATE, KIND_TARGET, LeaderPacket


def _as3(value) -> np.ndarray:
    out = np.broadcast_to(np.asarray(value, dtype=float), (3,)).copy()
    if not np.all(np.isfinite(out)):
        raise ValueError("gain values must be finite")
    return out


@dataclass(frozen=True)
class ImpedanceGains:
    """Diagonal stiffness L1 [N/m] and damping L2 [N s/m] per axis."""

    l1: np.ndarray
    l2: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "l1", _as3(self.l1))
        object.__setattr__(self, "l2", _as3(self.l2))
        if np.any(self.l1 <= 0.0) or np.any(self.l2 <= 0.0):
            raise ValueError("impedance gains must be positive")

    @classmethod
    def coupled(cls, l1) -> "ImpedanceGains":
        """Default damping coupling L2 = 0.1 L1."""
        l1 = _as3(l1)
        return cls(l1=l1, l2=0.1 * l1)


class CommandSource(Enum):
    TIC = "tic"
    IAC = "iac"
    HIGH_GAIN = "high-gain"
    OPERATOR = "operator"


@dataclass(frozen=True)
class ControlCommand:
    """Force command with the gain snapshot that produced it."""

    u: np.ndarray
    source: CommandSource
    gains: ImpedanceGains

    def __post_init__(self):
        object.__setattr__(self, "u", _as3(self.u))


@dataclass
class OperatorModel:
    """Simulated human: a target trajectory driven through arm impedance.

    `trajectory(t)` returns (tau_l, tau_dot_l) as length-3 arrays and
    `grasp(t)` the power-grasp force in newtons used for stiffness
    prescription. Both must be deterministic functions of time.
    """

    trajectory: Callable[[float], tuple[np.ndarray, np.ndarray]]
    arm_l1: np.ndarray = field(default_factory=lambda: np.full(3, 500.0))
    arm_l2: np.ndarray = field(default_factory=lambda: np.full(3, 50.0))
    grasp: Callable[[float], float] = lambda t: 5.0

    def __post_init__(self):
        self.arm_l1 = _as3(self.arm_l1)
        self.arm_l2 = _as3(self.arm_l2)
        if np.any(self.arm_l1 <= 0.0) or np.any(self.arm_l2 <= 0.0):
            raise ValueError("operator arm gains must be positive")


def operator_control(model: OperatorModel, leader_state: RobotState, t: float) -> np.ndarray:
    """Force the simulated human applies on the leader handle."""
    tau_l, tau_dot_l = model.trajectory(t)
    return -model.arm_l1 * (leader_state.position - tau_l) - model.arm_l2 * (
        leader_state.velocity - tau_dot_l
    )


def high_gain_control(x, xdot, x_l, xdot_l, G, gains: ImpedanceGains) -> np.ndarray:
    """Baseline follower law: gravity compensation plus stiff tracking."""
    x, xdot, x_l, xdot_l, G = (np.asarray(v, dtype=float) for v in (x, xdot, x_l, xdot_l, G))
    return G - gains.l1 * (x - x_l) - gains.l2 * (xdot - xdot_l)


def _packet_gains(packet: LeaderPacket) -> ImpedanceGains:
    return ImpedanceGains(l1=np.array(packet.l1), l2=np.array(packet.l2))


def _spring_damper(
    follower_state: RobotState, target, target_dot, gains: ImpedanceGains
) -> np.ndarray:
    return -gains.l1 * (follower_state.position - np.asarray(target)) - gains.l2 * (
        follower_state.velocity - np.asarray(target_dot)
    )


def tic_control(follower_state: RobotState, delayed: LeaderPacket) -> ControlCommand:
    """Track the delayed measured leader position with delayed gains."""
    if delayed.payload_kind != KIND_RAW_STATE:
        raise ValueError("tic_control expects a raw-state packet")
    gains = _packet_gains(delayed)
    u = _spring_damper(follower_state, delayed.position, delayed.velocity, gains)
    return ControlCommand(u=u, source=CommandSource.TIC, gains=gains)


def iac_control(follower_state: RobotState, delayed_target: LeaderPacket) -> ControlCommand:
    """Track the delayed estimated leader target with delayed gains."""
    if delayed_target.payload_kind != KIND_TARGET:
        raise ValueError("iac_control expects a target packet")
    gains = _packet_gains(delayed_target)
    u = _spring_damper(follower_state, delayed_target.position, delayed_target.velocity, gains)
    return ControlCommand(u=u, source=CommandSource.IAC, gains=gains)


def bilateral_feedback(f_env) -> np.ndarray:
    """Force reflected to the leader handle: equal and opposite to F_env."""
    return -np.asarray(f_env, dtype=float)
