"""Tick-loop engine binding operator, leader, transport, estimator, follower."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..controllers import (
    CommandSource,
    ControlCommand,
    ImpedanceGains,
    OperatorModel,
    bilateral_feedback,
    high_gain_control,
    iac_control,
    operator_control,
    tic_control,
)
from ..dynamics import Balloon, PointMassParams, RigidTable, RobotState, contact_force, step_point_mass
from ..estimator import DirectTargetEstimator, ExtendedStateObserver, Measurement, TargetModel
from ..impedance import GraspMap, RateLimiterState, grasp_to_stiffness, shape_stiffness
from ..transport import KIND_RAW_STATE, KIND_TARGET, DelayLine, LeaderPacket, UdpEndpoint
from .config import ScenarioConfig
from .operators import build_operator

STATE_ENVELOPE = 1e3  # m or m/s; anything past this is a diverged run


class EngineDivergence(RuntimeError):
    """A state left the scenario envelope or went non-finite."""


@dataclass
class ScenarioTrace:
    """Columnar per-tick record of a run."""

    t: np.ndarray
    x_l: np.ndarray
    xd_l: np.ndarray
    x: np.ndarray
    tau: np.ndarray
    l1: np.ndarray
    l2: np.ndarray
    u_l: np.ndarray
    u: np.ndarray
    f_env: np.ndarray
    error: np.ndarray

    def __len__(self) -> int:
        return self.t.size


def desired_stiffness(config: ScenarioConfig, grasp: float, t: float) -> float:
    """Commanded L1 before rate limiting, from schedule or grasp map."""
    schedule = config.gain_schedule
    if schedule == "constant":
        return config.gain_value
    if schedule == "fig2_step":
        return 50.0 if 2.0 <= t < 8.0 else 500.0
    if schedule == "stiffness_sine":
        return 700.0 + 620.0 * math.sin(0.25 * math.pi * t)
    if schedule == "grasp":
        return grasp_to_stiffness(grasp, GraspMap())
    raise ValueError(f"unknown gain schedule {schedule!r}")


def _make_contact(config: ScenarioConfig):
    if config.contact is None:
        return None
    if config.contact == "balloon":
        return Balloon(
            surface_height=config.contact_height,
            stiffness=config.contact_stiffness,
            rupture_force=config.rupture_force,
        )
    return RigidTable(
        surface_height=config.contact_height,
        stiffness=config.contact_stiffness,
        damping=0.1 * config.contact_stiffness,
    )


class Engine:
    """Steppable simulation; `run_scenario` drives it start to finish.

    Tick order: gain shaping -> operator force -> leader step -> estimator
    -> packet send -> delayed packet poll -> follower control -> contact ->
    follower step -> bilateral feedback for the next tick.
    """

    def __init__(self, config: ScenarioConfig, operator: OperatorModel | None = None):
        self.config = config.validate()
        self.operator = operator if operator is not None else build_operator(config)
        self.params = PointMassParams(mass=config.mass, viscous_damping=config.damping)
        tau0, _ = self.operator.trajectory(0.0)
        self.leader = RobotState(position=tau0, velocity=np.zeros(3))
        self.follower = RobotState(position=tau0, velocity=np.zeros(3))
        self._follower_home = tau0.copy()
        l1_0 = desired_stiffness(config, self.operator.grasp(0.0), 0.0)
        self.limiter = RateLimiterState(
            l1=np.full(3, l1_0), l2=np.full(3, 0.1 * l1_0), mass_bound=config.limiter_mass
        )
        self.estimators = [DirectTargetEstimator() for _ in range(3)]
        self.observers = (
            [ExtendedStateObserver(model=(config.mass, config.damping), target_model=TargetModel())
             for _ in range(3)]
            if config.estimator == "observer"
            else None
        )
        self.line = DelayLine(delta=config.delta)
        self._udp_tx: UdpEndpoint | None = None
        self._udp_rx: UdpEndpoint | None = None
        if config.transport == "udp":
            self._udp_rx = UdpEndpoint()
            self._udp_tx = UdpEndpoint()
        self.last_packet: LeaderPacket | None = None
        self.feedback = np.zeros(3)
        self.tau = tau0.copy()
        self.tau_dot = np.zeros(3)
        self.contact = _make_contact(config)
        self.tick = 0
        self.seq = 0
        self.controller = config.controller

    def close(self) -> None:
        for ep in (self._udp_tx, self._udp_rx):
            if ep is not None:
                ep.close()

    # -- per-tick pipeline ------------------------------------------------

    def _shape_gains(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        desired = desired_stiffness(self.config, self.operator.grasp(t), t)
        l1, l2, self.limiter = shape_stiffness(np.full(3, desired), self.limiter, self.config.dt)
        if self.config.operator_mirror:
            self.operator.arm_l1 = l1.copy()
            self.operator.arm_l2 = l2.copy()
        return l1, l2

    def _estimate(self, u_t: np.ndarray, t: float) -> None:
        l1, l2 = self.limiter.l1, self.limiter.l2
        x, xd = self.leader.position, self.leader.velocity
        z_force = u_t + (self.feedback if self.config.bilateral else 0.0)
        for i in range(3):
            if self.observers is not None:
                meas = Measurement(x=x[i], xdot=xd[i], u_t=float(z_force[i]))
                self.tau[i], self.tau_dot[i] = self.observers[i].update(
                    meas, (l1[i], l2[i]), t, self.config.dt
                )
            else:
                self.tau[i], self.tau_dot[i] = self.estimators[i].update(
                    x[i], xd[i], float(z_force[i]), l1[i], l2[i], self.config.dt
                )

    def _send(self, t: float) -> None:
        if self.controller == "iac":
            kind, pos, vel = KIND_TARGET, self.tau, self.tau_dot
        else:
            kind, pos, vel = KIND_RAW_STATE, self.leader.position, self.leader.velocity
        if self.controller == "high-gain":
            l1 = np.full(3, self.config.high_gain_l1)
            l2 = 0.1 * l1
        else:
            l1, l2 = self.limiter.l1, self.limiter.l2
        packet = LeaderPacket(
            seq=self.seq, t_send=t, payload_kind=kind,
            position=tuple(pos), velocity=tuple(vel), l1=tuple(l1), l2=tuple(l2),
        )
        self.seq += 1
        if self._udp_tx is not None:
            self._udp_tx.send(packet, self._udp_rx.port)
            received = []
            for _ in range(100000):  # loopback delivery is near-immediate
                received = self._udp_rx.poll()
                if received:
                    break
            if not received:
                raise EngineDivergence("udp loopback packet never arrived")
            packet = received[-1]
        self.line.enqueue(packet, t)

    def _follower_command(self, t: float) -> ControlCommand:
        fresh = self.line.poll_latest(t)
        if fresh is not None:
            self.last_packet = fresh
        packet = self.last_packet
        if packet is None:
            # startup: hold initial position with initial gains
            gains = ImpedanceGains(l1=self.limiter.l1, l2=self.limiter.l2)
            u = -gains.l1 * (self.follower.position - self._follower_home) \
                - gains.l2 * self.follower.velocity
            return ControlCommand(u=u, source=CommandSource.OPERATOR, gains=gains)
        if packet.payload_kind == KIND_TARGET:
            return iac_control(self.follower, packet)
        if self.controller == "high-gain":
            gains = ImpedanceGains(l1=np.array(packet.l1), l2=np.array(packet.l2))
            u = high_gain_control(
                self.follower.position, self.follower.velocity,
                np.array(packet.position), np.array(packet.velocity),
                np.zeros(3), gains,
            )
            return ControlCommand(u=u, source=CommandSource.HIGH_GAIN, gains=gains)
        return tic_control(self.follower, packet)

    def step(self) -> dict:
        """Advance one tick; returns the trace row as a dict of arrays."""
        t = self.tick * self.config.dt
        dt = self.config.dt
        self._shape_gains(t)

        u_t = operator_control(self.operator, self.leader, t)
        leader_drive = u_t + (self.feedback if self.config.bilateral else 0.0)
        self.leader = step_point_mass(self.leader, self.params, leader_drive, np.zeros(3), dt)

        if self.controller == "iac":
            self._estimate(u_t, t)
        self._send(t)

        cmd = self._follower_command(t)
        f_contact = contact_force(self.contact, self.follower.position, self.follower.velocity)
        self.follower = step_point_mass(self.follower, self.params, cmd.u, f_contact, dt)
        f_env = -f_contact
        self.feedback = bilateral_feedback(f_env) if self.config.bilateral else np.zeros(3)

        for name, state in (("leader", self.leader), ("follower", self.follower)):
            vals = np.concatenate([state.position, state.velocity])
            if not np.all(np.isfinite(vals)) or np.abs(vals).max() > STATE_ENVELOPE:
                raise EngineDivergence(f"{name} state left the envelope at t={t:.3f}")

        row = {
            "t": t,
            "x_l": self.leader.position.copy(),
            "xd_l": self.leader.velocity.copy(),
            "x": self.follower.position.copy(),
            "tau": self.tau.copy(),
            "l1": self.limiter.l1.copy(),
            "l2": self.limiter.l2.copy(),
            "u_l": np.asarray(u_t, dtype=float),
            "u": cmd.u.copy(),
            "f_env": np.asarray(f_env, dtype=float),
            "error": float(np.linalg.norm(self.follower.position - self.leader.position)),
        }
        self.tick += 1
        return row


def run_scenario(config: ScenarioConfig, operator: OperatorModel | None = None) -> ScenarioTrace:
    """Run a full scenario and collect the trace."""
    engine = Engine(config, operator)
    n = int(round(config.duration / config.dt)) + 1
    cols = {k: [] for k in ("t", "x_l", "xd_l", "x", "tau", "l1", "l2", "u_l", "u", "f_env", "error")}
    try:
        for _ in range(n):
            row = engine.step()
            for k in cols:
                cols[k].append(row[k])
    finally:
        engine.close()
    return ScenarioTrace(
        t=np.array(cols["t"]),
        x_l=np.array(cols["x_l"]),
        xd_l=np.array(cols["xd_l"]),
        x=np.array(cols["x"]),
        tau=np.array(cols["tau"]),
        l1=np.array(cols["l1"]),
        l2=np.array(cols["l2"]),
        u_l=np.array(cols["u_l"]),
        u=np.array(cols["u"]),
        f_env=np.array(cols["f_env"]),
        error=np.array(cols["error"]),
    )
