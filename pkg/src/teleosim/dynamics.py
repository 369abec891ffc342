"""Rigid-body models, fixed-step integration, and penalty contact.

Covers the point-mass plant used by the scenario engine, the two-link
planar arm with its Lagrangian matrices, the torque transformation that
makes the arm's Cartesian dynamics match a point-mass target plant, and
the spring / spring-damper contact models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


def _as3(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(3, float(arr))
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a scalar or a length-3 vector")
    return arr


def _check_finite(name: str, value) -> None:
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite value in {name}: {arr!r}")


@dataclass(frozen=True)
class PointMassParams:
    """Decoupled Cartesian plant: mass, viscous damping, constant bias force."""

    mass: np.ndarray = 12.8
    viscous_damping: np.ndarray = 5.0
    gravity_force: np.ndarray = 0.0

    def __post_init__(self):
        object.__setattr__(self, "mass", _as3(self.mass, "mass"))
        object.__setattr__(
            self, "viscous_damping", _as3(self.viscous_damping, "viscous_damping")
        )
        object.__setattr__(
            self, "gravity_force", _as3(self.gravity_force, "gravity_force")
        )
        if np.any(self.mass <= 0.0):
            raise ValueError("mass must be > 0")
        if np.any(self.viscous_damping < 0.0):
            raise ValueError("viscous_damping must be >= 0")


@dataclass(frozen=True)
class TwoLinkArmParams:
    """Planar two-link arm (revolute joints, gravity along -y of the plane)."""

    m1: float = 2.0
    m2: float = 1.5
    l1: float = 0.4
    l2: float = 0.35
    lc1: float = 0.2
    lc2: float = 0.175
    i1: float = 0.03
    i2: float = 0.02
    g: float = 0.0

    def __post_init__(self):
        for name in ("m1", "m2", "l1", "l2", "lc1", "lc2", "i1", "i2"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")


@dataclass
class RobotState:
    """Cartesian state of a point-mass robot."""

    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        self.position = _as3(self.position, "position")
        self.velocity = _as3(self.velocity, "velocity")

    def copy(self) -> "RobotState":
        return RobotState(self.position.copy(), self.velocity.copy())


@dataclass
class TwoLinkState:
    """Joint-space state of the two-link arm."""

    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).reshape(2)
        self.qdot = np.asarray(self.qdot, dtype=float).reshape(2)

    def copy(self) -> "TwoLinkState":
        return TwoLinkState(self.q.copy(), self.qdot.copy())


def step_point_mass(
    state: RobotState,
    params: PointMassParams,
    applied_force,
    external_force,
    dt: float,
) -> RobotState:
    """Advance the point-mass plant one classical RK4 step.

    Forces are held constant across the step (zero-order hold), which keeps
    traces bitwise reproducible for identical inputs.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    _check_finite("position", state.position)
    _check_finite("velocity", state.velocity)
    _check_finite("applied_force", applied_force)
    _check_finite("external_force", external_force)
    u = _as3(applied_force, "applied_force")
    f_ext = _as3(external_force, "external_force")
    m = params.mass
    c = params.viscous_damping
    g = params.gravity_force

    def accel(v):
        return (u + f_ext - c * v - g) / m

    x0, v0 = state.position, state.velocity
    k1x = v0
    k1v = accel(v0)
    k2x = v0 + 0.5 * dt * k1v
    k2v = accel(v0 + 0.5 * dt * k1v)
    k3x = v0 + 0.5 * dt * k2v
    k3v = accel(v0 + 0.5 * dt * k2v)
    k4x = v0 + dt * k3v
    k4v = accel(v0 + dt * k3v)
    x1 = x0 + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    v1 = v0 + (dt / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return RobotState(x1, v1)


def two_link_matrices(q, qdot, params: TwoLinkArmParams):
    """Inertia, Coriolis, and gravity terms M(q), C(q, qdot), G(q).

    The Coriolis matrix uses the Christoffel convention, so Mdot - 2C is
    skew-symmetric.
    """
    q = np.asarray(q, dtype=float).reshape(2)
    qdot = np.asarray(qdot, dtype=float).reshape(2)
    p = params
    c2 = math.cos(q[1])
    s2 = math.sin(q[1])
    a = p.m2 * p.l1 * p.lc2

    m11 = p.m1 * p.lc1**2 + p.i1 + p.i2 + p.m2 * (p.l1**2 + p.lc2**2 + 2 * p.l1 * p.lc2 * c2)
    m12 = p.m2 * (p.lc2**2 + p.l1 * p.lc2 * c2) + p.i2
    m22 = p.m2 * p.lc2**2 + p.i2
    M = np.array([[m11, m12], [m12, m22]])

    h = -a * s2
    C = np.array(
        [
            [h * qdot[1], h * (qdot[0] + qdot[1])],
            [-h * qdot[0], 0.0],
        ]
    )

    c1 = math.cos(q[0])
    c12 = math.cos(q[0] + q[1])
    G = np.array(
        [
            (p.m1 * p.lc1 + p.m2 * p.l1) * p.g * c1 + p.m2 * p.lc2 * p.g * c12,
            p.m2 * p.lc2 * p.g * c12,
        ]
    )
    return M, C, G


def forward_kinematics(q, params: TwoLinkArmParams) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(2)
    x = params.l1 * math.cos(q[0]) + params.l2 * math.cos(q[0] + q[1])
    y = params.l1 * math.sin(q[0]) + params.l2 * math.sin(q[0] + q[1])
    return np.array([x, y])


def jacobian(q, params: TwoLinkArmParams) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(2)
    s1 = math.sin(q[0])
    c1 = math.cos(q[0])
    s12 = math.sin(q[0] + q[1])
    c12 = math.cos(q[0] + q[1])
    return np.array(
        [
            [-params.l1 * s1 - params.l2 * s12, -params.l2 * s12],
            [params.l1 * c1 + params.l2 * c12, params.l2 * c12],
        ]
    )


def jacobian_dot(q, qdot, params: TwoLinkArmParams) -> np.ndarray:
    q = np.asarray(q, dtype=float).reshape(2)
    qdot = np.asarray(qdot, dtype=float).reshape(2)
    s1 = math.sin(q[0])
    c1 = math.cos(q[0])
    s12 = math.sin(q[0] + q[1])
    c12 = math.cos(q[0] + q[1])
    d1 = qdot[0]
    d12 = qdot[0] + qdot[1]
    return np.array(
        [
            [-params.l1 * c1 * d1 - params.l2 * c12 * d12, -params.l2 * c12 * d12],
            [-params.l1 * s1 * d1 - params.l2 * s12 * d12, -params.l2 * s12 * d12],
        ]
    )


def cartesian_state(state: TwoLinkState, params: TwoLinkArmParams):
    """Tip position and velocity of the arm."""
    return forward_kinematics(state.q, params), jacobian(state.q, params) @ state.qdot


def step_two_link(
    state: TwoLinkState,
    params: TwoLinkArmParams,
    torque,
    dt: float,
    tip_force=None,
) -> TwoLinkState:
    """RK4 step of the arm in joint space.

    `torque` is either a length-2 array held constant over the step or a
    callable evaluated at every RK4 substate, which lets a continuous
    control law be integrated without zero-order-hold error. `tip_force`
    is an optional Cartesian force at the tip, mapped through J^T.
    """
    if dt <= 0.0:
        raise ValueError("dt must be > 0")
    if callable(torque):
        torque_fn = torque
    else:
        tau_const = np.asarray(torque, dtype=float).reshape(2)
        _check_finite("torque", tau_const)

        def torque_fn(_s):
            return tau_const

    f_tip = None if tip_force is None else np.asarray(tip_force, dtype=float).reshape(2)

    def accel(s: TwoLinkState):
        M, C, G = two_link_matrices(s.q, s.qdot, params)
        tau = torque_fn(s)
        if f_tip is not None:
            tau = tau + jacobian(s.q, params).T @ f_tip
        return np.linalg.solve(M, tau - C @ s.qdot - G)

    q0, v0 = state.q, state.qdot
    k1q = v0
    k1v = accel(state)
    s2 = TwoLinkState(q0 + 0.5 * dt * k1q, v0 + 0.5 * dt * k1v)
    k2q = s2.qdot
    k2v = accel(s2)
    s3 = TwoLinkState(q0 + 0.5 * dt * k2q, v0 + 0.5 * dt * k2v)
    k3q = s3.qdot
    k3v = accel(s3)
    s4 = TwoLinkState(q0 + dt * k3q, v0 + dt * k3v)
    k4q = s4.qdot
    k4v = accel(s4)
    q1 = q0 + (dt / 6.0) * (k1q + 2 * k2q + 2 * k3q + k4q)
    v1 = v0 + (dt / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    return TwoLinkState(q1, v1)


def pre_compensate(u, follower_state, follower, leader):
    """Torque that makes the follower's dynamics match the leader's plant.

    Two cases:

    * leader is a ``PointMassParams``: the follower is the two-link arm and
      `u` is a Cartesian plane force (x, y). Returns joint torques that
      realize the point-mass closed-form acceleration at the arm's tip.
    * leader is a ``TwoLinkArmParams``: joint-space transformation
      u_f = M_f M^-1 (u - C qdot - G) + C_f qdot + G_f.
    """
    if isinstance(leader, PointMassParams):
        if not isinstance(follower, TwoLinkArmParams):
            raise TypeError("point-mass leader requires a two-link follower")
        state: TwoLinkState = follower_state
        u = np.asarray(u, dtype=float).reshape(2)
        J = jacobian(state.q, follower)
        det = np.linalg.det(J)
        if abs(det) < 1e-10:
            raise ValueError(
                f"singular arm Jacobian (det={det:.3e}) at q={state.q!r}; "
                "cannot match the target plant here"
            )
        xdot = J @ state.qdot
        m_l = leader.mass[:2]
        c_l = leader.viscous_damping[:2]
        g_l = leader.gravity_force[:2]
        xddot_target = (u - c_l * xdot - g_l) / m_l
        qddot = np.linalg.solve(J, xddot_target - jacobian_dot(state.q, state.qdot, follower) @ state.qdot)
        M_f, C_f, G_f = two_link_matrices(state.q, state.qdot, follower)
        return M_f @ qddot + C_f @ state.qdot + G_f

    if isinstance(leader, TwoLinkArmParams):
        state = follower_state
        u = np.asarray(u, dtype=float).reshape(2)
        M, C, G = two_link_matrices(state.q, state.qdot, leader)
        if abs(np.linalg.det(M)) < 1e-12:
            raise ValueError("singular leader inertia matrix")
        M_f, C_f, G_f = two_link_matrices(state.q, state.qdot, follower)
        return M_f @ np.linalg.solve(M, u - C @ state.qdot - G) + C_f @ state.qdot + G_f

    raise TypeError(f"unsupported leader parameter type: {type(leader).__name__}")


# --- contact models ----------------------------------------------------------


@dataclass
class Balloon:
    """Soft spring along +z that breaks once the contact force hits a threshold.

    After rupture the force is zero forever.
    """

    surface_height: float
    stiffness: float
    rupture_force: float = 8.0
    ruptured: bool = False


@dataclass
class RigidTable:
    """Spring-damper penalty surface along +z; never adhesive."""

    surface_height: float
    stiffness: float
    damping: float = 0.0


ContactModel = Balloon | RigidTable | None


def contact_force(model: ContactModel, position, velocity) -> np.ndarray:
    """Force the environment exerts on the follower (z component only).

    A ``Balloon`` mutates its own ``ruptured`` flag the first time the
    instantaneous force reaches the rupture threshold; that tick still
    reports the peak force.
    """
    f = np.zeros(3)
    if model is None:
        return f
    pos = _as3(position, "position")
    vel = _as3(velocity, "velocity")
    pen = model.surface_height - pos[2]
    if pen <= 0.0:
        return f
    if isinstance(model, Balloon):
        if model.ruptured:
            return f
        fz = model.stiffness * pen
        if fz >= model.rupture_force:
            model.ruptured = True
        f[2] = fz
        return f
    if isinstance(model, RigidTable):
        fz = model.stiffness * pen - model.damping * vel[2]
        f[2] = max(fz, 0.0)
        return f
    raise TypeError(f"unsupported contact model: {type(model).__name__}")


# --- linearization along a trajectory sample ---------------------------------


@dataclass(frozen=True)
class LinearizedErrorDynamics:
    """Velocity- and position-coupling terms of the linearized error model."""

    S: np.ndarray
    N_term: np.ndarray


def linearize_error_dynamics(sample, params) -> LinearizedErrorDynamics:
    """Linearize the plant's Lagrangian terms along a trajectory sample.

    `sample` is (x, xdot, xddot); joint-space for the arm, Cartesian for
    the point mass. For the point-mass plant the damping is constant and
    the bias force has no position gradient, so both terms vanish.
    """
    x, xdot, xddot = sample
    if isinstance(params, PointMassParams):
        return LinearizedErrorDynamics(S=np.zeros(3), N_term=np.zeros(3))
    if not isinstance(params, TwoLinkArmParams):
        raise TypeError(f"unsupported params type: {type(params).__name__}")

    q = np.asarray(x, dtype=float).reshape(2)
    qdot = np.asarray(xdot, dtype=float).reshape(2)
    qddot = np.asarray(xddot, dtype=float).reshape(2)
    p = params
    s2 = math.sin(q[1])
    c2 = math.cos(q[1])
    a = p.m2 * p.l1 * p.lc2
    h = -a * s2
    dh = -a * c2  # dh/dq2

    # S = d(C qdot)/dqdot - C; for this arm C qdot is quadratic in qdot and
    # the Christoffel C satisfies S = C.
    _, C, _ = two_link_matrices(q, qdot, p)
    S = C.copy()

    # N = d(M qddot)/dq + d(C qdot)/dq + dG/dq; only q2 enters M and C.
    dM_dq2 = np.array([[-2 * a * s2, -a * s2], [-a * s2, 0.0]])
    dMq_dq = np.zeros((2, 2))
    dMq_dq[:, 1] = dM_dq2 @ qddot
    dCq_dq = np.zeros((2, 2))
    dCq_dq[:, 1] = np.array(
        [dh * (2 * qdot[0] * qdot[1] + qdot[1] ** 2), -dh * qdot[0] ** 2]
    )
    s1 = math.sin(q[0])
    s12 = math.sin(q[0] + q[1])
    gA = (p.m1 * p.lc1 + p.m2 * p.l1) * p.g
    gB = p.m2 * p.lc2 * p.g
    dG_dq = np.array(
        [
            [-gA * s1 - gB * s12, -gB * s12],
            [-gB * s12, -gB * s12],
        ]
    )
    return LinearizedErrorDynamics(S=S, N_term=dMq_dq + dCq_dq + dG_dq)
