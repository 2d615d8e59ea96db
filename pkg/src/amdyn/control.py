"""Computed-torque control with PD error feedback.

The control law linearizes the dynamics exactly on the nominal model:
tau = M nu + C xdot + g with nu = M_F (xdd_d + K_v edot + K_p e), so the
closed-loop error obeys linear second-order dynamics per channel.  Generalized
torques map to body wrench via the pseudo-inverse of M_F and on to motor
forces via the allocation matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _assembly as asm
from . import dynamics
from .kinematics import SystemState
from .quat import Quaternion, conjugate, qmul
from .urdf import KinematicTree


class ControlError(RuntimeError):
    pass


@dataclass
class Gains:
    """Diagonal PD gains over [translation(3) | attitude(3) | joints]."""

    k_v: np.ndarray
    k_p: np.ndarray

    def __post_init__(self):
        self.k_v = np.asarray(self.k_v, dtype=float)
        self.k_p = np.asarray(self.k_p, dtype=float)
        if self.k_v.shape != self.k_p.shape or self.k_v.ndim != 1:
            raise ValueError("k_v and k_p must be 1-D and the same length")
        if np.any(self.k_v < 0) or np.any(self.k_p < 0):
            raise ValueError("gains must be non-negative")

    @classmethod
    def from_params(cls, tree: KinematicTree) -> "Gains":
        p = tree.params
        if p.gain_v is None or p.gain_p is None:
            raise ControlError("model sidecar defines no controller gains")
        return cls(p.gain_v, p.gain_p)


@dataclass
class Reference:
    """Desired state (and optional feedforward acceleration, body layout 6+N_J)."""

    p: np.ndarray
    q: np.ndarray
    theta: np.ndarray = field(default_factory=lambda: np.zeros(0))
    dp: np.ndarray = None
    omega_body: np.ndarray = None
    dtheta: np.ndarray = None
    xdd: np.ndarray = None

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.q = np.asarray(self.q, dtype=float)
        if abs(np.linalg.norm(self.q) - 1.0) > 1e-9:
            raise ValueError("reference quaternion must be unit length")
        self.theta = np.asarray(self.theta, dtype=float)
        n_j = self.theta.shape[0]
        self.dp = np.zeros(3) if self.dp is None else np.asarray(self.dp, dtype=float)
        self.omega_body = np.zeros(3) if self.omega_body is None \
            else np.asarray(self.omega_body, dtype=float)
        self.dtheta = np.zeros(n_j) if self.dtheta is None \
            else np.asarray(self.dtheta, dtype=float)
        self.xdd = np.zeros(6 + n_j) if self.xdd is None \
            else np.asarray(self.xdd, dtype=float)


def body_angular_velocity(state: SystemState) -> np.ndarray:
    """omega_body = 2 G(q) qdot."""
    g = np.asarray(asm.g_matrix_g(state.q), dtype=float)
    return 2.0 * g @ state.dq


def error_vectors(state: SystemState, ref: Reference):
    """(e, edot), both 6+N_J: position, attitude (error-quaternion vector), joints.

    The error quaternion q^* (x) q_ref is sign-flipped to non-negative scalar
    part, giving the shortest rotation; its vector part is the attitude error.
    """
    qe = qmul(conjugate(Quaternion.from_array(state.q)),
              Quaternion.from_array(ref.q)).as_array()
    if qe[0] < 0:
        qe = -qe
    e = np.concatenate([ref.p - state.p, qe[1:], ref.theta - state.theta])
    edot = np.concatenate([ref.dp - state.dp,
                           ref.omega_body - body_angular_velocity(state),
                           ref.dtheta - state.dtheta])
    return e, edot


def computed_torque(tree: KinematicTree, state: SystemState, ref: Reference,
                    gains: Gains, matrices=None):
    """(tau, f_mot): generalized forces and allocated motor/joint forces.

    nu = M_F (xdd_d + K_v edot + K_p e); tau = M nu + C xdot + g;
    f_b = M_F^+ tau; f_mot = M_mot^+ f_b.
    """
    e, edot = error_vectors(state, ref)
    if gains.k_v.shape[0] != e.shape[0]:
        raise ValueError(f"gains must have {e.shape[0]} entries")
    sm = matrices if matrices is not None else dynamics.evaluate(tree, state)
    m_f = dynamics.force_mapping(state)
    nu_cmd = m_f @ (ref.xdd + gains.k_v * edot + gains.k_p * e)
    tau = sm.m @ nu_cmd + sm.mixed_h(state.xdot) + sm.g
    f_b = np.linalg.pinv(m_f, rcond=1e-10) @ tau
    m_mot = dynamics.motor_allocation(tree)
    # controllability: z-thrust, the three body torques, and every joint must
    # be realizable (lateral base force never is for fixed parallel rotors)
    if np.linalg.matrix_rank(m_mot, tol=1e-10) < 4 + tree.n_joints:
        raise ControlError("allocation matrix is rank-deficient")
    f_mot = np.linalg.pinv(m_mot, rcond=1e-10) @ f_b
    return tau, f_mot


def saturate_motor_forces(tree: KinematicTree, f_mot: np.ndarray) -> np.ndarray:
    """Clamp thrusts to [0, k_t peak^2] and joint torques to +-peak."""
    p = tree.params
    out = np.asarray(f_mot, dtype=float).copy()
    n_m = len(p.motors)
    for i, m in enumerate(p.motors):
        out[i] = min(max(out[i], 0.0), m.k_t * p.prop_peak_rpm ** 2)
    out[n_m:] = np.clip(out[n_m:], -p.joint_peak_torque, p.joint_peak_torque)
    return out


def motor_commands(tree: KinematicTree, f_mot: np.ndarray):
    """Normalized prop commands and joint torque commands realizing f_mot."""
    p = tree.params
    n_m = len(p.motors)
    f = saturate_motor_forces(tree, f_mot)
    u = np.array([np.sqrt(f[i] / m.k_t) / p.prop_peak_rpm
                  for i, m in enumerate(p.motors)])
    return u, f[n_m:]


def trim_hover(tree: KinematicTree, state: SystemState) -> np.ndarray:
    """Motor forces that null all accelerations at rest (gravity balance)."""
    if np.linalg.norm(state.xdot) > 1e-9:
        raise ControlError("trim requires a state at rest")
    sm = dynamics.evaluate(tree, state)
    m_f = dynamics.force_mapping(state)
    f_b = np.linalg.pinv(m_f, rcond=1e-10) @ sm.g
    m_mot = dynamics.motor_allocation(tree)
    f_mot, *_ = np.linalg.lstsq(m_mot, f_b, rcond=None)
    if np.linalg.norm(m_mot @ f_mot - f_b) > 1e-8:
        raise ControlError("no actuator combination balances gravity here")
    n_m = len(tree.params.motors)
    if np.any(f_mot[:n_m] < -1e-9):
        raise ControlError("trim needs negative thrust; infeasible")
    return f_mot
