"""Floating-base kinematics: frames, Jacobians, and world velocities.

Coordinates are x = [p q theta] with p the base position in the world frame,
q the base orientation quaternion (w x y z), and theta the joint angles, so
dim(x) = 7 + N_J.  All heavy lifting happens in the scalar-generic assembly
routines; this module provides the float-typed public API.
"""

from __future__ import annotations

import numpy as np

from ._assembly import (
    base_jacobians_g,
    compile_tree,
    forward_frames,
    rotation_g,
    world_jacobians_g,
)
from .urdf import KinematicTree

NORM_TOL_INIT = 1e-9
NORM_TOL_SIM = 1e-3


class SystemState:
    """Generalized position and velocity of the floating-base system.

    The quaternion is held as a plain 4-vector (w x y z): the unit norm is a
    holonomic constraint maintained by corrective projection, so mid-flight
    states may carry a small norm defect.  ``strict=True`` (the default, for
    initialization) enforces |norm(q) - 1| <= 1e-9; simulation states use the
    looser 1e-3 bound.
    """

    __slots__ = ("p", "q", "theta", "dp", "dq", "dtheta")

    def __init__(self, p, q, theta=(), dp=(0.0, 0.0, 0.0),
                 dq=(0.0, 0.0, 0.0, 0.0), dtheta=None, strict=True):
        self.p = np.asarray(p, dtype=float).copy()
        self.q = np.asarray(q, dtype=float).copy()
        self.theta = np.asarray(theta, dtype=float).copy()
        self.dp = np.asarray(dp, dtype=float).copy()
        self.dq = np.asarray(dq, dtype=float).copy()
        self.dtheta = (np.zeros_like(self.theta) if dtheta is None
                       else np.asarray(dtheta, dtype=float).copy())
        if self.p.shape != (3,) or self.q.shape != (4,):
            raise ValueError("p must be a 3-vector and q a 4-vector")
        if self.dp.shape != (3,) or self.dq.shape != (4,):
            raise ValueError("dp must be a 3-vector and dq a 4-vector")
        if self.theta.shape != self.dtheta.shape:
            raise ValueError("theta and dtheta dimensions differ")
        tol = NORM_TOL_INIT if strict else NORM_TOL_SIM
        defect = abs(float(np.linalg.norm(self.q)) - 1.0)
        if not defect <= tol:
            raise ValueError(f"quaternion norm defect {defect:.3e} exceeds {tol:.0e}")

    @property
    def n_joints(self):
        return self.theta.shape[0]

    @property
    def x(self):
        return np.concatenate([self.p, self.q, self.theta])

    @property
    def xdot(self):
        return np.concatenate([self.dp, self.dq, self.dtheta])

    @classmethod
    def from_vectors(cls, x, xdot, strict=False):
        x = np.asarray(x, dtype=float)
        xdot = np.asarray(xdot, dtype=float)
        return cls(x[:3], x[3:7], x[7:], xdot[:3], xdot[3:7], xdot[7:],
                   strict=strict)

    def copy(self):
        return SystemState(self.p, self.q, self.theta, self.dp, self.dq,
                           self.dtheta, strict=False)

    def __repr__(self):
        return (f"SystemState(p={self.p}, q={self.q}, theta={self.theta}, "
                f"dp={self.dp}, dq={self.dq}, dtheta={self.dtheta})")


def _as_float(a):
    return np.asarray(a, dtype=float)


def forward_kinematics(tree: KinematicTree, theta):
    """World-of-base frames: per-joint (position, axis) and per-body (position, rotation)."""
    cm = compile_tree(tree)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (cm.n_joints,):
        raise ValueError(f"expected {cm.n_joints} joint angles, got {theta.shape}")
    fr = forward_frames(cm, theta)
    return ([_as_float(p) for p in fr.joint_pos],
            [_as_float(a) for a in fr.joint_axis],
            [_as_float(p) for p in fr.body_pos],
            [_as_float(r) for r in fr.body_rot])


def base_frame_jacobians(tree: KinematicTree, theta):
    """Per-body (J_t, J_omega), each 3 x N_J, in the base link frame.

    Columns of joints outside the body's parent chain are exactly zero.
    """
    cm = compile_tree(tree)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (cm.n_joints,):
        raise ValueError(f"expected {cm.n_joints} joint angles, got {theta.shape}")
    fr = forward_frames(cm, theta)
    return [(_as_float(jt), _as_float(jw)) for jt, jw in base_jacobians_g(cm, fr)]


def system_jacobian(tree: KinematicTree, state: SystemState):
    """J_W (7 N_B x (7+N_J)): translational row blocks for all bodies, then rotational.

    World velocities follow as J_W @ xdot.
    """
    cm = compile_tree(tree)
    fr = forward_frames(cm, state.theta)
    bj = base_jacobians_g(cm, fr)
    wj = world_jacobians_g(cm, state.q, fr, bj)
    rows = [_as_float(j) for j in wj.jt] + [_as_float(j) for j in wj.jw]
    return np.vstack(rows)


def world_velocity(tree: KinematicTree, state: SystemState):
    """Per-body world linear velocity (3-vector) and angular velocity (4-vector).

    The 4-vector is (0, omega) for exact states; use angular_velocity_3 to strip it.
    """
    cm = compile_tree(tree)
    jw = system_jacobian(tree, state)
    v = jw @ state.xdot
    nb = cm.n_bodies
    out = []
    for i in range(nb):
        out.append((v[3 * i:3 * i + 3], v[3 * nb + 4 * i:3 * nb + 4 * i + 4]))
    return out


def angular_velocity_3(omega4):
    """Strip the leading (scaling-direction) entry of a 4-vector angular velocity."""
    return np.asarray(omega4, dtype=float)[1:]


def base_rotation(state: SystemState):
    """World-from-base rotation matrix of the state's quaternion."""
    return _as_float(rotation_g(state.q))
