"""Quaternion unit-norm constraint via corrective projection.

The unit quaternion is treated as a holonomic constraint phi(x) = |q| - 1 = 0
on the generalized coordinates rather than by renormalization.  Velocities and
accelerations are projected back toward the constraint manifold with a
Baumgarte-style stabilization over a timescale dt_c (normally the integrator
step), using the M-metric pseudo-inverse so corrections are orthogonal to the
manifold tangent space in the kinetic-energy metric.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import dynamics
from .kinematics import SystemState
from .urdf import KinematicTree

EIG_FLOOR = 1e-12
PINV_RCOND = 1e-10


@dataclass
class ConstrainedDerivative:
    xdot_c: np.ndarray    # corrected velocity
    vdot_c: np.ndarray    # corrected acceleration
    phi: float
    phidot: float


def constraint_residuals(state: SystemState):
    """phi = |q| - 1 and phidot = (q . qdot)/|q|."""
    q, dq = state.q, state.dq
    nq = float(np.linalg.norm(q))
    if nq == 0.0:
        raise ZeroDivisionError("zero quaternion has no norm direction")
    return nq - 1.0, float(q @ dq) / nq


def constraint_jacobian(state: SystemState) -> np.ndarray:
    """A = dphi/dx: zero except for the quaternion block q^T/|q|."""
    n = 7 + state.n_joints
    a = np.zeros((1, n))
    nq = np.linalg.norm(state.q)
    a[0, 3:7] = state.q / nq
    return a


def constraint_hessian(state: SystemState) -> np.ndarray:
    """d2phi/dx2: quaternion block (I - qhat qhat^T)/|q|, zero elsewhere."""
    n = 7 + state.n_joints
    h = np.zeros((n, n))
    nq = np.linalg.norm(state.q)
    qh = state.q / nq
    h[3:7, 3:7] = (np.eye(4) - np.outer(qh, qh)) / nq
    return h


def _inv_sqrt(m: np.ndarray) -> np.ndarray:
    """Symmetric inverse square root with an eigenvalue floor of 1e-12 lam_max."""
    w, v = np.linalg.eigh(0.5 * (m + m.T))
    floor = EIG_FLOOR * w[-1]
    w = np.maximum(w, floor)
    return (v / np.sqrt(w)) @ v.T


def constrained_derivatives(tree: KinematicTree, state: SystemState, f_x=None,
                            dt_c: float = 1.0 / 240.0, nu=dynamics.DEFAULT_NU,
                            matrices=None) -> ConstrainedDerivative:
    """Velocity and acceleration respecting the unity constraint.

    xdot_c = v + M^(-1/2) B+ (-A v - phi/dt_c)
    vdot_c = a + M^(-1/2) B+ (b_v - A a - phidot_c/dt_c)

    with B = A M^(-1/2) and b_v = -xdot_c^T H xdot_c (the constraint is
    time-invariant, so its explicit time derivatives vanish).
    """
    if dt_c <= 0:
        raise ValueError("dt_c must be positive")
    sm = matrices if matrices is not None else dynamics.evaluate(tree, state, nu=nu)
    phi, _ = constraint_residuals(state)
    a_mat = constraint_jacobian(state)
    m_is = _inv_sqrt(sm.m)
    b = a_mat @ m_is
    b_pinv = np.linalg.pinv(b, rcond=PINV_RCOND)
    proj = m_is @ b_pinv

    v = state.xdot
    xdot_c = v + proj @ (-(a_mat @ v) - np.array([phi / dt_c]))

    accel = dynamics.forward_dynamics(tree, state, f_x, nu=nu, matrices=sm)
    h_mat = constraint_hessian(state)
    b_v = -float(xdot_c @ h_mat @ xdot_c)
    nq = np.linalg.norm(state.q)
    phidot_c = float(state.q @ xdot_c[3:7]) / nq
    vdot_c = accel + proj @ (np.array([b_v]) - (a_mat @ accel)
                             - np.array([phidot_c / dt_c]))
    return ConstrainedDerivative(xdot_c=xdot_c, vdot_c=vdot_c,
                                 phi=phi, phidot=phidot_c)
