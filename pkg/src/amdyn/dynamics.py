"""Lagrangian dynamics of the floating-base system.

Provides the mass matrix M, the Coriolis terms by three routes (Christoffel
symbols, the energy formulation, and the mixed factorized form), the gravity
vector, force/allocation mappings, and forward/inverse dynamics.

Exact partial derivatives of M and E_pot are obtained by differentiating the
assembly with forward-mode dual numbers; no finite differences are used
outside the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _assembly as asm
from ._dualpy import Dual as PyDual
from .dual import Dual, partials, value
from .kinematics import SystemState
from .urdf import KinematicTree

DEFAULT_NU = 1.0


@dataclass
class SystemMatrices:
    """Mass matrix, its coordinate partials, and the gravity vector at a state.

    dM[k, i, j] holds dM_ij/dx_k, enabling both the Christoffel matrix C and
    the lumped vector h without further model evaluations.
    """

    m: np.ndarray        # (N, N)
    dm: np.ndarray       # (N, N, N)
    g: np.ndarray        # (N,)

    def coriolis_matrix(self, xdot):
        xd = np.asarray(xdot, dtype=float)
        t1 = np.einsum("kij,k->ij", self.dm, xd)
        t2 = np.einsum("jik,k->ij", self.dm, xd)
        t3 = np.einsum("ijk,k->ij", self.dm, xd)
        return 0.5 * (t1 + t2 - t3)

    def mixed_h(self, xdot):
        xd = np.asarray(xdot, dtype=float)
        mdot = np.einsum("kij,k->ij", self.dm, xd)
        return mdot @ xd - 0.5 * np.einsum("ijk,j,k->i", self.dm, xd, xd)


def _scalars(state: SystemState, cls=None):
    """Split a state's x into (p, q, theta) scalar lists, optionally seeded."""
    x = state.x
    if cls is None:
        return x[:3], x[3:7], x[7:]
    seeded = cls.seed(x)
    return seeded[:3], seeded[3:7], seeded[7:]


def evaluate(tree: KinematicTree, state: SystemState, nu=DEFAULT_NU,
             dual_cls=None) -> SystemMatrices:
    """M, dM/dx, and g in a single dual-number pass over the assembly.

    dual_cls selects the dual-number implementation (defaults to the compiled
    backend when available); used by the backend benchmark.
    """
    cm = asm.compile_tree(tree)
    n = cm.n_coords
    p, q, theta = _scalars(state, Dual if dual_cls is None else dual_cls)
    fr, _, wj, m_d = asm.system_assembly(cm, q, theta, nu=nu)
    m = np.empty((n, n))
    dm = np.empty((n, n, n))
    for i in range(n):
        for j in range(n):
            e = m_d[i, j]
            m[i, j] = value(e)
            dm[:, i, j] = partials(e, n)
    e_pot = asm.potential_energy_g(cm, q, p, fr, tree.params.gravity)
    g = partials(e_pot, n)
    return SystemMatrices(m=m, dm=dm, g=g)


def mass_matrix(tree: KinematicTree, state: SystemState, nu=DEFAULT_NU) -> np.ndarray:
    """M = J_W^T M_L J_W; symmetric positive semi-definite, function of x only."""
    cm = asm.compile_tree(tree)
    p, q, theta = _scalars(state)
    _, _, _, m = asm.system_assembly(cm, q, theta, nu=nu)
    return np.asarray(m, dtype=float)


def kinetic_energy(tree: KinematicTree, state: SystemState, nu=DEFAULT_NU) -> float:
    """E_kin = 0.5 xdot^T M xdot."""
    xd = state.xdot
    return 0.5 * float(xd @ mass_matrix(tree, state, nu=nu) @ xd)


def potential_energy(tree: KinematicTree, state: SystemState) -> float:
    """E_pot = -sum_i m_i g0 . p_i over body world positions."""
    cm = asm.compile_tree(tree)
    p, q, theta = _scalars(state)
    fr = asm.forward_frames(cm, theta)
    return float(asm.potential_energy_g(cm, q, p, fr, tree.params.gravity))


def gravity_vector(tree: KinematicTree, state: SystemState) -> np.ndarray:
    """g = dE_pot/dx (exact, dual-number gradient)."""
    cm = asm.compile_tree(tree)
    n = cm.n_coords
    p, q, theta = _scalars(state, Dual)
    fr = asm.forward_frames(cm, theta)
    e_pot = asm.potential_energy_g(cm, q, p, fr, tree.params.gravity)
    return partials(e_pot, n)


def coriolis_christoffel(tree: KinematicTree, state: SystemState, nu=DEFAULT_NU) -> np.ndarray:
    """C_ij = 0.5 sum_k (dM_ij/dx_k + dM_ik/dx_j - dM_jk/dx_i) xdot_k."""
    return evaluate(tree, state, nu=nu).coriolis_matrix(state.xdot)


def coriolis_mixed_h(tree: KinematicTree, state: SystemState, nu=DEFAULT_NU) -> np.ndarray:
    """h = Mdot xdot - 0.5 * d(xdot^T M xdot)/dx (factorized/lumped mix)."""
    return evaluate(tree, state, nu=nu).mixed_h(state.xdot)


def _kinetic_generic(cm, q, theta, v, nu):
    """0.5 v^T M(q, theta) v over generic scalars."""
    _, _, _, m = asm.system_assembly(cm, q, theta, nu=nu)
    n = cm.n_coords
    e = 0.0
    for i in range(n):
        row = 0.0
        for j in range(n):
            row = row + m[i, j] * v[j]
        e = e + v[i] * row
    return 0.5 * e


def coriolis_energy_h(tree: KinematicTree, state: SystemState, nu=DEFAULT_NU) -> np.ndarray:
    """h = d/dx(dE_kin/dxdot) xdot - dE_kin/dx via nested dual numbers.

    The first term is a directional x-derivative (along xdot) of the xdot
    gradient, taken with one level of nesting; the second is a plain gradient.
    This route shares only the energy assembly with the Christoffel path, so
    the two serve as independent cross-checks.
    """
    cm = asm.compile_tree(tree)
    n = cm.n_coords
    x, xd = state.x, state.xdot

    # outer scalar: first derivative along eps with x(eps) = x + eps*xdot
    x_eps = [PyDual(xi, np.array([di])) for xi, di in zip(x, xd)]
    x_nested = [PyDual(xe, np.zeros(n)) for xe in x_eps]
    v_nested = PyDual.seed([PyDual(di, np.array([0.0])) for di in xd])
    e_kin = _kinetic_generic(cm, x_nested[3:7], x_nested[7:], v_nested, nu)
    s = np.atleast_1d(e_kin.eps)     # dE/dxdot_i, each still a function of eps
    term_a = np.array([si.eps[0] if isinstance(si, PyDual) else 0.0 for si in s],
                      dtype=float)

    seeded = Dual.seed(x)
    e_x = _kinetic_generic(cm, seeded[3:7], seeded[7:],
                           [Dual.lift(di, n) for di in xd], nu)
    term_b = partials(e_x, n)
    return term_a - term_b


def force_mapping(state: SystemState) -> np.ndarray:
    """M_F = blockdiag(R, 2 G^T, I): body-frame wrench to generalized forces.

    Input layout: [f_xyz (base frame) | torque (body frame) | joint torques];
    output layout matches x: [translation | quaternion | joints].
    """
    n_j = state.n_joints
    mf = np.zeros((7 + n_j, 6 + n_j))
    mf[:3, :3] = np.asarray(asm.rotation_g(state.q), dtype=float)
    mf[3:7, 3:6] = 2.0 * np.asarray(asm.g_matrix_g(state.q), dtype=float).T
    mf[7:, 6:] = np.eye(n_j)
    return mf


def motor_allocation(tree: KinematicTree) -> np.ndarray:
    """M_mot: [thrust magnitudes | joint torques] -> base-frame wrench + joint torques.

    Thrust columns stack the motor axis over the torque arm r x n plus the
    drag coupling s (k_p / k_t) n; the joint block is the identity.
    """
    motors = tree.params.motors
    n_m, n_j = len(motors), tree.n_joints
    m = np.zeros((6 + n_j, n_m + n_j))
    for i, mot in enumerate(motors):
        m[:3, i] = mot.axis
        m[3:6, i] = np.cross(mot.position, mot.axis) + mot.spin * (mot.k_p / mot.k_t) * mot.axis
    m[6:, n_m:] = np.eye(n_j)
    return m


def propulsion_forces(tree: KinematicTree, omega_rpm) -> np.ndarray:
    """Base-frame wrench [f; tau] from motor speeds in rpm.

    f_thrust_i = n_i k_t w_i^2, f_drag_i = n_i k_p s_i w_i^2, torque from
    thrust arms plus drag.
    """
    motors = tree.params.motors
    omega_rpm = np.asarray(omega_rpm, dtype=float)
    if omega_rpm.shape != (len(motors),):
        raise ValueError(f"expected {len(motors)} motor speeds, got {omega_rpm.shape}")
    if np.any(omega_rpm < 0):
        raise ValueError("motor speeds must be non-negative")
    wrench = np.zeros(6)
    for mot, w in zip(motors, omega_rpm):
        thrust = mot.k_t * w * w * mot.axis
        drag = mot.k_p * mot.spin * w * w * mot.axis
        wrench[:3] += thrust
        wrench[3:] += np.cross(mot.position, thrust) + drag
    return wrench


def pwm_to_rpm(tree: KinematicTree, u) -> np.ndarray:
    """Linear PWM-to-speed map; commands outside [0, 1] are clamped (warning)."""
    import warnings

    u = np.asarray(u, dtype=float)
    if np.any(u < 0) or np.any(u > 1):
        warnings.warn("PWM commands clamped to [0, 1]")
        u = np.clip(u, 0.0, 1.0)
    return u * tree.params.prop_peak_rpm


def spd_solve(m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve M y = b for symmetric positive (semi-)definite M.

    Falls back to a small diagonal regularization (1e-12 trace(M)/dim) if the
    Cholesky factorization fails near singularity.
    """
    m = 0.5 * (m + m.T)
    try:
        c = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        eps = 1e-12 * np.trace(m) / m.shape[0]
        c = np.linalg.cholesky(m + eps * np.eye(m.shape[0]))
    z = np.linalg.solve(c, b)
    return np.linalg.solve(c.T, z)


def forward_dynamics(tree: KinematicTree, state: SystemState, f_x=None,
                     nu=DEFAULT_NU, matrices: SystemMatrices | None = None) -> np.ndarray:
    """Unconstrained acceleration xddot = M^-1 (f_x - C xdot - g)."""
    sm = matrices if matrices is not None else evaluate(tree, state, nu=nu)
    n = sm.m.shape[0]
    f = np.zeros(n) if f_x is None else np.asarray(f_x, dtype=float)
    rhs = f - sm.mixed_h(state.xdot) - sm.g
    return spd_solve(sm.m, rhs)


def inverse_dynamics(tree: KinematicTree, state: SystemState, xddot,
                     nu=DEFAULT_NU, matrices: SystemMatrices | None = None) -> np.ndarray:
    """Generalized force f_x = M xddot + C xdot + g."""
    sm = matrices if matrices is not None else evaluate(tree, state, nu=nu)
    return sm.m @ np.asarray(xddot, dtype=float) + sm.mixed_h(state.xdot) + sm.g
