"""Independent numerical oracles for the dynamics engine.

Every check here validates a derived quantity against an implementation-
independent route: finite differences of scalar energies and poses, cross-
method comparisons, algebraic identities, and conservation laws.  The CLI
``validate`` subcommand runs this suite; the test suite pins its tolerances.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import _assembly as asm
from . import constraint as cn
from . import dynamics, sim
from .kinematics import SystemState
from .urdf import KinematicTree


@dataclass
class OracleResult:
    name: str
    max_err: float
    tol: float

    @property
    def passed(self):
        return bool(self.max_err <= self.tol)

    def __str__(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"[{tag}] {self.name}: max err {self.max_err:.3e} (tol {self.tol:.0e})"


def random_state(tree: KinematicTree, rng, rest=False) -> SystemState:
    """Random unit-quaternion state; velocity tangent (q . dq = 0) as in flight."""
    n_j = tree.n_joints
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    if rest:
        dp, dq, dth = np.zeros(3), np.zeros(4), np.zeros(n_j)
    else:
        dp = rng.standard_normal(3)
        dq = rng.standard_normal(4)
        dq -= q * (q @ dq)
        dth = rng.standard_normal(n_j)
    return SystemState(p=rng.standard_normal(3), q=q,
                       theta=rng.standard_normal(n_j),
                       dp=dp, dq=dq, dtheta=dth, strict=False)


def _tangent_direction(state: SystemState, rng) -> np.ndarray:
    dx = rng.standard_normal(state.x.shape[0])
    dx[3:7] -= state.q * (state.q @ dx[3:7])
    return dx


def _body_poses(tree: KinematicTree, x) -> np.ndarray:
    """Stacked world positions and rotations [(3,), (3,3)] per body."""
    cm = asm.compile_tree(tree)
    p, q, theta = x[:3], x[3:7], x[7:]
    fr = asm.forward_frames(cm, list(theta))
    rot = np.asarray(asm.rotation_g(list(q)), dtype=float)
    pos = [p + rot @ np.asarray(fr.body_pos[bi], dtype=float)
           for bi in range(cm.n_bodies)]
    rots = [rot @ np.asarray(fr.body_rot[bi], dtype=float)
            for bi in range(cm.n_bodies)]
    return pos, rots


def _vee(m):
    return np.array([m[2, 1], m[0, 2], m[1, 0]])


def fd_jacobian(tree: KinematicTree, state: SystemState, rng,
                h=1e-6, directions=5) -> float:
    """System Jacobian vs central differences of body poses.

    The directional derivative is taken along tangent directions (q . dq = 0),
    where the homogeneous Jacobian is exact; the rotational rows are checked
    through the world angular velocity extracted from dR R^T.
    """
    from .kinematics import system_jacobian

    cm = asm.compile_tree(tree)
    jw = system_jacobian(tree, state)
    n_b = cm.n_bodies
    err = 0.0
    for _ in range(directions):
        dx = _tangent_direction(state, rng)
        pos_p, rot_p = _body_poses(tree, state.x + h * dx)
        pos_m, rot_m = _body_poses(tree, state.x - h * dx)
        jdx = jw @ dx
        for bi in range(n_b):
            v_fd = (pos_p[bi] - pos_m[bi]) / (2 * h)
            err = max(err, np.abs(jdx[3 * bi:3 * bi + 3] - v_fd).max())
            dr = (rot_p[bi] - rot_m[bi]) / (2 * h)
            w_fd = _vee(dr @ ((rot_p[bi] + rot_m[bi]) / 2).T)
            w_j = jdx[3 * n_b + 4 * bi + 1: 3 * n_b + 4 * bi + 4]
            err = max(err, np.abs(w_j - w_fd).max())
            # norm-rate pseudo-velocity row vanishes for tangent directions
            err = max(err, abs(jdx[3 * n_b + 4 * bi]))
    return err


def fd_hessian_kinetic(tree: KinematicTree, state: SystemState, h=1e-3) -> float:
    """M vs the finite-difference Hessian of E_kin in xdot (E is quadratic)."""
    m = dynamics.mass_matrix(tree, state)
    n = m.shape[0]
    x = state.x
    xd0 = state.xdot
    err = 0.0

    def e_kin(xd):
        st = SystemState.from_vectors(x, xd)
        return dynamics.kinetic_energy(tree, st)

    for i in range(n):
        for j in range(i, n):
            ei, ej = np.eye(n)[i], np.eye(n)[j]
            hij = (e_kin(xd0 + h * ei + h * ej) - e_kin(xd0 + h * ei - h * ej)
                   - e_kin(xd0 - h * ei + h * ej)
                   + e_kin(xd0 - h * ei - h * ej)) / (4 * h * h)
            err = max(err, abs(hij - m[i, j]))
    return err


def fd_gravity(tree: KinematicTree, state: SystemState, h=1e-6) -> float:
    """g vs the central-difference gradient of E_pot."""
    g = dynamics.gravity_vector(tree, state)
    x = state.x
    err = 0.0
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = h
        fd = (dynamics.potential_energy(tree, SystemState.from_vectors(x + e, state.xdot))
              - dynamics.potential_energy(tree, SystemState.from_vectors(x - e, state.xdot))) / (2 * h)
        err = max(err, abs(fd - g[i]))
    return err


def coriolis_methods(tree: KinematicTree, state: SystemState) -> float:
    """max |C xdot - h_energy| and |C xdot - h_mixed| over both comparisons."""
    sm = dynamics.evaluate(tree, state)
    cxd = sm.coriolis_matrix(state.xdot) @ state.xdot
    h_m = sm.mixed_h(state.xdot)
    h_e = dynamics.coriolis_energy_h(tree, state)
    return max(np.abs(cxd - h_e).max(), np.abs(cxd - h_m).max())


def skew_symmetry(tree: KinematicTree, state: SystemState, h=2.5e-4) -> float:
    """|| (Mdot - 2C) + (Mdot - 2C)^T ||_inf with Mdot by directional FD.

    The finite-difference Mdot makes this an independent check of the dual-
    number dM tensor inside C, not an algebraic tautology.  A fourth-order
    stencil keeps truncation error well under the tolerance on 3-link models.
    """
    sm = dynamics.evaluate(tree, state)
    c = sm.coriolis_matrix(state.xdot)
    x, xd = state.x, state.xdot

    def m_at(s):
        return dynamics.mass_matrix(tree, SystemState.from_vectors(x + s * xd, xd))

    mdot = (-m_at(2 * h) + 8 * m_at(h) - 8 * m_at(-h) + m_at(-2 * h)) / (12 * h)
    s = (mdot - 2 * c) + (mdot - 2 * c).T
    return np.abs(s).max()


def round_trip(tree: KinematicTree, state: SystemState, rng) -> float:
    """forward(inverse(a)) = a and inverse(forward(f)) = f."""
    n = 7 + tree.n_joints
    sm = dynamics.evaluate(tree, state)
    a = rng.standard_normal(n)
    f = dynamics.inverse_dynamics(tree, state, a, matrices=sm)
    a2 = dynamics.forward_dynamics(tree, state, f, matrices=sm)
    f0 = rng.standard_normal(n)
    a3 = dynamics.forward_dynamics(tree, state, f0, matrices=sm)
    f2 = dynamics.inverse_dynamics(tree, state, a3, matrices=sm)
    return max(np.abs(a2 - a).max(), np.abs(f2 - f0).max())


def free_fall(tree: KinematicTree, state: SystemState) -> float:
    """Constrained acceleration from rest: translation equals gravity exactly."""
    cd = cn.constrained_derivatives(tree, state)
    return np.abs(cd.vdot_c[:3] - tree.params.gravity).max()


def zero_gravity(tree: KinematicTree) -> KinematicTree:
    params = dataclasses.replace(tree.params, gravity=np.zeros(3))
    return KinematicTree(tree.name, list(tree.nodes.values()), params)


def energy_drift(tree: KinematicTree, state: SystemState, steps=100,
                 dt=1.0 / 240.0) -> float:
    """Max |dE_kin| per step (RK4), zero gravity and zero applied force."""
    t0 = zero_gravity(tree)
    x, v = state.x, state.xdot
    e_prev = dynamics.kinetic_energy(t0, SystemState.from_vectors(x, v))
    worst = 0.0
    for _ in range(steps):
        x, v = sim.rk4(t0, x, v, None, dt, dt, dynamics.DEFAULT_NU)
        e = dynamics.kinetic_energy(t0, SystemState.from_vectors(x, v))
        worst = max(worst, abs(e - e_prev))
        e_prev = e
    return worst


def run_suite(tree: KinematicTree, seed=42, n_states=10) -> list:
    """The full oracle suite on one model; returns OracleResult entries."""
    rng = np.random.default_rng(seed)
    states = [random_state(tree, rng) for _ in range(n_states)]
    rest = [random_state(tree, rng, rest=True) for _ in range(3)]
    results = [
        OracleResult("fd_jacobian",
                     max(fd_jacobian(tree, s, rng) for s in states[:3]), 1e-6),
        OracleResult("fd_hessian_kinetic",
                     max(fd_hessian_kinetic(tree, s) for s in states[:3]), 1e-6),
        OracleResult("fd_gravity",
                     max(fd_gravity(tree, s) for s in states[:3]), 1e-7),
        OracleResult("coriolis_methods",
                     max(coriolis_methods(tree, s) for s in states), 1e-8),
        OracleResult("skew_symmetry",
                     max(skew_symmetry(tree, s) for s in states), 1e-8),
        OracleResult("round_trip",
                     max(round_trip(tree, s, rng) for s in states), 1e-8),
        OracleResult("free_fall",
                     max(free_fall(tree, s) for s in rest), 1e-10),
    ]
    mild = random_state(tree, np.random.default_rng(seed + 1))
    results.append(OracleResult("energy_drift", energy_drift(tree, mild), 1e-6))
    return results
