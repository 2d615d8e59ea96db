"""Scalar-generic kinematics/dynamics assembly.

Every function here is written against a generic scalar type: plain floats,
dual numbers (for exact derivatives), or symbolic expressions (for code
generation) all flow through the same formulas.  Containers are numpy object
arrays; scalar-times-matrix products are kept explicit so scalar types only
need the ring operations plus sin/cos.

Column entries for joints that cannot move a body are written as literal 0.0
and never touched, so non-ancestor Jacobian columns are bitwise zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .urdf import KinematicTree


def sin_s(x):
    return math.sin(x) if isinstance(x, (int, float)) else x.sin()


def cos_s(x):
    return math.cos(x) if isinstance(x, (int, float)) else x.cos()


@dataclass
class _CNode:
    parent: int              # index into the topo-ordered node list, -1 for root
    static_r: np.ndarray     # 3x3 float
    static_p: np.ndarray     # 3 float
    pre_rot: int             # actuated joint index whose rotation precedes, or -1


@dataclass
class CompiledModel:
    tree: KinematicTree
    nodes: list                  # _CNode, topo order
    joint_nodes: np.ndarray      # node index per actuated joint
    joint_axes: np.ndarray       # (n_joints, 3) local axes
    body_nodes: np.ndarray       # node index per body (document order, base first)
    masses: np.ndarray           # (n_bodies,)
    inertias: np.ndarray         # (n_bodies, 3, 3)
    ancestors: np.ndarray        # (n_bodies, n_joints) bool

    @property
    def n_joints(self):
        return len(self.joint_nodes)

    @property
    def n_bodies(self):
        return len(self.body_nodes)

    @property
    def n_coords(self):
        return 7 + self.n_joints


def compile_tree(tree: KinematicTree) -> CompiledModel:
    """Flatten the kinematic tree for fast traversal (cached on the tree)."""
    if tree._compiled is not None:
        return tree._compiled
    order = [tree.base_link]
    children = {}
    for n in tree.nodes.values():
        if n.parent is not None:
            children.setdefault(n.parent, []).append(n.name)
    i = 0
    while i < len(order):
        order.extend(children.get(order[i], ()))
        i += 1
    index = {name: i for i, name in enumerate(order)}

    cnodes = []
    for name in order:
        node = tree.nodes[name]
        parent = tree.nodes[node.parent] if node.parent else None
        pre_rot = -1
        if parent is not None and parent.kind == "joint" and parent.joint_type == "revolute":
            pre_rot = tree.joint_index(parent.name)
        cnodes.append(_CNode(
            parent=index[node.parent] if node.parent else -1,
            static_r=node.origin.rotation, static_p=node.origin.translation,
            pre_rot=pre_rot))

    joint_nodes = np.array([index[j] for j in tree.joints], dtype=int)
    joint_axes = np.array([tree.nodes[j].axis for j in tree.joints]) \
        if tree.joints else np.zeros((0, 3))
    body_nodes = np.array([index[b] for b in tree.bodies], dtype=int)
    masses = np.array([tree.nodes[b].mass for b in tree.bodies])
    inertias = np.array([tree.nodes[b].inertia for b in tree.bodies])

    ancestors = np.zeros((len(body_nodes), len(joint_nodes)), dtype=bool)
    for bi, bname in enumerate(tree.bodies):
        for name in tree.parent_chain(bname):
            node = tree.nodes[name]
            if node.kind == "joint" and node.joint_type == "revolute":
                ancestors[bi, tree.joint_index(name)] = True

    cm = CompiledModel(tree, cnodes, joint_nodes, joint_axes, body_nodes,
                       masses, inertias, ancestors)
    tree._compiled = cm
    return cm


def rodrigues_g(theta, axis) -> np.ndarray:
    """Rotation matrix about a (float) unit axis by a generic angle scalar."""
    s, c = sin_s(theta), cos_s(theta)
    ax, ay, az = axis
    ux = np.array([[0.0, -az, ay], [az, 0.0, -ax], [-ay, ax, 0.0]])
    ux2 = ux @ ux
    out = np.empty((3, 3), dtype=object)
    for i in range(3):
        for j in range(3):
            out[i, j] = (1.0 if i == j else 0.0) + s * ux[i, j] + (1.0 - c) * ux2[i, j]
    return out


def cross_g(v) -> np.ndarray:
    out = np.empty((3, 3), dtype=object)
    out[0, 0] = out[1, 1] = out[2, 2] = 0.0
    out[0, 1] = -v[2]
    out[0, 2] = v[1]
    out[1, 0] = v[2]
    out[1, 2] = -v[0]
    out[2, 0] = -v[1]
    out[2, 1] = v[0]
    return out


def e_matrix_g(q) -> np.ndarray:
    """3x4 world angular-velocity map: [-q_v | q_w I + [q_v]x]."""
    w, x, y, z = q
    return np.array([
        [-x, w, -z, y],
        [-y, z, w, -x],
        [-z, -y, x, w],
    ], dtype=object)


def g_matrix_g(q) -> np.ndarray:
    """3x4 body angular-velocity map: [-q_v | q_w I - [q_v]x]."""
    w, x, y, z = q
    return np.array([
        [-x, w, z, -y],
        [-y, -z, w, x],
        [-z, y, -x, w],
    ], dtype=object)


def qr_matrix_g(q) -> np.ndarray:
    """Right-product operator (p (x) q as a matrix on p)."""
    w, x, y, z = q
    return np.array([
        [w, -x, -y, -z],
        [x, w, z, -y],
        [y, -z, w, x],
        [z, y, -x, w],
    ], dtype=object)


def rotation_g(q) -> np.ndarray:
    """Rotation matrix E G^T of the base quaternion."""
    return e_matrix_g(q) @ g_matrix_g(q).T


@dataclass
class Frames:
    joint_pos: list       # per actuated joint: (3,) position in the base link frame
    joint_axis: list      # per actuated joint: (3,) axis in the base link frame
    body_pos: list        # per body: (3,) in the base link frame
    body_rot: list        # per body: (3,3) base-link-to-body rotation


def forward_frames(cm: CompiledModel, theta) -> Frames:
    """Frames of all joints and bodies relative to the base link."""
    rot = [None] * len(cm.nodes)
    pos = [None] * len(cm.nodes)
    eye = np.eye(3)
    zero3 = np.zeros(3)
    for i, node in enumerate(cm.nodes):
        if node.parent < 0:
            rot[i], pos[i] = eye, zero3
            continue
        rp, pp = rot[node.parent], pos[node.parent]
        rs, ps = node.static_r, node.static_p
        if node.pre_rot >= 0:
            rj = rodrigues_g(theta[node.pre_rot], cm.joint_axes[node.pre_rot])
            rs = rj @ rs
            ps = rj @ ps
        rot[i] = rp @ rs
        pos[i] = pp + rp @ ps
    jp = [pos[k] for k in cm.joint_nodes]
    jax = [rot[k] @ cm.joint_axes[j] for j, k in enumerate(cm.joint_nodes)]
    bp = [pos[k] for k in cm.body_nodes]
    br = [rot[k] for k in cm.body_nodes]
    return Frames(jp, jax, bp, br)


def _cross3(a, b):
    return np.array([a[1] * b[2] - a[2] * b[1],
                     a[2] * b[0] - a[0] * b[2],
                     a[0] * b[1] - a[1] * b[0]], dtype=object)


def base_jacobians_g(cm: CompiledModel, fr: Frames):
    """Per-body translational and rotational Jacobians in the base link frame.

    Non-ancestor columns are exact zeros.
    """
    out = []
    for bi in range(cm.n_bodies):
        jt = np.zeros((3, cm.n_joints), dtype=object)
        jw = np.zeros((3, cm.n_joints), dtype=object)
        for k in range(cm.n_joints):
            if not cm.ancestors[bi, k]:
                continue
            n = fr.joint_axis[k]
            lever = np.array([fr.body_pos[bi][a] - fr.joint_pos[k][a] for a in range(3)],
                             dtype=object)
            jt[:, k] = _cross3(n, lever)
            jw[:, k] = n
        out.append((jt, jw))
    return out


@dataclass
class WorldJacobians:
    jt: list          # per body: 3 x (7+N_J)
    jw: list          # per body: 4 x (7+N_J)
    rot_base: np.ndarray


def world_jacobians_g(cm: CompiledModel, q, fr: Frames, base_jacs) -> WorldJacobians:
    """Per-body world-frame Jacobian blocks of the floating-base system.

    Translational rows: [I | -2 R [p]x G | R Jt];
    rotational rows (4-vector): [0 | 2 QR^T | (0; R Jw)].
    """
    n = cm.n_coords
    rot = rotation_g(q)
    gm = g_matrix_g(q)
    qrt2 = 2.0 * qr_matrix_g(q).T
    jts, jws = [], []
    for bi in range(cm.n_bodies):
        jt_b, jw_b = base_jacs[bi]
        jt = np.zeros((3, n), dtype=object)
        jw = np.zeros((4, n), dtype=object)
        jt[0, 0] = jt[1, 1] = jt[2, 2] = 1.0
        jt[:, 3:7] = -2.0 * ((rot @ cross_g(fr.body_pos[bi])) @ gm)
        jw[:, 3:7] = qrt2
        cols = np.nonzero(cm.ancestors[bi])[0]
        if cols.size:
            jt[:, 7 + cols] = rot @ jt_b[:, cols]
            jw[1:, 7 + cols] = rot @ jw_b[:, cols]
        jts.append(jt)
        jws.append(jw)
    return WorldJacobians(jts, jws, rot)


def mass_matrix_g(cm: CompiledModel, fr: Frames, wj: WorldJacobians, nu=1.0) -> np.ndarray:
    """M = sum_i m_i Jt_i^T Jt_i + Jw_i^T diag(nu, R Phi R^T) Jw_i."""
    n = cm.n_coords
    m = np.zeros((n, n), dtype=object)
    for bi in range(cm.n_bodies):
        jt, jw = wj.jt[bi], wj.jw[bi]
        m = m + cm.masses[bi] * (jt.T @ jt)
        r_w = wj.rot_base @ fr.body_rot[bi]
        phi_w = r_w @ cm.inertias[bi] @ r_w.T
        theta_blk = np.zeros((4, 4), dtype=object)
        theta_blk[0, 0] = nu
        theta_blk[1:, 1:] = phi_w
        m = m + jw.T @ (theta_blk @ jw)
    return m


def system_assembly(cm: CompiledModel, q, theta, nu=1.0):
    """Frames, base and world Jacobians, and the mass matrix in one pass."""
    fr = forward_frames(cm, theta)
    bj = base_jacobians_g(cm, fr)
    wj = world_jacobians_g(cm, q, fr, bj)
    m = mass_matrix_g(cm, fr, wj, nu=nu)
    return fr, bj, wj, m


def potential_energy_g(cm: CompiledModel, q, p, fr: Frames, gravity) -> object:
    """E_pot = -sum_i m_i g0 . p_i (world frame); its gradient is the g vector."""
    rot = rotation_g(q)
    e = 0.0
    for bi in range(cm.n_bodies):
        pw = rot @ fr.body_pos[bi]
        e = e - cm.masses[bi] * (gravity[0] * (p[0] + pw[0])
                                 + gravity[1] * (p[1] + pw[1])
                                 + gravity[2] * (p[2] + pw[2]))
    return e
