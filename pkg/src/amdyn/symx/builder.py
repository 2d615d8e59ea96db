"""Symbolic dynamics construction for code generation and op counting.

Builds M, C (or the lumped vector h), and g as expression graphs for either
the quaternion-parameterized floating base (N = 7 + N_J coordinates, matching
the numeric engine) or a ZYX Euler-angle baseline (N = 6 + N_J) used for
operation-count comparisons.  State symbols are named x0..x{N-1} with
velocities v0..v{N-1}; emitted C functions take them as one flat array.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .. import _assembly as asm
from ..urdf import KinematicTree
from .expand import OpCountReport, count_ops, expand
from .graph import Expr, Graph, symbols

METHODS = ("christoffel", "energy", "mixed")
PARAMETERIZATIONS = ("quaternion", "euler")
DEFAULT_LINK_BUDGET = 3


@dataclass
class SymbolicDynamics:
    """Expression-graph dynamics of one model/method/parameterization."""

    graph: Graph
    model: str
    links: int
    parameterization: str
    method: str
    n: int                       # generalized coordinates
    state_names: list            # x symbols then v symbols (2N names)
    matrices: dict = field(default_factory=dict)   # name -> (shape, [root ids])
    gen_seconds: float = 0.0

    def evaluate(self, name, x, v):
        """Numeric evaluation of one matrix at a state (row-major reshape)."""
        shape, roots = self.matrices[name]
        env = {f"x{i}": xi for i, xi in enumerate(np.asarray(x, dtype=float))}
        env.update({f"v{i}": vi for i, vi in enumerate(np.asarray(v, dtype=float))})
        return self.graph.evaluate(roots, env).reshape(shape)


def _euler_rotation_g(eul):
    """R = Rz(yaw) Ry(pitch) Rx(roll) over generic scalars."""
    roll, pitch, yaw = eul
    rx = asm.rodrigues_g(roll, np.array([1.0, 0.0, 0.0]))
    ry = asm.rodrigues_g(pitch, np.array([0.0, 1.0, 0.0]))
    rz = asm.rodrigues_g(yaw, np.array([0.0, 0.0, 1.0]))
    return rz @ ry @ rx


def _euler_rate_matrix_g(eul):
    """Body angular velocity map W: omega_body = W [droll, dpitch, dyaw]."""
    roll, pitch, _ = eul
    sr, cr = asm.sin_s(roll), asm.cos_s(roll)
    sp, cp = asm.sin_s(pitch), asm.cos_s(pitch)
    return np.array([
        [1.0, 0.0, -sp],
        [0.0, cr, cp * sr],
        [0.0, -sr, cp * cr],
    ], dtype=object)


def euler_rate_matrix(roll: float, pitch: float) -> np.ndarray:
    """Numeric W(roll, pitch); det W = cos(pitch), singular at pitch = +-90 deg."""
    return np.asarray(_euler_rate_matrix_g([roll, pitch, 0.0]), dtype=float)


def _euler_world_jacobians(cm, eul, fr, base_jacs):
    """Per-body world Jacobians for the Euler-angle base (3-row rotational)."""
    n = 6 + cm.n_joints
    rot = _euler_rotation_g(eul)
    rw = rot @ _euler_rate_matrix_g(eul)
    jts, jws = [], []
    for bi in range(cm.n_bodies):
        jt_b, jw_b = base_jacs[bi]
        jt = np.zeros((3, n), dtype=object)
        jw = np.zeros((3, n), dtype=object)
        jt[0, 0] = jt[1, 1] = jt[2, 2] = 1.0
        jt[:, 3:6] = -(asm.cross_g(rot @ fr.body_pos[bi]) @ rw)
        jw[:, 3:6] = rw
        cols = np.nonzero(cm.ancestors[bi])[0]
        if cols.size:
            jt[:, 6 + cols] = rot @ jt_b[:, cols]
            jw[:, 6 + cols] = rot @ jw_b[:, cols]
        jts.append(jt)
        jws.append(jw)
    return rot, jts, jws


def _euler_mass_matrix(cm, eul, fr, nu):
    rot, jts, jws = _euler_world_jacobians(cm, eul, fr, asm.base_jacobians_g(cm, fr))
    n = 6 + cm.n_joints
    m = np.zeros((n, n), dtype=object)
    for bi in range(cm.n_bodies):
        jt, jw = jts[bi], jws[bi]
        m = m + cm.masses[bi] * (jt.T @ jt)
        r_w = rot @ fr.body_rot[bi]
        phi_w = r_w @ cm.inertias[bi] @ r_w.T
        m = m + jw.T @ (phi_w @ jw)
    return rot, m


def _quadratic_form(m, v):
    n = len(v)
    e = 0.0
    for i in range(n):
        row = 0.0
        for j in range(n):
            row = row + m[i, j] * v[j]
        e = e + v[i] * row
    return 0.5 * e


def build_symbolic_dynamics(tree: KinematicTree, method="christoffel",
                            parameterization="quaternion", nu=1.0,
                            model_name=None) -> SymbolicDynamics:
    """Assemble M, C or h, and g as expression graphs."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if parameterization not in PARAMETERIZATIONS:
        raise ValueError(f"unknown parameterization {parameterization!r}")
    t0 = time.perf_counter()
    cm = asm.compile_tree(tree)
    n = cm.n_coords if parameterization == "quaternion" else 6 + cm.n_joints
    g = Graph()
    x_names = [f"x{i}" for i in range(n)]
    v_names = [f"v{i}" for i in range(n)]
    x = symbols(g, x_names)
    v = symbols(g, v_names)
    gravity = tree.params.gravity

    if parameterization == "quaternion":
        q, theta = x[3:7], x[7:]
        fr, _, _, m = asm.system_assembly(cm, q, theta, nu=nu)
        rot = asm.rotation_g(q)
    else:
        eul, theta = x[3:6], x[6:]
        fr = asm.forward_frames(cm, theta)
        rot, m = _euler_mass_matrix(cm, eul, fr, nu)

    # potential energy shares the body positions; rot differs per parameterization
    e_pot = 0.0
    for bi in range(cm.n_bodies):
        pw = rot @ fr.body_pos[bi]
        e_pot = e_pot - cm.masses[bi] * (gravity[0] * (x[0] + pw[0])
                                         + gravity[1] * (x[1] + pw[1])
                                         + gravity[2] * (x[2] + pw[2]))
    e_kin = _quadratic_form(m, v)

    def nid(expr):
        return expr.nid if isinstance(expr, Expr) else g.constant(expr)

    m_flat = [nid(m[i, j]) for i in range(n) for j in range(n)]
    e_pot_id = nid(e_pot)
    e_kin_id = nid(e_kin)
    v_ids = [vi.nid for vi in v]

    grav = [g.differentiate([e_pot_id], name)[0] for name in x_names]
    de_kin = [g.differentiate([e_kin_id], name)[0] for name in x_names]

    matrices = {"M": ((n, n), m_flat), "g": ((n,), grav)}

    if method in ("christoffel", "mixed"):
        dm = [g.differentiate(m_flat, name) for name in x_names]
        if method == "christoffel":
            c_flat = []
            for i in range(n):
                for j in range(n):
                    acc = g.constant(0.0)
                    for k in range(n):
                        term = g.add(dm[k][i * n + j],
                                     g.sub(dm[j][i * n + k], dm[i][j * n + k]))
                        acc = g.add(acc, g.mul(term, v_ids[k]))
                    c_flat.append(g.mul(g.constant(0.5), acc))
            matrices["C"] = ((n, n), c_flat)
        else:
            h = []
            for i in range(n):
                acc = g.constant(0.0)
                for k in range(n):
                    row = g.constant(0.0)
                    for j in range(n):
                        row = g.add(row, g.mul(dm[k][i * n + j], v_ids[j]))
                    acc = g.add(acc, g.mul(row, v_ids[k]))
                h.append(g.sub(acc, de_kin[i]))
            matrices["h"] = ((n,), h)
    else:
        s = [g.differentiate([e_kin_id], name)[0] for name in v_names]
        ds = [g.differentiate(s, name) for name in x_names]
        h = []
        for i in range(n):
            acc = g.constant(0.0)
            for k in range(n):
                acc = g.add(acc, g.mul(ds[k][i], v_ids[k]))
            h.append(g.sub(acc, de_kin[i]))
        matrices["h"] = ((n,), h)

    return SymbolicDynamics(
        graph=g, model=model_name if model_name is not None else tree.name,
        links=cm.n_joints,
        parameterization=parameterization, method=method, n=n,
        state_names=x_names + v_names, matrices=matrices,
        gen_seconds=time.perf_counter() - t0)


def op_count_report(sd: SymbolicDynamics, term_budget=None,
                    fold_trig=True) -> OpCountReport:
    """Expand each matrix to normal form and count operations.

    sin^2 -> 1 - cos^2 folding is applied uniformly (both parameterizations)
    so rotation-orthogonality products collapse the way a CAS would collapse
    them before counting.
    """
    from .expand import DEFAULT_TERM_BUDGET

    budget = DEFAULT_TERM_BUDGET if term_budget is None else term_budget
    t0 = time.perf_counter()
    counts = {}
    for name, (shape, roots) in sd.matrices.items():
        expanded = expand(sd.graph, roots, term_budget=budget, fold_trig=fold_trig)
        counts[name] = count_ops(sd.graph, expanded)
    return OpCountReport(
        model=sd.model, links=sd.links, parameterization=sd.parameterization,
        method=sd.method, counts=counts,
        gen_seconds=sd.gen_seconds + (time.perf_counter() - t0))


def check_link_budget(tree: KinematicTree, budget=DEFAULT_LINK_BUDGET):
    if tree.n_joints > budget:
        raise ValueError(
            f"symbolic generation limited to {budget} links, model has {tree.n_joints}")
