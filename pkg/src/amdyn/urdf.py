"""URDF parsing into a kinematic tree of links, joints, and bodies.

Supported subset: ``robot``, ``link`` (with a mandatory ``inertial`` block)
and ``joint`` of types ``revolute``, ``continuous``, ``fixed``.  ``visual``
and ``collision`` elements are ignored with a warning; meshes, transmissions
and other joint types are out of scope.

Tree conventions: a link can parent several joints, a joint parents exactly
one link, and each link carries exactly one body node (its inertial frame,
holding mass and inertia about that frame).  A link's ``inertial/origin`` is
mapped to the link-to-body transform.  Joint ``origin`` is the static parent
link-to-joint transform; the joint's rotation by its angle sits between the
joint frame and the child link frame.

Actuation and propulsion data (motors, gravity, time constants, gains) are
not expressible in standard URDF and come from a TOML sidecar file, parsed
here into ``ModelParams``.
"""

from __future__ import annotations

import math
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

import numpy as np
import tomli

from .quat import rodrigues

ROT_TOL = 1e-9
AXIS_TOL = 1e-9


class UrdfError(Exception):
    """Base class for URDF model errors."""


class UrdfParseError(UrdfError):
    """Malformed XML or missing/invalid attributes."""


class StructureError(UrdfError):
    """Tree-level violation: cycles, multiple roots, dangling references."""


class UnsupportedFeatureError(UrdfError):
    """URDF feature outside the supported subset."""


class ModelValidationError(UrdfError):
    """Physically invalid data (masses, inertias, axes)."""


def _rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def _rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class HomTransform:
    """Rotation + translation, rotation constrained to SO(3)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if (np.abs(r @ r.T - np.eye(3)).max() > ROT_TOL
                or abs(np.linalg.det(r) - 1.0) > ROT_TOL):
            raise ModelValidationError("rotation is not in SO(3)")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)
        r.setflags(write=False)
        t.setflags(write=False)

    @classmethod
    def identity(cls) -> "HomTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_xyz_rpy(cls, xyz, rpy) -> "HomTransform":
        # URDF rpy is fixed-axis XYZ: R = Rz(yaw) Ry(pitch) Rx(roll)
        r, p, y = rpy
        return cls(_rot_z(y) @ _rot_y(p) @ _rot_x(r), np.asarray(xyz, dtype=float))

    def compose(self, other: "HomTransform") -> "HomTransform":
        return HomTransform(self.rotation @ other.rotation,
                            self.rotation @ other.translation + self.translation)

    def apply(self, point) -> np.ndarray:
        return self.rotation @ np.asarray(point, dtype=float) + self.translation


@dataclass(frozen=True)
class Node:
    kind: str                 # "link" | "joint" | "body"
    name: str
    parent: str | None
    origin: HomTransform
    # joint-only
    joint_type: str | None = None     # "revolute" | "fixed"
    axis: np.ndarray | None = None
    limits: tuple[float, float] | None = None
    # body-only
    mass: float | None = None
    inertia: np.ndarray | None = None


@dataclass(frozen=True)
class Motor:
    position: np.ndarray      # m, in the base link frame
    axis: np.ndarray          # unit spin axis in the base link frame
    spin: int                 # +1 CW, -1 CCW
    k_t: float                # N / rpm^2
    k_p: float                # N m / rpm^2


@dataclass(frozen=True)
class ModelParams:
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))
    motors: tuple[Motor, ...] = ()
    prop_time_constant: float = 0.2
    prop_peak_rpm: float = 4500.0
    joint_time_constant: float = 0.2
    joint_peak_torque: float = 16.0
    gain_v: np.ndarray | None = None
    gain_p: np.ndarray | None = None

    def __post_init__(self):
        if self.prop_time_constant <= 0 or self.joint_time_constant <= 0:
            raise ModelValidationError("actuator time constants must be > 0")
        for m in self.motors:
            if m.k_t <= 0:
                raise ModelValidationError("motor k_t must be > 0")


class KinematicTree:
    """Immutable parsed robot description.

    ``joints`` lists actuated (revolute) joints in document order; that order
    defines the index of each entry of the joint-angle vector.  ``bodies``
    lists body nodes in document order with the base body first.
    """

    def __init__(self, name: str, nodes: list[Node], params: ModelParams | None = None):
        self.name = name
        self.nodes = {n.name: n for n in nodes}
        if len(self.nodes) != len(nodes):
            raise StructureError("duplicate node names")
        self.params = params if params is not None else ModelParams()
        self._validate()
        self.joints = [n.name for n in nodes
                       if n.kind == "joint" and n.joint_type == "revolute"]
        self.bodies = [n.name for n in nodes if n.kind == "body"]
        self.n_joints = len(self.joints)
        self.n_bodies = len(self.bodies)
        self._compiled = None   # lazy cache used by the kinematics module

    @property
    def base_link(self) -> str:
        return self._base

    def _validate(self):
        roots = [n for n in self.nodes.values() if n.parent is None]
        if len(roots) != 1:
            raise StructureError(f"expected exactly one base link, found {len(roots)}")
        if roots[0].kind != "link":
            raise StructureError("base node must be a link")
        self._base = roots[0].name
        children: dict[str, list[Node]] = {}
        for n in self.nodes.values():
            if n.parent is None:
                continue
            if n.parent not in self.nodes:
                raise StructureError(f"node {n.name!r} references missing parent {n.parent!r}")
            children.setdefault(n.parent, []).append(n)
        # reachability doubles as the cycle check (one root, one parent each)
        seen = set()
        stack = [self._base]
        while stack:
            cur = stack.pop()
            seen.add(cur)
            stack.extend(c.name for c in children.get(cur, ()))
        if seen != set(self.nodes):
            raise StructureError("cycle or disconnected nodes: "
                                 + ", ".join(sorted(set(self.nodes) - seen)))
        for n in self.nodes.values():
            kids = children.get(n.name, [])
            if n.kind == "joint":
                if self.nodes[n.parent].kind != "link":
                    raise StructureError(f"joint {n.name!r} must be child of a link")
                if len([k for k in kids if k.kind == "link"]) != 1 or len(kids) != 1:
                    raise StructureError(f"joint {n.name!r} must parent exactly one link")
                if n.joint_type == "revolute":
                    if abs(np.linalg.norm(n.axis) - 1.0) > AXIS_TOL:
                        raise ModelValidationError(f"joint {n.name!r} axis not unit length")
            elif n.kind == "link":
                nb = [k for k in kids if k.kind == "body"]
                if len(nb) != 1:
                    raise StructureError(f"link {n.name!r} must carry exactly one body")
            elif n.kind == "body":
                if kids:
                    raise StructureError(f"body {n.name!r} cannot have children")
                if n.mass is None or n.mass <= 0:
                    raise ModelValidationError(f"body {n.name!r} mass must be > 0")
                inertia = np.asarray(n.inertia, dtype=float)
                if np.abs(inertia - inertia.T).max() > 1e-12:
                    raise ModelValidationError(f"body {n.name!r} inertia not symmetric")
                if np.linalg.eigvalsh(inertia).min() <= 0:
                    raise ModelValidationError(f"body {n.name!r} inertia not positive definite")
            else:
                raise StructureError(f"unknown node kind {n.kind!r}")

    def parent_chain(self, node_id: str) -> list[str]:
        """Node ids from ``node_id`` up to (and including) the base link."""
        if node_id not in self.nodes:
            raise KeyError(f"unknown node {node_id!r}")
        chain = [node_id]
        while self.nodes[chain[-1]].parent is not None:
            chain.append(self.nodes[chain[-1]].parent)
        return chain

    def joint_index(self, joint_id: str) -> int:
        return self.joints.index(joint_id)

    def compose_transform(self, node_id: str, theta) -> HomTransform:
        """Transform from the base link frame to ``node_id`` at joint angles theta."""
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape != (self.n_joints,):
            raise ValueError(f"theta must have {self.n_joints} entries, got {theta.shape[0]}")
        t = HomTransform.identity()
        for name in reversed(self.parent_chain(node_id)):
            node = self.nodes[name]
            parent = self.nodes[node.parent] if node.parent else None
            if parent is not None and parent.kind == "joint" and parent.joint_type == "revolute":
                angle = theta[self.joint_index(parent.name)]
                t = t.compose(HomTransform(rodrigues(angle, parent.axis), np.zeros(3)))
            t = t.compose(node.origin)
        return t


def _float_list(text, n, what):
    try:
        vals = [float(v) for v in text.split()]
    except ValueError as exc:
        raise UrdfParseError(f"bad {what}: {text!r}") from exc
    if len(vals) != n:
        raise UrdfParseError(f"{what} needs {n} values, got {len(vals)}")
    return vals


def _origin(elem) -> HomTransform:
    if elem is None:
        return HomTransform.identity()
    xyz = _float_list(elem.get("xyz", "0 0 0"), 3, "origin xyz")
    rpy = _float_list(elem.get("rpy", "0 0 0"), 3, "origin rpy")
    return HomTransform.from_xyz_rpy(xyz, rpy)


def body_name(link_name: str) -> str:
    return link_name + "::body"


def parse_urdf(xml_text: str, params: ModelParams | None = None) -> KinematicTree:
    """Parse URDF XML into a KinematicTree (see module docstring for the subset)."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise UrdfParseError(f"malformed XML at line {line}, column {col}: {exc}") from exc
    if root.tag != "robot":
        raise UrdfParseError(f"expected <robot> root element, got <{root.tag}>")
    robot_name = root.get("name", "robot")

    nodes: list[Node] = []
    link_parent: dict[str, str] = {}   # link -> owning joint
    for joint in root.iter("joint"):
        child = joint.find("child")
        if child is not None and child.get("link"):
            link_parent[child.get("link")] = joint.get("name", "?")

    for elem in root:
        if elem.tag == "link":
            name = elem.get("name")
            if name is None:
                raise UrdfParseError("link without a name")
            if elem.find("visual") is not None or elem.find("collision") is not None:
                warnings.warn(f"link {name!r}: visual/collision elements are ignored")
            inertial = elem.find("inertial")
            if inertial is None:
                raise ModelValidationError(f"link {name!r} has no inertial block")
            mass_el = inertial.find("mass")
            inertia_el = inertial.find("inertia")
            if mass_el is None or inertia_el is None:
                raise ModelValidationError(f"link {name!r}: inertial needs mass and inertia")
            mass = float(mass_el.get("value"))
            i = {k: float(inertia_el.get(k, "0")) for k in
                 ("ixx", "ixy", "ixz", "iyy", "iyz", "izz")}
            inertia = np.array([[i["ixx"], i["ixy"], i["ixz"]],
                                [i["ixy"], i["iyy"], i["iyz"]],
                                [i["ixz"], i["iyz"], i["izz"]]])
            nodes.append(Node("link", name, link_parent.get(name), _origin(None)))
            nodes.append(Node("body", body_name(name), name, _origin(inertial.find("origin")),
                              mass=mass, inertia=inertia))
        elif elem.tag == "joint":
            name = elem.get("name")
            jtype = elem.get("type")
            if jtype not in ("revolute", "continuous", "fixed"):
                raise UnsupportedFeatureError(f"joint {name!r}: type {jtype!r} not supported")
            parent = elem.find("parent")
            child = elem.find("child")
            if parent is None or child is None:
                raise UrdfParseError(f"joint {name!r} needs parent and child links")
            axis = None
            limits = None
            if jtype in ("revolute", "continuous"):
                axis_el = elem.find("axis")
                axis = np.array(_float_list(axis_el.get("xyz"), 3, "axis") if axis_el is not None
                                else [1.0, 0.0, 0.0])
                na = np.linalg.norm(axis)
                if abs(na - 1.0) > AXIS_TOL:
                    raise ModelValidationError(f"joint {name!r} axis not unit length")
                axis = axis / na
                limit_el = elem.find("limit")
                if limit_el is not None and limit_el.get("lower") is not None:
                    limits = (float(limit_el.get("lower")), float(limit_el.get("upper")))
            nodes.append(Node("joint", name, parent.get("link"), _origin(elem.find("origin")),
                              joint_type="fixed" if jtype == "fixed" else "revolute",
                              axis=axis, limits=limits))
        # other top-level elements (material, gazebo, ...) are ignored
    return KinematicTree(robot_name, nodes, params)


def write_urdf(tree: KinematicTree) -> str:
    """Serialize back to URDF XML (inverse of parse_urdf for the subset)."""
    def fmt(vals):
        return " ".join(f"{v:.17g}" for v in np.atleast_1d(vals))

    def rpy_of(rot):
        # inverse of from_xyz_rpy: R = Rz Ry Rx
        p = math.asin(max(-1.0, min(1.0, -rot[2, 0])))
        if abs(rot[2, 0]) < 1.0 - 1e-12:
            r = math.atan2(rot[2, 1], rot[2, 2])
            y = math.atan2(rot[1, 0], rot[0, 0])
        else:
            r = math.atan2(-rot[1, 2], rot[1, 1])
            y = 0.0
        return (r, p, y)

    robot = ET.Element("robot", name=tree.name)
    for name, node in tree.nodes.items():
        if node.kind == "link":
            link = ET.SubElement(robot, "link", name=name)
            body = tree.nodes[body_name(name)]
            inertial = ET.SubElement(link, "inertial")
            ET.SubElement(inertial, "origin", xyz=fmt(body.origin.translation),
                          rpy=fmt(rpy_of(body.origin.rotation)))
            ET.SubElement(inertial, "mass", value=f"{body.mass:.17g}")
            ix = body.inertia
            ET.SubElement(inertial, "inertia",
                          ixx=f"{ix[0, 0]:.17g}", ixy=f"{ix[0, 1]:.17g}",
                          ixz=f"{ix[0, 2]:.17g}", iyy=f"{ix[1, 1]:.17g}",
                          iyz=f"{ix[1, 2]:.17g}", izz=f"{ix[2, 2]:.17g}")
        elif node.kind == "joint":
            jtype = "continuous" if (node.joint_type == "revolute" and node.limits is None) \
                else node.joint_type
            joint = ET.SubElement(robot, "joint", name=name, type=jtype)
            ET.SubElement(joint, "origin", xyz=fmt(node.origin.translation),
                          rpy=fmt(rpy_of(node.origin.rotation)))
            ET.SubElement(joint, "parent", link=node.parent)
            child = next(n.name for n in tree.nodes.values()
                         if n.parent == name and n.kind == "link")
            ET.SubElement(joint, "child", link=child)
            if node.joint_type == "revolute":
                ET.SubElement(joint, "axis", xyz=fmt(node.axis))
                if node.limits is not None:
                    ET.SubElement(joint, "limit", lower=f"{node.limits[0]:.17g}",
                                  upper=f"{node.limits[1]:.17g}", effort="0", velocity="0")
    ET.indent(robot)
    return ET.tostring(robot, encoding="unicode")


def load_params(toml_text: str) -> ModelParams:
    """Parse the sidecar configuration (gravity, motors, actuators, gains)."""
    try:
        cfg = tomli.loads(toml_text)
    except tomli.TOMLDecodeError as exc:
        raise UrdfParseError(f"bad sidecar config: {exc}") from exc
    kwargs = {}
    if "gravity" in cfg:
        kwargs["gravity"] = np.asarray(cfg["gravity"], dtype=float).reshape(3)
    motors = []
    for m in cfg.get("motor", []):
        axis = np.asarray(m["axis"], dtype=float)
        motors.append(Motor(position=np.asarray(m["position"], dtype=float),
                            axis=axis / np.linalg.norm(axis),
                            spin=int(m.get("spin", 1)),
                            k_t=float(m["k_t"]),
                            k_p=float(m.get("k_p", 0.0))))
    kwargs["motors"] = tuple(motors)
    act = cfg.get("actuators", {})
    for key in ("prop_time_constant", "prop_peak_rpm",
                "joint_time_constant", "joint_peak_torque"):
        if key in act:
            kwargs[key] = float(act[key])
    ctl = cfg.get("controller", {})
    if "k_v" in ctl:
        kwargs["gain_v"] = np.asarray(ctl["k_v"], dtype=float)
    if "k_p" in ctl:
        kwargs["gain_p"] = np.asarray(ctl["k_p"], dtype=float)
    return ModelParams(**kwargs)


def load_model(urdf_path, params_path=None) -> KinematicTree:
    """Load a URDF file plus sidecar config from disk.

    When ``params_path`` is omitted, a sidecar ``<stem>.toml`` next to the
    URDF is used if present.
    """
    import os

    with open(urdf_path, encoding="utf-8") as fh:
        xml_text = fh.read()
    if params_path is None:
        candidate = os.path.splitext(os.fspath(urdf_path))[0] + ".toml"
        if os.path.exists(candidate):
            params_path = candidate
    params = None
    if params_path is not None:
        with open(params_path, encoding="utf-8") as fh:
            params = load_params(fh.read())
    return parse_urdf(xml_text, params)
