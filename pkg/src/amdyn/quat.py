"""Quaternion algebra and rotation utilities.

Convention: scalar-first component order (w, x, y, z) everywhere, including
file I/O.  A quaternion is stored as a scalar part ``w`` and a 3-vector part
``v``.  No canonical sign is enforced in storage; q and -q describe the same
orientation and consumers that compare orientations must handle the double
cover themselves (see the controller's error quaternion).
"""

from __future__ import annotations

import math

import numpy as np

AXIS_TOL = 1e-9
UNIT_TOL = 1e-9


class Quaternion:
    """A general quaternion (w, v) with no norm restriction.

    Immutable after construction; all operations return new instances.
    """

    __slots__ = ("w", "v")

    def __init__(self, w, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (3,):
            raise ValueError(f"vector part must be a 3-vector, got shape {v.shape}")
        w = float(w)
        if not (math.isfinite(w) and np.all(np.isfinite(v))):
            raise ValueError("quaternion components must be finite")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "v", v)
        v.setflags(write=False)

    def __setattr__(self, name, value):
        raise AttributeError("Quaternion is immutable")

    @classmethod
    def from_array(cls, wxyz) -> "Quaternion":
        wxyz = np.asarray(wxyz, dtype=float)
        if wxyz.shape != (4,):
            raise ValueError(f"expected 4 components, got shape {wxyz.shape}")
        return cls(wxyz[0], wxyz[1:])

    def as_array(self) -> np.ndarray:
        """Components as (w, x, y, z)."""
        return np.concatenate(([self.w], self.v))

    def __repr__(self):
        return f"{type(self).__name__}({self.w!r}, {self.v.tolist()!r})"

    def __eq__(self, other):
        if not isinstance(other, Quaternion):
            return NotImplemented
        return self.w == other.w and np.array_equal(self.v, other.v)

    def __hash__(self):
        return hash((self.w, bytes(self.v)))


class UnitQuaternion(Quaternion):
    """A quaternion constrained to unit norm at construction.

    Inputs within ``UNIT_TOL`` of unit length are renormalized; anything
    further off is rejected.
    """

    def __init__(self, w, v, _exact=False):
        super().__init__(w, v)
        if _exact:
            return
        n = norm(self)
        if abs(n - 1.0) > UNIT_TOL:
            raise ValueError(f"not a unit quaternion: norm = {n}")
        object.__setattr__(self, "w", self.w / n)
        v = self.v / n
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @classmethod
    def identity(cls) -> "UnitQuaternion":
        return cls(1.0, np.zeros(3), _exact=True)


def qmul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Quaternion product a (x) b (non-commutative)."""
    w = a.w * b.w - a.v @ b.v
    v = a.w * b.v + b.w * a.v + np.cross(a.v, b.v)
    return Quaternion(w, v)


def conjugate(q: Quaternion) -> Quaternion:
    return type(q)(q.w, -q.v)


def norm(q: Quaternion) -> float:
    return math.sqrt(q.w * q.w + q.v @ q.v)


def inverse(q: Quaternion) -> Quaternion:
    n2 = q.w * q.w + q.v @ q.v
    if n2 == 0.0:
        raise ZeroDivisionError("zero quaternion has no inverse")
    return Quaternion(q.w / n2, -q.v / n2)


def from_axis_angle(u, theta: float) -> UnitQuaternion:
    """Unit quaternion for a rotation of ``theta`` about the unit axis ``u``."""
    u = np.asarray(u, dtype=float)
    nu = np.linalg.norm(u)
    if abs(nu - 1.0) > AXIS_TOL:
        raise ValueError(f"axis must be unit length, |u| = {nu}")
    u = u / nu
    half = 0.5 * theta
    return UnitQuaternion(math.cos(half), u * math.sin(half), _exact=True)


def rotate(q: UnitQuaternion, u) -> np.ndarray:
    """Rotate a 3-vector by q via the double product q (x) (0,u) (x) q*."""
    u = np.asarray(u, dtype=float)
    p = qmul(qmul(q, Quaternion(0.0, u)), conjugate(q))
    return p.v


def cross_matrix(a) -> np.ndarray:
    """Matrix [a]x such that [a]x b = a x b."""
    a = np.asarray(a, dtype=float)
    return np.array([
        [0.0, -a[2], a[1]],
        [a[2], 0.0, -a[0]],
        [-a[1], a[0], 0.0],
    ])


def ql_matrix(q: Quaternion) -> np.ndarray:
    """Left product operator: ql_matrix(q) @ p = q (x) p (as 4-vectors)."""
    m = q.w * np.eye(4)
    m[0, 1:] -= q.v
    m[1:, 0] += q.v
    m[1:, 1:] += cross_matrix(q.v)
    return m


def qr_matrix(q: Quaternion) -> np.ndarray:
    """Right product operator: qr_matrix(q) @ p = p (x) q (as 4-vectors)."""
    m = q.w * np.eye(4)
    m[0, 1:] -= q.v
    m[1:, 0] += q.v
    m[1:, 1:] -= cross_matrix(q.v)
    return m


def e_matrix(q: Quaternion) -> np.ndarray:
    """3x4 map from quaternion rates to world angular velocity: w_W = 2 E qdot."""
    return np.hstack([-q.v[:, None], q.w * np.eye(3) + cross_matrix(q.v)])


def g_matrix(q: Quaternion) -> np.ndarray:
    """3x4 map from quaternion rates to body angular velocity: w_B = 2 G qdot."""
    return np.hstack([-q.v[:, None], q.w * np.eye(3) - cross_matrix(q.v)])


def to_rotation_matrix(q: UnitQuaternion) -> np.ndarray:
    """Rotation matrix of q, computed as E G^T."""
    return e_matrix(q) @ g_matrix(q).T


def rodrigues(theta: float, u) -> np.ndarray:
    """Rotation matrix for angle theta about the unit axis u."""
    u = np.asarray(u, dtype=float)
    nu = np.linalg.norm(u)
    if abs(nu - 1.0) > AXIS_TOL:
        raise ValueError(f"axis must be unit length, |u| = {nu}")
    u = u / nu
    ux = cross_matrix(u)
    return np.eye(3) + math.sin(theta) * ux + (1.0 - math.cos(theta)) * (ux @ ux)
