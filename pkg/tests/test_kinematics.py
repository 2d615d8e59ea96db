import numpy as np
import pytest

from amdyn import kinematics as kin
from amdyn import quat, urdf
from amdyn.kinematics import SystemState

ONE_LINK = """
<robot name="am1">
  <link name="base">
    <inertial>
      <mass value="6.0"/>
      <inertia ixx="0.48" iyy="0.48" izz="0.95"/>
    </inertial>
  </link>
  <joint name="joint_1" type="continuous">
    <origin xyz="0 0 0"/>
    <parent link="base"/>
    <child link="link_1"/>
    <axis xyz="0 1 0"/>
  </joint>
  <link name="link_1">
    <inertial>
      <origin xyz="0.5 0 0"/>
      <mass value="1.0"/>
      <inertia ixx="0.01" iyy="0.085" izz="0.085"/>
    </inertial>
  </link>
</robot>
"""

BASE_ONLY = """
<robot name="quad">
  <link name="base">
    <inertial>
      <mass value="6.0"/>
      <inertia ixx="0.48" iyy="0.48" izz="0.95"/>
    </inertial>
  </link>
</robot>
"""


@pytest.fixture(scope="module")
def tree():
    return urdf.parse_urdf(ONE_LINK)


@pytest.fixture(scope="module")
def quad():
    return urdf.parse_urdf(BASE_ONLY)


def random_state(tree, rng, tangent=True):
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    dq = rng.standard_normal(4)
    if tangent:
        dq -= q * (q @ dq)
    return SystemState(p=rng.standard_normal(3), q=q,
                       theta=rng.standard_normal(tree.n_joints),
                       dp=rng.standard_normal(3), dq=dq,
                       dtheta=rng.standard_normal(tree.n_joints), strict=False)


def test_state_validation():
    SystemState(p=np.zeros(3), q=[1.0 + 5e-10, 0, 0, 0])
    with pytest.raises(ValueError):
        SystemState(p=np.zeros(3), q=[1.0 + 5e-6, 0, 0, 0])
    # simulation states tolerate the looser 1e-3 norm defect
    SystemState(p=np.zeros(3), q=[1.0 + 5e-4, 0, 0, 0], strict=False)
    with pytest.raises(ValueError):
        SystemState(p=np.zeros(3), q=[1.0 + 5e-3, 0, 0, 0], strict=False)
    with pytest.raises(ValueError):
        SystemState(p=np.zeros(2), q=[1.0, 0, 0, 0])
    with pytest.raises(ValueError):
        SystemState(p=np.zeros(3), q=[1.0, 0, 0, 0], theta=[0.1], dtheta=[0.0, 0.0])


def test_state_vectors_roundtrip():
    s = SystemState(p=[1, 2, 3.0], q=[1.0, 0, 0, 0], theta=[0.4],
                    dp=[0.1, 0, 0], dq=np.zeros(4), dtheta=[0.2])
    s2 = SystemState.from_vectors(s.x, s.xdot)
    assert np.array_equal(s2.x, s.x) and np.array_equal(s2.xdot, s.xdot)
    assert s.n_joints == 1


def test_forward_kinematics_examples(tree):
    jp, ja, bp, br = kin.forward_kinematics(tree, [0.0])
    assert np.allclose(jp[0], [0.0, 0.0, 0.0])
    assert np.allclose(ja[0], [0.0, 1.0, 0.0])
    assert np.allclose(bp[0], np.zeros(3))       # base body at origin
    assert np.allclose(bp[1], [0.5, 0.0, 0.0])   # arm CM along +x
    assert np.allclose(br[1], np.eye(3))
    _, _, bp90, _ = kin.forward_kinematics(tree, [np.pi / 2])
    assert np.allclose(bp90[1], [0.0, 0.0, -0.5], atol=1e-15)
    with pytest.raises(ValueError):
        kin.forward_kinematics(tree, [0.0, 0.0])


def test_base_frame_jacobians(tree, quad):
    # base-only model: no joints, empty Jacobians
    bj = kin.base_frame_jacobians(quad, [])
    assert bj[0][0].shape == (3, 0) and bj[0][1].shape == (3, 0)
    # one link at theta = 0: dCM/dtheta = axis x r = (0,1,0) x (0.5,0,0)
    bj = kin.base_frame_jacobians(tree, [0.0])
    jt, jw = bj[1]
    assert np.allclose(jt[:, 0], [0.0, 0.0, -0.5])
    assert np.allclose(jw[:, 0], [0.0, 1.0, 0.0])
    # base body has exactly-zero columns
    assert np.array_equal(bj[0][0], np.zeros((3, 1)))


def test_system_jacobian_shape(tree):
    s = SystemState(p=np.zeros(3), q=[1.0, 0, 0, 0], theta=[0.3])
    jw = kin.system_jacobian(tree, s)
    assert jw.shape == (7 * tree.n_bodies, 8)


def test_pure_translation(tree):
    s = SystemState(p=np.zeros(3), q=[1.0, 0, 0, 0], theta=[0.3],
                    dp=[1.0, 0.0, 0.0])
    for v, w in kin.world_velocity(tree, s):
        assert np.allclose(v, [1.0, 0.0, 0.0])
        assert np.allclose(w, np.zeros(4))


def test_spinning_base(tree):
    # dq for omega = (0,0,1): qdot = 0.5 q * (0, omega); at identity q
    s = SystemState(p=np.zeros(3), q=[1.0, 0, 0, 0], theta=[0.0],
                    dq=[0.0, 0.0, 0.0, 0.5])
    vel = kin.world_velocity(tree, s)
    assert np.allclose(kin.angular_velocity_3(vel[0][1]), [0.0, 0.0, 1.0])
    assert np.allclose(vel[0][0], np.zeros(3))
    # arm CM at (0.5, 0, 0) sweeps with v = omega x r = (0, 0.5, 0)
    assert np.allclose(vel[1][0], [0.0, 0.5, 0.0])
    assert np.allclose(kin.angular_velocity_3(vel[1][1]), [0.0, 0.0, 1.0])


def test_world_velocity_matches_jacobian(tree):
    rng = np.random.default_rng(0)
    for _ in range(5):
        s = random_state(tree, rng)
        jw = kin.system_jacobian(tree, s)
        v = jw @ s.xdot
        out = kin.world_velocity(tree, s)
        nb = tree.n_bodies
        for i, (vi, wi) in enumerate(out):
            assert np.allclose(vi, v[3 * i:3 * i + 3])
            assert np.allclose(wi, v[3 * nb + 4 * i:3 * nb + 4 * i + 4])


def test_translational_rows_fd(tree):
    # central differences of body positions along tangent directions
    rng = np.random.default_rng(1)
    h = 1e-6
    for _ in range(3):
        s = random_state(tree, rng)
        jw = kin.system_jacobian(tree, s)
        dx = rng.standard_normal(8)
        dx[3:7] -= s.q * (s.q @ dx[3:7])

        def positions(x):
            st = SystemState.from_vectors(x, np.zeros(8))
            _, _, bp, _ = kin.forward_kinematics(tree, st.theta)
            r = kin.base_rotation(st)
            return np.concatenate([st.p + r @ b for b in bp])

        fd = (positions(s.x + h * dx) - positions(s.x - h * dx)) / (2 * h)
        assert np.abs(jw[:3 * tree.n_bodies] @ dx - fd).max() < 1e-6


def test_base_rotation(tree):
    rng = np.random.default_rng(2)
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    s = SystemState(p=np.zeros(3), q=q, theta=[0.0])
    r = kin.base_rotation(s)
    assert np.allclose(r, quat.to_rotation_matrix(quat.Quaternion.from_array(q)))
