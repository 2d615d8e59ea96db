import numpy as np
import pytest

from amdyn import urdf

BASE_LINK = """
  <link name="base">
    <inertial>
      <mass value="6.0"/>
      <inertia ixx="0.48" iyy="0.48" izz="0.95"/>
    </inertial>
  </link>
"""

ONE_LINK = f"""
<robot name="am1">
  {BASE_LINK}
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


def test_parse_base_only():
    tree = urdf.parse_urdf(f'<robot name="quad">{BASE_LINK}</robot>')
    assert tree.n_joints == 0
    assert tree.n_bodies == 1
    body = tree.nodes[urdf.body_name("base")]
    assert body.mass == 6.0
    assert np.allclose(body.inertia, np.diag([0.48, 0.48, 0.95]))


def test_parse_one_link():
    tree = urdf.parse_urdf(ONE_LINK)
    assert tree.joints == ["joint_1"]
    assert tree.n_bodies == 2
    assert np.allclose(tree.nodes["joint_1"].axis, [0.0, 1.0, 0.0])
    body = tree.nodes[urdf.body_name("link_1")]
    assert np.allclose(body.origin.translation, [0.5, 0.0, 0.0])


def test_missing_child_link():
    bad = ONE_LINK.replace('<link name="link_1">', '<link name="other">')
    with pytest.raises(urdf.StructureError):
        urdf.parse_urdf(bad)


def test_malformed_xml():
    with pytest.raises(urdf.UrdfParseError):
        urdf.parse_urdf("<robot><link></robot>")


def test_unsupported_joint_type():
    bad = ONE_LINK.replace('type="continuous"', 'type="prismatic"')
    with pytest.raises(urdf.UnsupportedFeatureError):
        urdf.parse_urdf(bad)


def test_negative_inertia_rejected():
    bad = ONE_LINK.replace('ixx="0.01"', 'ixx="-0.01"')
    with pytest.raises(urdf.ModelValidationError):
        urdf.parse_urdf(bad)


def test_nonunit_axis_rejected():
    bad = ONE_LINK.replace('axis xyz="0 1 0"', 'axis xyz="0 2 0"')
    with pytest.raises(urdf.ModelValidationError):
        urdf.parse_urdf(bad)


def test_parent_chain():
    tree = urdf.parse_urdf(ONE_LINK)
    assert tree.parent_chain("base") == ["base"]
    chain = tree.parent_chain(urdf.body_name("link_1"))
    assert chain == [urdf.body_name("link_1"), "link_1", "joint_1", "base"]


def test_compose_transform():
    tree = urdf.parse_urdf(ONE_LINK)
    ident = tree.compose_transform("base", [0.0])
    assert np.allclose(ident.rotation, np.eye(3))
    t0 = tree.compose_transform(urdf.body_name("link_1"), [0.0])
    assert np.allclose(t0.translation, [0.5, 0.0, 0.0])
    # quarter turn about +y swings the CM from +x down to -z
    t90 = tree.compose_transform(urdf.body_name("link_1"), [np.pi / 2])
    assert np.allclose(t90.translation, [0.0, 0.0, -0.5], atol=1e-15)


def test_roundtrip():
    tree = urdf.parse_urdf(ONE_LINK)
    tree2 = urdf.parse_urdf(urdf.write_urdf(tree))
    assert tree2.joints == tree.joints
    assert tree2.bodies == tree.bodies
    for name in tree.nodes:
        a, b = tree.nodes[name], tree2.nodes[name]
        assert np.allclose(a.origin.rotation, b.origin.rotation, atol=1e-12)
        assert np.allclose(a.origin.translation, b.origin.translation)
        if a.kind == "body":
            assert a.mass == b.mass
            assert np.allclose(a.inertia, b.inertia)


def test_hom_transform_so3():
    with pytest.raises(urdf.ModelValidationError):
        urdf.HomTransform(2 * np.eye(3), np.zeros(3))
    t = urdf.HomTransform.from_xyz_rpy([1.0, 0, 0], [0, 0, np.pi / 2])
    assert np.allclose(t.apply([1.0, 0, 0]), [1.0, 1.0, 0.0], atol=1e-15)


def test_sidecar_params():
    params = urdf.load_params("""
gravity = [0.0, 0.0, -9.81]
[actuators]
prop_time_constant = 0.2
prop_peak_rpm = 4500.0
[[motor]]
position = [0.5, 0.5, 0.0]
axis = [0.0, 0.0, 1.0]
spin = -1
k_t = 2.165e-6
k_p = 5.865e-8
[controller]
k_v = [0.0, 0.0, 10.0, 5.0, 5.0, 4.0]
k_p = [0.0, 0.0, 30.0, 40.0, 40.0, 30.0]
""")
    assert len(params.motors) == 1
    assert params.motors[0].spin == -1
    assert params.prop_peak_rpm == 4500.0
    assert params.gain_v[2] == 10.0
    assert params.gain_p[2] == 30.0


def test_bad_sidecar():
    with pytest.raises(urdf.UrdfParseError):
        urdf.load_params("gravity = [")


def test_duplicate_root_rejected():
    xml = f'<robot name="r">{BASE_LINK}{BASE_LINK.replace("base", "other")}</robot>'
    with pytest.raises(urdf.StructureError):
        urdf.parse_urdf(xml)
