import numpy as np
import pytest

from amdyn import quat


def random_unit(rng):
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    return quat.Quaternion.from_array(q)


def test_identity_product():
    q = quat.Quaternion(0.3, [0.1, -0.2, 0.7])
    out = quat.qmul(quat.Quaternion(1.0, np.zeros(3)), q)
    assert np.allclose(out.as_array(), q.as_array())


def test_ijk_product():
    i = quat.Quaternion(0.0, [1.0, 0.0, 0.0])
    j = quat.Quaternion(0.0, [0.0, 1.0, 0.0])
    k = quat.qmul(i, j)
    assert np.allclose(k.as_array(), [0.0, 0.0, 0.0, 1.0])


def test_product_operator_oracle():
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = random_unit(rng), random_unit(rng)
        ab = quat.qmul(a, b).as_array()
        assert np.allclose(ab, quat.ql_matrix(a) @ b.as_array(), atol=1e-12)
        assert np.allclose(ab, quat.qr_matrix(b) @ a.as_array(), atol=1e-12)


def test_ql_qr_commutation():
    rng = np.random.default_rng(1)
    for _ in range(10):
        q, p = random_unit(rng), random_unit(rng)
        d = quat.ql_matrix(q) @ p.as_array() - quat.qr_matrix(p) @ q.as_array()
        assert np.abs(d).max() < 1e-12


def test_conjugate_inverse_norm():
    assert quat.conjugate(quat.Quaternion(1.0, np.zeros(3))).as_array()[0] == 1.0
    assert quat.norm(quat.Quaternion(0.0, [3.0, 4.0, 0.0])) == 5.0
    rng = np.random.default_rng(2)
    for _ in range(10):
        q = quat.Quaternion.from_array(rng.standard_normal(4))
        ident = quat.qmul(q, quat.inverse(q)).as_array()
        assert np.allclose(ident, [1.0, 0.0, 0.0, 0.0], atol=1e-12)


def test_zero_inverse_raises():
    with pytest.raises(ZeroDivisionError):
        quat.inverse(quat.Quaternion(0.0, np.zeros(3)))


def test_axis_angle():
    assert np.allclose(quat.from_axis_angle([0, 0, 1.0], 0.0).as_array(),
                       [1.0, 0.0, 0.0, 0.0])
    assert np.allclose(quat.from_axis_angle([0, 0, 1.0], np.pi).as_array(),
                       [0.0, 0.0, 0.0, 1.0], atol=1e-15)
    q = quat.from_axis_angle([0, 0, 1.0], np.pi / 2)
    assert np.allclose(quat.rotate(q, [1.0, 0.0, 0.0]), [0.0, 1.0, 0.0], atol=1e-15)


def test_rotate_operator_form():
    rng = np.random.default_rng(3)
    for _ in range(10):
        q = random_unit(rng)
        u = rng.standard_normal(3)
        direct = quat.rotate(q, u)
        m = quat.ql_matrix(q) @ quat.qr_matrix(quat.conjugate(q))
        assert np.allclose(direct, (m @ np.concatenate([[0.0], u]))[1:], atol=1e-12)


def test_cross_matrix():
    assert np.allclose(quat.cross_matrix([1.0, 0, 0]) @ [0, 1.0, 0], [0, 0, 1.0])
    assert np.allclose(quat.ql_matrix(quat.Quaternion(1.0, np.zeros(3))), np.eye(4))


def test_e_g_matrices():
    ident = quat.Quaternion(1.0, np.zeros(3))
    assert np.allclose(quat.e_matrix(ident), np.hstack([np.zeros((3, 1)), np.eye(3)]))
    assert np.allclose(quat.g_matrix(ident), np.hstack([np.zeros((3, 1)), np.eye(3)]))
    rng = np.random.default_rng(4)
    for _ in range(10):
        q = random_unit(rng)
        e, g = quat.e_matrix(q), quat.g_matrix(q)
        assert np.abs(e @ e.T - np.eye(3)).max() < 1e-12
        assert np.abs(g @ g.T - np.eye(3)).max() < 1e-12
        r = e @ g.T
        # rotation oracle via rotate() on basis vectors
        for k in range(3):
            u = np.eye(3)[k]
            assert np.allclose(r @ u, quat.rotate(q, u), atol=1e-12)
        assert np.allclose(quat.to_rotation_matrix(q), r)


def test_rodrigues():
    assert np.allclose(quat.rodrigues(0.0, [0, 0, 1.0]), np.eye(3))
    assert np.allclose(quat.rodrigues(np.pi / 2, [0, 0, 1.0]) @ [1.0, 0, 0],
                       [0, 1.0, 0], atol=1e-15)
    rng = np.random.default_rng(5)
    for _ in range(10):
        u = rng.standard_normal(3)
        u /= np.linalg.norm(u)
        th = rng.uniform(-np.pi, np.pi)
        r1 = quat.rodrigues(th, u)
        r2 = quat.to_rotation_matrix(quat.from_axis_angle(u, th))
        assert np.abs(r1 - r2).max() < 1e-12


def test_unit_quaternion_validation():
    q = quat.UnitQuaternion(1.0 + 5e-10, np.zeros(3))
    assert abs(quat.norm(q) - 1.0) < 1e-15
    with pytest.raises(ValueError):
        quat.UnitQuaternion(1.1, np.zeros(3))


def test_double_cover_equiv_rotation():
    rng = np.random.default_rng(6)
    q = random_unit(rng)
    nq = quat.Quaternion.from_array(-q.as_array())
    u = rng.standard_normal(3)
    assert np.allclose(quat.rotate(q, u), quat.rotate(nq, u), atol=1e-12)
