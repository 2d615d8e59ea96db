import numpy as np
import pytest

from amdyn import constraint as cn
from amdyn import dynamics
from amdyn.kinematics import SystemState
from amdyn.oracles import random_state
from amdyn.scenarios import hover_state, resolve_model


@pytest.fixture(scope="module")
def tree():
    return resolve_model("am1")


def off_manifold_state(tree, rng, defect=1e-3):
    s = random_state(tree, rng)
    s.q *= 1.0 + defect
    return SystemState(s.p, s.q, s.theta, s.dp, s.dq, s.dtheta, strict=False)


def test_residuals():
    s = SystemState(p=np.zeros(3), q=[1.001, 0, 0, 0], strict=False)
    phi, phidot = cn.constraint_residuals(s)
    assert abs(phi - 1e-3) < 1e-12
    assert phidot == 0.0
    s2 = SystemState(p=np.zeros(3), q=[1.0, 0, 0, 0], dq=[0.5, 0, 0, 0])
    _, pd = cn.constraint_residuals(s2)
    assert abs(pd - 0.5) < 1e-15


def test_zero_quaternion_raises():
    s = SystemState(p=np.zeros(3), q=[1.0, 0, 0, 0])
    s.q = np.zeros(4)
    with pytest.raises(ZeroDivisionError):
        cn.constraint_residuals(s)


def test_jacobian_hessian_fd(tree):
    # phidot = A xdot and d/dh phi(x + h dx) second order = dx^T H dx
    rng = np.random.default_rng(0)
    h = 1e-6
    for _ in range(5):
        s = off_manifold_state(tree, rng, defect=rng.uniform(-5e-4, 5e-4))
        a = cn.constraint_jacobian(s)

        def phi_at(x):
            return np.linalg.norm(x[3:7]) - 1.0

        dx = rng.standard_normal(8)
        fd1 = (phi_at(s.x + h * dx) - phi_at(s.x - h * dx)) / (2 * h)
        assert abs(a @ dx - fd1) < 1e-8
        hm = cn.constraint_hessian(s)
        h2 = 1e-4  # second differences need a larger step to beat roundoff
        fd2 = (phi_at(s.x + h2 * dx) - 2 * phi_at(s.x) + phi_at(s.x - h2 * dx)) / h2 ** 2
        assert abs(dx @ hm @ dx - fd2) < 1e-6


def test_on_manifold_corrections_vanish(tree):
    # exact unit norm and tangent velocity: corrections stay below 1e-12
    rng = np.random.default_rng(1)
    s = random_state(tree, rng)
    s.q /= np.linalg.norm(s.q)
    s.dq -= s.q * (s.q @ s.dq)
    f = rng.standard_normal(8)
    cd = cn.constrained_derivatives(tree, s, f)
    assert np.abs(cd.xdot_c - s.xdot).max() < 1e-12
    assert abs(cd.phi) < 1e-12 and abs(cd.phidot) < 1e-12
    # corrected acceleration satisfies phiddot = q . qddot + qdot . qdot = 0
    qdd_radial = s.q @ cd.vdot_c[3:7] + s.dq @ s.dq
    assert abs(qdd_radial) < 1e-9


def test_velocity_projection_restores_tangency(tree):
    rng = np.random.default_rng(2)
    dt_c = 1.0 / 240.0
    s = off_manifold_state(tree, rng)
    cd = cn.constrained_derivatives(tree, s, dt_c=dt_c)
    nq = np.linalg.norm(s.q)
    # corrected velocity drives phi toward zero at rate phi/dt_c
    phidot_c = s.q @ cd.xdot_c[3:7] / nq
    assert abs(phidot_c + cd.phi / dt_c) < 1e-9


def test_one_step_contraction(tree):
    # explicit Euler with the corrected derivative shrinks a 1e-3 defect
    dt = 1.0 / 240.0
    s = hover_state(tree)
    s.q = np.array([1.0 + 1e-3, 0.0, 0.0, 0.0])
    s = SystemState(s.p, s.q, s.theta, strict=False)
    cd = cn.constrained_derivatives(tree, s, dt_c=dt)
    x2 = s.x + dt * cd.xdot_c
    defect2 = abs(np.linalg.norm(x2[3:7]) - 1.0)
    assert defect2 < 1e-4 * 1.001  # one step cancels phi to first order


def test_never_renormalizes(tree):
    # the projection acts through xdot, never by rescaling q itself
    s = hover_state(tree)
    s.q = np.array([1.0 + 1e-3, 0.0, 0.0, 0.0])
    s = SystemState(s.p, s.q, s.theta, strict=False)
    q_before = s.q.copy()
    cn.constrained_derivatives(tree, s)
    assert np.array_equal(s.q, q_before)


def test_dt_c_validation(tree):
    s = hover_state(tree)
    with pytest.raises(ValueError):
        cn.constrained_derivatives(tree, s, dt_c=0.0)
