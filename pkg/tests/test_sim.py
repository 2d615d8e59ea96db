import math

import numpy as np
import pytest

from amdyn import constraint as cn
from amdyn import dynamics, sim
from amdyn.kinematics import SystemState
from amdyn.oracles import random_state, zero_gravity
from amdyn.scenarios import hover_state, resolve_model, trimmed_actuators


@pytest.fixture(scope="module")
def tree():
    return resolve_model("am1")


@pytest.fixture(scope="module")
def quad():
    return resolve_model("quad0")


def test_actuator_lag_exact(tree):
    # first-order lag: one step of any size lands on the exact exponential
    acts = sim.ActuatorBank(tree)
    cmd = sim.Commands(u_prop=np.full(4, 1.0), tau_joint=np.array([8.0]))
    tc = tree.params.prop_time_constant
    acts.advance(cmd, tc)
    # 63.2 % of the commanded peak after one time constant
    expect = tree.params.prop_peak_rpm * (1.0 - math.exp(-1.0))
    assert np.allclose(acts.rpm, expect)
    assert np.allclose(acts.torque, 8.0 * (1.0 - math.exp(-1.0)))
    # many small steps compose to the same exponential
    acts2 = sim.ActuatorBank(tree)
    for _ in range(1000):
        acts2.advance(cmd, tc / 1000)
    assert np.abs(acts2.rpm - expect).max() < 1e-6


def test_actuator_command_clamp(tree):
    acts = sim.ActuatorBank(tree)
    cmd = sim.Commands(u_prop=np.full(4, 2.0), tau_joint=np.array([100.0]))
    acts.advance(cmd, 1e3)
    assert np.all(acts.rpm <= tree.params.prop_peak_rpm + 1e-9)
    assert acts.torque[0] <= tree.params.joint_peak_torque + 1e-9


def test_schedule_csv(tree):
    sch = sim.Schedule.from_csv("""t,actuator,setpoint
0.0,motor_1,0.5
# comment line
0.5,joint_1,2.0
0.5,motor_1,0.8
""")
    cmd = sch.commands_at(0.0, tree)
    assert cmd.u_prop[0] == 0.5 and cmd.tau_joint[0] == 0.0
    cmd = sch.commands_at(0.6, tree)
    assert cmd.u_prop[0] == 0.8 and cmd.tau_joint[0] == 2.0
    with pytest.raises(ValueError):
        sim.Schedule.from_csv("0.0,motor_1\n")
    with pytest.raises(ValueError):
        sim.Schedule.from_csv("0.0,rotor_1,0.5\n").commands_at(1.0, tree)


def test_integrator_registry(quad):
    assert set(sim.INTEGRATORS) == {"euler", "semi_implicit", "rk4"}
    # one free-fall step: euler leaves position untouched, semi-implicit and
    # rk4 already move it (dt^2 terms)
    state = hover_state(quad)
    dt = 0.1
    g = 9.81
    out = {}
    for name in sim.INTEGRATORS:
        s2, _ = sim.step(quad, state, sim.ActuatorBank(quad),
                         sim.Commands.zero(quad), dt, integrator=name)
        out[name] = s2
        assert abs(s2.dp[2] + g * dt) < 1e-12
    assert out["euler"].p[2] == 0.0
    assert abs(out["semi_implicit"].p[2] + g * dt * dt) < 1e-12
    assert abs(out["rk4"].p[2] + 0.5 * g * dt * dt) < 1e-12


def test_free_fall_euler_exact(quad):
    # no thrust: explicit Euler gives z_k = -g/2 t (t - dt) exactly
    dt, steps = 1.0 / 240.0, 240
    traj = sim.run(quad, hover_state(quad), sim.Schedule(), steps * dt, dt,
                   integrator="euler")
    g = 9.81
    t_end = traj.times[-1]
    z_expect = -0.5 * g * t_end * (t_end - dt)
    assert abs(traj.states[-1].p[2] - z_expect) < 1e-10
    assert abs(traj.states[-1].dp[2] + g * t_end) < 1e-10


def test_free_fall_rk4(quad):
    dt = 1.0 / 240.0
    traj = sim.run(quad, hover_state(quad), sim.Schedule(), 1.0, dt,
                   integrator="rk4")
    assert abs(traj.states[-1].p[2] + 4.905) < 1e-9


def test_duration_zero_single_row(quad):
    traj = sim.run(quad, hover_state(quad), sim.Schedule(), 0.0, 1.0 / 240.0)
    assert len(traj.states) == 1 and traj.times[0] == 0.0
    csv = traj.to_csv()
    assert csv.count("\n") == 2
    assert csv.splitlines()[0].startswith("t,p_x")


def test_torque_free_spin_drift(tree):
    # spinning base, zero gravity: rk4 holds |q| tighter than euler
    t0 = zero_gravity(tree)
    init = hover_state(tree)
    init.dq = np.array([0.0, 0.0, 0.0, 1.0])  # 2 rad/s yaw
    dt = 1.0 / 240.0
    drift = {}
    for integ in ("euler", "rk4"):
        traj = sim.run(t0, init, sim.Schedule(), 1.0, dt, integrator=integ)
        drift[integ] = np.abs(traj.phi).max()
    assert drift["rk4"] <= drift["euler"]
    assert drift["rk4"] < 1e-6
    assert drift["euler"] < 1e-3


def test_no_renormalization(tree):
    # |q| is never snapped back to 1: mid-flight samples carry a smooth
    # (nonzero) defect whose size is set by the projection, not by resets
    init = hover_state(tree)
    init.dq = np.array([0.0, 0.0, 0.5, 0.0])
    traj = sim.run(tree, init, sim.Schedule(), 0.5, 1.0 / 240.0)
    mid = np.abs(traj.phi[1:])
    assert mid.max() > 0.0  # a renormalizing integrator would pin this to 0


def test_hover_hold(tree):
    # trimmed actuators + schedule holding trim: drifts under 1e-3 m over 1 s
    state = hover_state(tree)
    acts = trimmed_actuators(tree, state)
    u_trim = acts.rpm / tree.params.prop_peak_rpm
    rows = [(0.0, f"motor_{i + 1}", u_trim[i]) for i in range(4)]
    rows.append((0.0, "joint_1", acts.torque[0]))  # hold the arm against gravity
    traj = sim.run(tree, state, sim.Schedule(rows), 1.0, 1.0 / 240.0,
                   actuators=acts)
    assert np.abs(traj.states[-1].p).max() < 1e-3
    assert np.abs(traj.phi).max() < 1e-9


def test_step_validation(tree):
    state = hover_state(tree)
    acts = sim.ActuatorBank(tree)
    with pytest.raises(ValueError):
        sim.step(tree, state, acts, sim.Commands.zero(tree), 0.0)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_simulation_error_carries_context(quad):
    # a controller injecting non-finite force triggers a diagnosable failure
    def bad_controller(t, state, cmd):
        if t > 0.05:
            state.dp[0] = math.inf
        return cmd

    with pytest.raises(sim.SimulationError) as exc:
        sim.run(quad, hover_state(quad), sim.Schedule(), 1.0, 1.0 / 240.0,
                controller=bad_controller)
    assert exc.value.t is not None
    assert len(exc.value.recent) > 0


def test_determinism(tree):
    state = hover_state(tree)
    acts = trimmed_actuators(tree, state)
    out = []
    for _ in range(2):
        traj = sim.run(tree, state, sim.Schedule(), 0.25, 1.0 / 240.0,
                       actuators=acts)
        out.append(traj.to_csv())
    assert out[0] == out[1]
