"""Fixed-step simulation of the constrained system with actuator lag.

The state never has its quaternion renormalized; the constraint projection is
the only mechanism keeping |q| near 1.  Actuators follow first-order lag
dynamics advanced by the exact discrete exponential update, so their behavior
is independent of the integration step.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from . import constraint as cn
from . import dynamics
from .kinematics import SystemState
from .urdf import KinematicTree


class SimulationError(RuntimeError):
    """Integration failure; carries the failing time and recent samples."""

    def __init__(self, message, t=None, recent=None):
        super().__init__(message)
        self.t = t
        self.recent = recent or []


class ActuatorBank:
    """First-order lag states for all motors and joint drives.

    Motors take normalized commands u in [0, 1] scaled by the peak speed;
    joints take torque commands clamped to +-peak torque.  Outputs advance by
    y += (1 - exp(-dt/T)) (K u - y), the exact solution of the lag ODE.
    """

    def __init__(self, tree: KinematicTree, rpm=None, torque=None):
        p = tree.params
        self.n_motors = len(p.motors)
        self.n_joints = tree.n_joints
        self.prop_tc = p.prop_time_constant
        self.prop_peak = p.prop_peak_rpm
        self.joint_tc = p.joint_time_constant
        self.joint_peak = p.joint_peak_torque
        self.rpm = np.zeros(self.n_motors) if rpm is None \
            else np.asarray(rpm, dtype=float).copy()
        self.torque = np.zeros(self.n_joints) if torque is None \
            else np.asarray(torque, dtype=float).copy()

    def copy(self):
        out = ActuatorBank.__new__(ActuatorBank)
        out.__dict__.update(self.__dict__)
        out.rpm = self.rpm.copy()
        out.torque = self.torque.copy()
        return out

    def advance(self, commands, dt):
        """Exact lag update toward the command targets over dt."""
        u = np.clip(np.asarray(commands.u_prop, dtype=float), 0.0, 1.0)
        tau = np.clip(np.asarray(commands.tau_joint, dtype=float),
                      -self.joint_peak, self.joint_peak)
        if self.n_motors:
            alpha = 1.0 - math.exp(-dt / self.prop_tc)
            self.rpm += alpha * (self.prop_peak * u - self.rpm)
        if self.n_joints:
            alpha = 1.0 - math.exp(-dt / self.joint_tc)
            self.torque += alpha * (tau - self.torque)

    def outputs(self, tree: KinematicTree) -> np.ndarray:
        """Motor thrust magnitudes (k_t w^2) followed by joint torques."""
        thr = np.array([m.k_t * w * w for m, w in zip(tree.params.motors, self.rpm)])
        return np.concatenate([thr, self.torque])


@dataclass
class Commands:
    u_prop: np.ndarray      # normalized [0, 1] per motor
    tau_joint: np.ndarray   # N m per joint

    @classmethod
    def zero(cls, tree: KinematicTree):
        return cls(np.zeros(len(tree.params.motors)), np.zeros(tree.n_joints))


class Schedule:
    """Piecewise-constant per-actuator setpoints.

    Rows are (t, actuator_id, setpoint) with ids ``motor_<i>`` (normalized
    command) and ``joint_<i>`` (torque), 1-based.  Setpoints hold until
    overwritten.
    """

    def __init__(self, rows=()):
        self.rows = sorted(((float(t), str(a), float(s)) for t, a, s in rows),
                           key=lambda r: r[0])

    @classmethod
    def from_csv(cls, text: str) -> "Schedule":
        rows = []
        for i, line in enumerate(text.splitlines()):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if i == 0 and parts[0].lower() == "t":
                continue
            if len(parts) != 3:
                raise ValueError(f"schedule line {i + 1}: expected 3 columns")
            rows.append((parts[0], parts[1], parts[2]))
        return cls(rows)

    def commands_at(self, t: float, tree: KinematicTree) -> Commands:
        cmd = Commands.zero(tree)
        for rt, aid, sp in self.rows:
            if rt > t + 1e-12:
                break
            kind, _, idx = aid.partition("_")
            i = int(idx) - 1
            if kind == "motor":
                cmd.u_prop[i] = sp
            elif kind == "joint":
                cmd.tau_joint[i] = sp
            else:
                raise ValueError(f"unknown actuator id {aid!r}")
        return cmd


@dataclass
class Trajectory:
    times: np.ndarray          # (n,)
    states: list               # n SystemState
    f_mot: np.ndarray          # (n, n_motors + n_joints)
    phi: np.ndarray            # (n,) unity-constraint residuals

    def to_csv(self, n_joints=None) -> str:
        st0 = self.states[0]
        n_j = st0.n_joints if n_joints is None else n_joints
        n_m = self.f_mot.shape[1]
        cols = (["t", "p_x", "p_y", "p_z", "q_w", "q_x", "q_y", "q_z"]
                + [f"theta_{i + 1}" for i in range(n_j)]
                + ["dp_x", "dp_y", "dp_z", "dq_w", "dq_x", "dq_y", "dq_z"]
                + [f"dtheta_{i + 1}" for i in range(n_j)]
                + [f"f_mot_{i + 1}" for i in range(n_m)]
                + ["phi_unity"])
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        for k, st in enumerate(self.states):
            vals = np.concatenate([[self.times[k]], st.p, st.q, st.theta,
                                   st.dp, st.dq, st.dtheta,
                                   self.f_mot[k], [self.phi[k]]])
            buf.write(",".join(f"{v:.17g}" for v in vals) + "\n")
        return buf.getvalue()


def _deriv(tree, x, v, f_x, dt_c, nu):
    st = SystemState.from_vectors(x, v)
    cd = cn.constrained_derivatives(tree, st, f_x, dt_c=dt_c, nu=nu)
    return cd.xdot_c, cd.vdot_c


def euler_forward(tree, x, v, f_x, dt, dt_c, nu):
    dx, dv = _deriv(tree, x, v, f_x, dt_c, nu)
    return x + dt * dx, v + dt * dv


def semi_implicit_euler(tree, x, v, f_x, dt, dt_c, nu):
    st = SystemState.from_vectors(x, v)
    sm = dynamics.evaluate(tree, st, nu=nu)
    cd = cn.constrained_derivatives(tree, st, f_x, dt_c=dt_c, nu=nu, matrices=sm)
    v_new = v + dt * cd.vdot_c
    st2 = SystemState.from_vectors(x, v_new)
    cd2 = cn.constrained_derivatives(tree, st2, f_x, dt_c=dt_c, nu=nu, matrices=sm)
    return x + dt * cd2.xdot_c, v_new


def rk4(tree, x, v, f_x, dt, dt_c, nu):
    k1x, k1v = _deriv(tree, x, v, f_x, dt_c, nu)
    k2x, k2v = _deriv(tree, x + 0.5 * dt * k1x, v + 0.5 * dt * k1v, f_x, dt_c, nu)
    k3x, k3v = _deriv(tree, x + 0.5 * dt * k2x, v + 0.5 * dt * k2v, f_x, dt_c, nu)
    k4x, k4v = _deriv(tree, x + dt * k3x, v + dt * k3v, f_x, dt_c, nu)
    return (x + dt / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x),
            v + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v))


INTEGRATORS = {
    "euler": euler_forward,
    "semi_implicit": semi_implicit_euler,
    "rk4": rk4,
}


def applied_force(tree: KinematicTree, state: SystemState,
                  actuators: ActuatorBank) -> np.ndarray:
    """Generalized force from current actuator outputs: f_x = M_F [wrench; tau]."""
    wrench = dynamics.propulsion_forces(tree, actuators.rpm) \
        if actuators.n_motors else np.zeros(6)
    f_b = np.concatenate([wrench, actuators.torque])
    return dynamics.force_mapping(state) @ f_b


def step(tree: KinematicTree, state: SystemState, actuators: ActuatorBank,
         commands: Commands, dt: float, integrator="euler", dt_c=None,
         nu=dynamics.DEFAULT_NU):
    """One fixed step: exact actuator update, then the chosen integrator."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    fn = INTEGRATORS[integrator] if isinstance(integrator, str) else integrator
    acts = actuators.copy()
    acts.advance(commands, dt)
    f_x = applied_force(tree, state, acts)
    x, v = fn(tree, state.x, state.xdot, f_x, dt, dt_c if dt_c else dt, nu)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
        raise SimulationError("non-finite state after step")
    return SystemState.from_vectors(x, v), acts


def run(tree: KinematicTree, initial: SystemState, schedule: Schedule,
        duration: float, dt: float, integrator="euler",
        actuators: ActuatorBank = None, controller=None,
        nu=dynamics.DEFAULT_NU) -> Trajectory:
    """Simulate for ceil(duration/dt) steps, recording every sample.

    ``controller``, if given, is called as controller(t, state, commands) and
    returns the Commands actually applied (closed loop); the schedule then
    provides its reference/feedforward inputs.
    """
    n_steps = int(math.ceil(duration / dt - 1e-12)) if duration > 0 else 0
    acts = actuators.copy() if actuators is not None else ActuatorBank(tree)
    state = initial.copy()
    times = np.empty(n_steps + 1)
    states, fm, phi = [], np.empty((n_steps + 1, acts.n_motors + acts.n_joints)), \
        np.empty(n_steps + 1)
    recent = []

    for k in range(n_steps + 1):
        t = k * dt
        times[k] = t
        states.append(state.copy())
        fm[k] = acts.outputs(tree)
        phi[k] = cn.constraint_residuals(state)[0]
        recent.append((t, state.copy()))
        del recent[:-10]
        if k == n_steps:
            break
        cmd = schedule.commands_at(t, tree)
        if controller is not None:
            cmd = controller(t, state, cmd)
        try:
            state, acts = step(tree, state, acts, cmd, dt, integrator, nu=nu)
        except SimulationError as exc:
            raise SimulationError(f"integration failed at t={t + dt:.6f}: {exc}",
                                  t=t + dt, recent=recent) from exc
    return Trajectory(times=times, states=states, f_mot=fm, phi=phi)
