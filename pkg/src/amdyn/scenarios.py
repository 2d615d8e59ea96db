"""Closed-loop scenario definitions and the scenario runner.

A scenario is a TOML file naming a model plus piecewise-constant reference
segments for the computed-torque controller: position setpoints, joint-angle
setpoints, and a body-pitch rate (integrated into the reference attitude, used
by the pitch-over maneuver).  Scenarios bundled with the package make the
standard validation and control runs single commands.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import tomli

from . import control, sim
from .kinematics import SystemState
from .urdf import KinematicTree, UrdfParseError, load_model

DEFAULT_DT = 1.0 / 240.0


@dataclass
class Segment:
    t: float
    p: np.ndarray = None            # position setpoint, holds until changed
    theta: np.ndarray = None        # joint setpoints
    pitch_rate: float = None        # body-pitch rate (rad/s), holds


@dataclass
class Scenario:
    name: str
    model: str                      # bundled model stem or a filesystem path
    duration: float
    integrator: str = "euler"
    attitude_only: bool = False     # drop position feedback (pure maneuvers)
    segments: list = field(default_factory=list)

    def __post_init__(self):
        self.segments = sorted(self.segments, key=lambda s: s.t)

    @classmethod
    def from_toml(cls, text: str) -> "Scenario":
        try:
            cfg = tomli.loads(text)
        except tomli.TOMLDecodeError as exc:
            raise UrdfParseError(f"bad scenario file: {exc}") from exc
        segments = []
        for seg in cfg.get("segment", []):
            segments.append(Segment(
                t=float(seg["t"]),
                p=None if "p" not in seg else np.asarray(seg["p"], dtype=float),
                theta=None if "theta" not in seg
                else np.asarray(seg["theta"], dtype=float),
                pitch_rate=None if "pitch_rate" not in seg
                else float(seg["pitch_rate"])))
        return cls(name=cfg.get("name", "scenario"), model=cfg["model"],
                   duration=float(cfg["duration"]),
                   integrator=cfg.get("integrator", "euler"),
                   attitude_only=bool(cfg.get("attitude_only", False)),
                   segments=segments)

    def _pitch_at(self, t: float):
        """(angle, rate): integral of the piecewise-constant pitch rate."""
        angle, rate, t_prev = 0.0, 0.0, 0.0
        for seg in self.segments:
            if seg.t > t:
                break
            angle += rate * (seg.t - t_prev)
            t_prev = seg.t
            if seg.pitch_rate is not None:
                rate = seg.pitch_rate
        return angle + rate * (t - t_prev), rate

    def reference_at(self, t: float, n_joints: int) -> control.Reference:
        p = np.zeros(3)
        theta = np.zeros(n_joints)
        for seg in self.segments:
            if seg.t > t:
                break
            if seg.p is not None:
                p = seg.p
            if seg.theta is not None:
                theta = seg.theta
        pitch, rate = self._pitch_at(t)
        q = np.array([math.cos(0.5 * pitch), 0.0, math.sin(0.5 * pitch), 0.0])
        return control.Reference(p=p, q=q, theta=theta,
                                 omega_body=np.array([0.0, rate, 0.0]))


def data_path(name: str) -> Path:
    """Path of a bundled data file (models, scenarios)."""
    return Path(resources.files("amdyn") / "data" / name)


def load_scenario(spec: str) -> Scenario:
    """Load a scenario by bundled name (e.g. ``swing``) or file path."""
    path = Path(spec)
    if not path.exists():
        path = data_path(f"scenario_{spec}.toml")
        if not path.exists():
            raise FileNotFoundError(f"no scenario {spec!r}")
    return Scenario.from_toml(path.read_text(encoding="utf-8"))


def resolve_model(spec: str) -> KinematicTree:
    """Load a model by bundled stem (quad0/am1/am2/am3) or URDF path."""
    path = Path(spec)
    if not path.exists():
        path = data_path(f"{spec}.urdf")
        if not path.exists():
            raise FileNotFoundError(f"no model {spec!r}")
    return load_model(path)


def hover_state(tree: KinematicTree) -> SystemState:
    return SystemState(p=np.zeros(3), q=np.array([1.0, 0.0, 0.0, 0.0]),
                       theta=np.zeros(tree.n_joints), dp=np.zeros(3),
                       dq=np.zeros(4), dtheta=np.zeros(tree.n_joints))


def trimmed_actuators(tree: KinematicTree, state: SystemState) -> sim.ActuatorBank:
    """Actuator bank pre-spun to the gravity-balancing trim."""
    f_mot = control.trim_hover(tree, state)
    n_m = len(tree.params.motors)
    rpm = np.array([math.sqrt(max(f_mot[i], 0.0) / m.k_t)
                    for i, m in enumerate(tree.params.motors)])
    return sim.ActuatorBank(tree, rpm=rpm, torque=f_mot[n_m:])


def make_controller(tree: KinematicTree, scenario: Scenario,
                    gains: control.Gains = None):
    """Computed-torque controller callback for sim.run."""
    g = gains if gains is not None else control.Gains.from_params(tree)
    if scenario.attitude_only:
        k_v, k_p = g.k_v.copy(), g.k_p.copy()
        k_v[:3] = 0.0
        k_p[:3] = 0.0
        g = control.Gains(k_v, k_p)
    n_j = tree.n_joints

    def ctl(t, state, cmd):
        ref = scenario.reference_at(t, n_j)
        _, f_mot = control.computed_torque(tree, state, ref, g)
        u, tau = control.motor_commands(tree, f_mot)
        return sim.Commands(u_prop=u, tau_joint=tau)

    return ctl


def run_scenario(scenario: Scenario, tree: KinematicTree = None,
                 dt=DEFAULT_DT, duration=None, integrator=None) -> sim.Trajectory:
    """Closed-loop run of a scenario from trimmed hover."""
    tree = tree if tree is not None else resolve_model(scenario.model)
    state = hover_state(tree)
    acts = trimmed_actuators(tree, state)
    controller = make_controller(tree, scenario)
    return sim.run(tree, state, sim.Schedule(),
                   scenario.duration if duration is None else duration,
                   dt, integrator or scenario.integrator,
                   actuators=acts, controller=controller)
