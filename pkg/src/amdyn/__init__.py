"""Quaternion-parameterized Lagrangian dynamics for aerial manipulators.

Core entry points:

- :mod:`amdyn.urdf` -- model description parsing (URDF subset + sidecar TOML)
- :mod:`amdyn.kinematics` -- frames, Jacobians, :class:`SystemState`
- :mod:`amdyn.dynamics` -- M, C (three methods), g, force maps, fwd/inv dynamics
- :mod:`amdyn.constraint` -- quaternion unit-norm corrective projection
- :mod:`amdyn.sim` -- fixed-step integrators with actuator lag
- :mod:`amdyn.control` -- computed-torque controller
- :mod:`amdyn.symx` -- symbolic expression engine and C code generation
"""

__version__ = "0.1.0"

from .kinematics import SystemState  # noqa: F401
from .urdf import KinematicTree, load_model, parse_urdf  # noqa: F401
