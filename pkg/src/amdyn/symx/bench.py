"""Timing harness for dynamics evaluation.

Times forward and inverse dynamics of the numeric engine (optionally per
link count) and the two dual-number backends (compiled extension vs the
pure-Python fallback).  Reports wall time per iteration; no hard thresholds
are applied here — orderings are asserted by the test suite.
"""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass, field

import numpy as np

from .. import dynamics
from .._dualpy import Dual as PyDual
from ..dual import BACKEND, Dual
from ..kinematics import SystemState
from ..urdf import KinematicTree


@dataclass
class TimingEntry:
    name: str
    iterations: int
    mean_seconds: float
    min_seconds: float


@dataclass
class TimingReport:
    platform: str = field(default_factory=platform.platform)
    backend: str = BACKEND
    entries: list = field(default_factory=list)

    def entry(self, name):
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def rows(self):
        for e in self.entries:
            yield {"name": e.name, "iterations": e.iterations,
                   "mean_seconds": e.mean_seconds, "min_seconds": e.min_seconds}


def time_callable(fn, iterations: int):
    """(mean, min) wall seconds per call; (nan, nan) for zero iterations."""
    if iterations <= 0:
        return float("nan"), float("nan")
    samples = []
    for _ in range(iterations):
        t0 = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - t0)
    return float(np.mean(samples)), float(np.min(samples))


def _random_state(tree: KinematicTree, rng) -> SystemState:
    n_j = tree.n_joints
    q = rng.standard_normal(4)
    q /= np.linalg.norm(q)
    dq = rng.standard_normal(4)
    dq -= q * (q @ dq)          # tangent velocity, as in simulation
    return SystemState(p=rng.standard_normal(3), q=q,
                       theta=rng.standard_normal(n_j),
                       dp=rng.standard_normal(3), dq=dq,
                       dtheta=rng.standard_normal(n_j), strict=False)


def benchmark_dynamics(tree: KinematicTree, iterations: int, seed=42,
                       label="model") -> TimingReport:
    """Mean/min time per forward- and inverse-dynamics evaluation."""
    report = TimingReport()
    if iterations <= 0:
        return report
    rng = np.random.default_rng(seed)
    state = _random_state(tree, rng)
    n = 7 + tree.n_joints
    f_x = rng.standard_normal(n)
    xdd = rng.standard_normal(n)

    mean_f, min_f = time_callable(
        lambda: dynamics.forward_dynamics(tree, state, f_x), iterations)
    report.entries.append(TimingEntry(f"{label}/forward", iterations, mean_f, min_f))
    mean_i, min_i = time_callable(
        lambda: dynamics.inverse_dynamics(tree, state, xdd), iterations)
    report.entries.append(TimingEntry(f"{label}/inverse", iterations, mean_i, min_i))
    return report


def benchmark_backends(tree: KinematicTree, iterations: int, seed=42) -> TimingReport:
    """Compare the compiled dual-number backend against the pure-Python one."""
    report = TimingReport()
    if iterations <= 0:
        return report
    rng = np.random.default_rng(seed)
    state = _random_state(tree, rng)
    for name, cls in (("compiled" if BACKEND == "cython" else "default", Dual),
                      ("python", PyDual)):
        mean_s, min_s = time_callable(
            lambda: dynamics.evaluate(tree, state, dual_cls=cls), iterations)
        report.entries.append(TimingEntry(f"evaluate/{name}", iterations, mean_s, min_s))
    return report
