"""Command-line front end.

Subcommands: ``simulate`` (open-loop schedule or closed-loop scenario),
``control`` (closed-loop scenario demo), ``validate`` (oracle suite),
``codegen`` (C source + op-count report), ``benchmark`` (timing CSV).

Exit codes: 0 success, 1 parse/validation error, 2 integration failure,
3 validate-check failure.  A CSV cut short by a failure always ends with a
``# INCOMPLETE`` marker line.
"""

from __future__ import annotations

import argparse
import io
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import control, oracles, scenarios, sim
from .sim import Schedule, SimulationError, Trajectory
from .urdf import UrdfError

EXIT_OK = 0
EXIT_PARSE = 1
EXIT_INTEGRATION = 2
EXIT_VALIDATE = 3

DEFAULT_DT = 1.0 / 240.0


@dataclass
class RunConfig:
    subcommand: str
    model: str = None
    config: str = None            # sidecar TOML override
    schedule: str = None
    scenario: str = None
    dt: float = DEFAULT_DT
    duration: float = None
    integrator: str = "euler"
    method: str = "christoffel"
    parameterization: str = "quaternion"
    seed: int = 42
    output: str = None
    iterations: int = 100
    pin_core: bool = False

    def validate(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.duration is not None and self.duration < 0:
            raise ValueError("duration must be >= 0")


def _load_tree(cfg: RunConfig):
    from .urdf import load_model

    path = Path(cfg.model)
    if path.exists():
        return load_model(path, cfg.config)
    if cfg.config is not None:
        raise FileNotFoundError(f"model file {cfg.model!r} not found")
    return scenarios.resolve_model(cfg.model)


def _write_output(cfg: RunConfig, text: str):
    if cfg.output:
        Path(cfg.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _partial_csv(recent, tree) -> str:
    """Best-effort CSV of the last recorded samples, marked incomplete."""
    from . import constraint as cn

    if not recent:
        return "# INCOMPLETE\n"
    n_act = len(tree.params.motors) + tree.n_joints
    times = np.array([t for t, _ in recent])
    states = [s for _, s in recent]
    phi = np.array([cn.constraint_residuals(s)[0] for s in states])
    traj = Trajectory(times=times, states=states,
                      f_mot=np.zeros((len(states), n_act)), phi=phi)
    return traj.to_csv() + "# INCOMPLETE\n"


def _summarize(traj: Trajectory) -> str:
    last = traj.states[-1]
    buf = io.StringIO()
    buf.write(f"steps: {len(traj.states) - 1}\n")
    buf.write(f"max |‖q‖-1|: {np.abs(traj.phi).max():.6e}\n")
    buf.write(f"final t: {traj.times[-1]:.6f}\n")
    buf.write(f"final p: {np.array2string(last.p, precision=6)}\n")
    buf.write(f"final q: {np.array2string(last.q, precision=6)}\n")
    if last.theta.size:
        buf.write(f"final theta: {np.array2string(last.theta, precision=6)}\n")
    return buf.getvalue()


def cmd_simulate(cfg: RunConfig) -> int:
    tree = _load_tree(cfg) if cfg.model else None
    if cfg.scenario:
        sc = scenarios.load_scenario(cfg.scenario)
        if tree is None:
            tree = scenarios.resolve_model(sc.model)
        duration = sc.duration if cfg.duration is None else cfg.duration
        integrator = sc.integrator if cfg.integrator is None else cfg.integrator
        state = scenarios.hover_state(tree)
        acts = scenarios.trimmed_actuators(tree, state)
        controller = scenarios.make_controller(tree, sc)
        schedule = Schedule()
    else:
        if tree is None:
            raise ValueError("simulate needs a model or a scenario")
        duration = 0.0 if cfg.duration is None else cfg.duration
        integrator = cfg.integrator or "euler"
        state = scenarios.hover_state(tree)
        acts = None
        controller = None
        schedule = Schedule.from_csv(Path(cfg.schedule).read_text(encoding="utf-8")) \
            if cfg.schedule else Schedule()
    try:
        traj = sim.run(tree, state, schedule, duration, cfg.dt, integrator,
                       actuators=acts, controller=controller)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_output(cfg, _partial_csv(exc.recent, tree))
        return EXIT_INTEGRATION
    _write_output(cfg, traj.to_csv())
    print(_summarize(traj), file=sys.stderr, end="")
    return EXIT_OK


def _settle_time(times, values, target, band=0.05, scale=None) -> float:
    """First time after which the signal stays within the band around target."""
    tol = band * (abs(scale) if scale is not None else max(abs(target), 1.0))
    outside = np.abs(np.asarray(values) - target) > tol
    if not outside.any():
        return 0.0
    last = np.nonzero(outside)[0][-1]
    if last + 1 >= len(times):
        return float("inf")
    return float(times[last + 1])


def cmd_control(cfg: RunConfig) -> int:
    cfg.scenario = cfg.scenario or "altitude_step"
    sc = scenarios.load_scenario(cfg.scenario)
    tree = _load_tree(cfg) if cfg.model else scenarios.resolve_model(sc.model)
    duration = sc.duration if cfg.duration is None else cfg.duration
    integrator = sc.integrator if cfg.integrator is None else cfg.integrator
    state = scenarios.hover_state(tree)
    acts = scenarios.trimmed_actuators(tree, state)
    controller = scenarios.make_controller(tree, sc)
    try:
        traj = sim.run(tree, state, Schedule(), duration, cfg.dt, integrator,
                       actuators=acts, controller=controller)
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        _write_output(cfg, _partial_csv(exc.recent, tree))
        return EXIT_INTEGRATION
    _write_output(cfg, traj.to_csv())
    ref = sc.reference_at(duration, tree.n_joints)
    z = [s.p[2] for s in traj.states]
    print("tracking report (5% settle band):", file=sys.stderr)
    print(f"  altitude -> {ref.p[2]:.3f} m: settle "
          f"{_settle_time(traj.times, z, ref.p[2]):.3f} s", file=sys.stderr)
    for j in range(tree.n_joints):
        th = [s.theta[j] for s in traj.states]
        print(f"  joint {j + 1} -> {ref.theta[j]:.3f} rad: settle "
              f"{_settle_time(traj.times, th, ref.theta[j]):.3f} s", file=sys.stderr)
    print(_summarize(traj), file=sys.stderr, end="")
    return EXIT_OK


def cmd_validate(cfg: RunConfig) -> int:
    tree = _load_tree(cfg)
    results = oracles.run_suite(tree, seed=cfg.seed)
    for r in results:
        print(r)
    if cfg.parameterization == "euler":
        from .symx import euler_rate_matrix

        det = float(np.linalg.det(euler_rate_matrix(0.0, np.pi / 2)))
        print(f"[INFO] euler rate matrix at pitch=90°: det = {det:.3e} (singular)")
    return EXIT_OK if all(r.passed for r in results) else EXIT_VALIDATE


def cmd_codegen(cfg: RunConfig) -> int:
    from .symx import build_symbolic_dynamics, check_link_budget, op_count_report
    from .symx.emit import emit_function

    tree = _load_tree(cfg)
    check_link_budget(tree)
    model_name = Path(cfg.model).stem
    sd = build_symbolic_dynamics(tree, method=cfg.method,
                                 parameterization=cfg.parameterization,
                                 model_name=model_name)
    outdir = Path(cfg.output or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    sym_index = {name: i for i, name in enumerate(sd.state_names)}
    for mat_name, (shape, roots) in sorted(sd.matrices.items()):
        if len(shape) == 2:
            rows, cols = shape
            ordered = [roots[i * cols + j] for j in range(cols) for i in range(rows)]
        else:
            ordered = list(roots)
        fn = f"{model_name}_{mat_name}_{cfg.method}"
        src = "#include <math.h>\n\n" + emit_function(
            sd.graph, ordered, fn, 2 * sd.n, sym_index) + "\n"
        (outdir / f"{fn}.c").write_text(src, encoding="utf-8")
        print(f"wrote {outdir / (fn + '.c')}", file=sys.stderr)
    rep = op_count_report(sd)
    lines = ["model,links,parameterization,method,matrix,ops,gen_seconds"]
    for row in rep.rows():
        lines.append(f"{row['model']},{row['links']},{row['parameterization']},"
                     f"{row['method']},{row['matrix']},{row['ops']},"
                     f"{row['gen_seconds']:.6f}")
    report = "\n".join(lines) + "\n"
    (outdir / f"{model_name}_{cfg.method}_ops.csv").write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    return EXIT_OK


def cmd_benchmark(cfg: RunConfig) -> int:
    from .symx import benchmark_backends, benchmark_dynamics

    if cfg.pin_core:
        import os

        try:
            os.sched_setaffinity(0, {min(os.sched_getaffinity(0))})
        except (AttributeError, OSError):
            print("warning: CPU pinning unavailable", file=sys.stderr)
    lines = ["name,iterations,mean_seconds,min_seconds"]
    report = None
    for spec in cfg.model.split(","):
        tree = scenarios.resolve_model(spec.strip())
        label = Path(spec.strip()).stem
        report = benchmark_dynamics(tree, cfg.iterations, seed=cfg.seed, label=label)
        for row in report.rows():
            lines.append(f"{row['name']},{row['iterations']},"
                         f"{row['mean_seconds']:.9f},{row['min_seconds']:.9f}")
        backends = benchmark_backends(tree, cfg.iterations, seed=cfg.seed)
        for row in backends.rows():
            lines.append(f"{label}/{row['name']},{row['iterations']},"
                         f"{row['mean_seconds']:.9f},{row['min_seconds']:.9f}")
    text = "\n".join(lines) + "\n"
    _write_output(cfg, text)
    if report is not None:
        print(f"platform: {report.platform} (backend: {report.backend})",
              file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="amdyn",
                                 description="Aerial-manipulator dynamics toolkit")
    sub = ap.add_subparsers(dest="subcommand", required=True)

    def common(p, model_required=True):
        if model_required:
            p.add_argument("model", help="URDF path or bundled model name")
        else:
            p.add_argument("model", nargs="?", default=None)
        p.add_argument("--config", help="sidecar TOML (defaults to <model>.toml)")
        p.add_argument("--seed", type=int, default=42)

    p = sub.add_parser("simulate", help="integrate the model")
    common(p, model_required=False)
    p.add_argument("--schedule", help="open-loop command schedule CSV")
    p.add_argument("--scenario", help="bundled closed-loop scenario name or path")
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--integrator", choices=sorted(sim.INTEGRATORS), default=None)
    p.add_argument("--output", "-o", help="trajectory CSV path (default stdout)")

    p = sub.add_parser("control", help="closed-loop computed-torque demo")
    common(p, model_required=False)
    p.add_argument("--scenario", default="altitude_step")
    p.add_argument("--dt", type=float, default=DEFAULT_DT)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--integrator", choices=sorted(sim.INTEGRATORS), default=None)
    p.add_argument("--output", "-o")

    p = sub.add_parser("validate", help="run the numerical oracle suite")
    common(p)
    p.add_argument("--parameterization", choices=("quaternion", "euler"),
                   default="quaternion")

    p = sub.add_parser("codegen", help="emit C source and op-count report")
    common(p)
    p.add_argument("--method", choices=("christoffel", "energy", "mixed"),
                   default="christoffel")
    p.add_argument("--parameterization", choices=("quaternion", "euler"),
                   default="quaternion")
    p.add_argument("--output", "-o", help="output directory", default=".")

    p = sub.add_parser("benchmark", help="dynamics timing report")
    common(p)
    p.add_argument("--iterations", type=int, default=100)
    p.add_argument("--output", "-o", help="timing CSV path (default stdout)")
    p.add_argument("--pin-core", action="store_true",
                   help="pin the process to one CPU for stable timing")
    return ap


COMMANDS = {
    "simulate": cmd_simulate,
    "control": cmd_control,
    "validate": cmd_validate,
    "codegen": cmd_codegen,
    "benchmark": cmd_benchmark,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(subcommand=args.subcommand)
    for name, value in vars(args).items():
        if name != "subcommand" and hasattr(cfg, name):
            setattr(cfg, name, value)
    if getattr(args, "integrator", None) is not None:
        cfg.integrator = args.integrator
    elif args.subcommand in ("simulate", "control"):
        cfg.integrator = None
    try:
        cfg.validate()
        return COMMANDS[args.subcommand](cfg)
    except (UrdfError, FileNotFoundError, ValueError, control.ControlError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
