import numpy as np
import pytest

from amdyn import cli, sim
from amdyn.cli import main


def test_simulate_duration_zero(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    rc = main(["simulate", "quad0", "--duration", "0", "-o", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0].split(",")[:5] == ["t", "p_x", "p_y", "p_z", "q_w"]
    assert float(lines[1].split(",")[0]) == 0.0


def test_simulate_open_loop_schedule(tmp_path):
    sched = tmp_path / "sched.csv"
    sched.write_text("t,actuator,setpoint\n0.0,motor_1,0.4\n")
    out = tmp_path / "traj.csv"
    rc = main(["simulate", "am1", "--schedule", str(sched),
               "--duration", "0.05", "-o", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert len(lines) == 2 + round(0.05 * 240)
    # motor 1 spun up: its thrust column is positive by the end
    header = lines[0].split(",")
    i = header.index("f_mot_1")
    assert float(lines[-1].split(",")[i]) > 0.0


def test_simulate_scenario(tmp_path, capsys):
    out = tmp_path / "swing.csv"
    rc = main(["simulate", "--scenario", "swing", "--duration", "0.1",
               "-o", str(out)])
    assert rc == 0
    err = capsys.readouterr().err
    assert "max |" in err and "final p" in err
    assert out.read_text().count("\n") == 2 + round(0.1 * 240)


def test_control_tracking_report(tmp_path, capsys):
    out = tmp_path / "alt.csv"
    rc = main(["control", "--duration", "0.1", "-o", str(out)])
    assert rc == 0
    err = capsys.readouterr().err
    assert "tracking report" in err and "altitude" in err


def test_missing_model_exit_1(capsys):
    assert main(["simulate", "no_such_model", "--duration", "0"]) == 1
    assert "error:" in capsys.readouterr().err


def test_bad_dt_exit_1(capsys):
    assert main(["simulate", "quad0", "--dt", "-1"]) == 1


def test_simulate_needs_model_or_scenario(capsys):
    assert main(["simulate", "--duration", "0"]) == 1


def test_integration_failure_exit_2(tmp_path, capsys, monkeypatch):
    from amdyn.kinematics import SystemState

    def boom(*args, **kwargs):
        st = SystemState(p=np.zeros(3), q=[1.0, 0, 0, 0])
        raise sim.SimulationError("non-finite state after step", t=0.1,
                                  recent=[(0.0, st)])

    monkeypatch.setattr(cli.sim, "run", boom)
    out = tmp_path / "partial.csv"
    rc = main(["simulate", "quad0", "--duration", "1.0", "-o", str(out)])
    assert rc == 2
    text = out.read_text()
    assert text.endswith("# INCOMPLETE\n")
    assert text.startswith("t,p_x")
    assert "error:" in capsys.readouterr().err


def test_validate_exit_codes(capsys):
    rc = main(["validate", "quad0"])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.count("[PASS]") == 8 and "[FAIL]" not in out


def test_validate_euler_singularity_note(capsys):
    rc = main(["validate", "quad0", "--parameterization", "euler"])
    assert rc == 0
    assert "singular" in capsys.readouterr().out


def test_codegen_artifacts(tmp_path, capsys):
    rc = main(["codegen", "quad0", "--method", "mixed", "-o", str(tmp_path)])
    assert rc == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["quad0_M_mixed.c", "quad0_g_mixed.c", "quad0_h_mixed.c",
                     "quad0_mixed_ops.csv"]
    src = (tmp_path / "quad0_M_mixed.c").read_text()
    assert "void quad0_M_mixed(const double *in, double *out)" in src
    ops = (tmp_path / "quad0_mixed_ops.csv").read_text().splitlines()
    assert ops[0] == "model,links,parameterization,method,matrix,ops,gen_seconds"
    assert len(ops) == 4
    assert all(row.startswith("quad0,0,quaternion,mixed,") for row in ops[1:])


def test_codegen_rejects_over_budget(tmp_path, capsys, monkeypatch):
    import amdyn.symx.builder as builder

    monkeypatch.setattr(builder, "DEFAULT_LINK_BUDGET", 0)
    monkeypatch.setattr("amdyn.symx.check_link_budget",
                        lambda tree, budget=0: builder.check_link_budget(tree, 0))
    rc = main(["codegen", "am1", "-o", str(tmp_path)])
    assert rc == 1
    assert "limited" in capsys.readouterr().err


def test_benchmark_csv(tmp_path, capsys):
    out = tmp_path / "bench.csv"
    rc = main(["benchmark", "quad0", "--iterations", "2", "-o", str(out)])
    assert rc == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "name,iterations,mean_seconds,min_seconds"
    names = [l.split(",")[0] for l in lines[1:]]
    assert names[:2] == ["quad0/forward", "quad0/inverse"]
    assert len(names) == 4  # plus the two backend rows
    assert "platform:" in capsys.readouterr().err


def test_byte_identical_reruns(tmp_path):
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        rc = main(["simulate", "--scenario", "swing", "--duration", "0.1",
                   "--seed", "42", "-o", str(out)])
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
