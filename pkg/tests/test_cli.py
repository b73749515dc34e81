import subprocess
import sys
from pathlib import Path

import pytest

from solwave.cli import main
from solwave.config import parse_config
from solwave import ConfigurationError

BENCH = """\
# scalar benchmark
command = solve
model.name = scalar_quartic_quintic
grid.n = 3
grid.r_max = 40
grid.N = 2000
sigma.trial.z = 0.6666666666666666
sigma.trial.R = 12
solver.grad_tolerance = 1e-6
"""

SMALL = """\
model.name = scalar_quartic_quintic
grid.n = 3
grid.r_max = 30
grid.N = 600
"""


def run(tmp_path, text, name="run", extra=()):
    cfg = tmp_path / f"{name}.cfg"
    cfg.write_text(text)
    out = tmp_path / name
    return main(["--config", str(cfg), "--out", str(out), *extra]), out


def test_solve_passes(tmp_path, capsys):
    status, out = run(tmp_path, BENCH)
    assert status == 0
    for f in ("manifest.txt", "summary.txt", "solver_result.txt", "diagnostics.txt", "trace.csv", "profile.csv"):
        assert (out / f).is_file()
    summary = (out / "summary.txt").read_text()
    assert "status: pass" in summary and "converged: true" in summary
    assert "status: pass" in capsys.readouterr().out


def test_solve_reproducible(tmp_path):
    _, a = run(tmp_path, BENCH, "a")
    _, b = run(tmp_path, BENCH, "b")
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        if name != "manifest.txt":
            assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_unconverged_exits_one(tmp_path):
    status, out = run(tmp_path, BENCH + "solver.max_iterations = 1\nsolver.restarts = 1\nsolver.polish_iterations = 0\n")
    assert status == 1
    assert "failed: solver did not converge" in (out / "summary.txt").read_text()


def test_q_seven_exits_two(tmp_path, capsys):
    text = "command = check-model\nmodel.name = coupled_k2\nmodel.p = 2\nmodel.q = 7\n"
    status, _ = run(tmp_path, text)
    assert status == 2
    assert "2p < q < 5 violated" in capsys.readouterr().err


def test_unknown_field_names_line(tmp_path, capsys):
    status, _ = run(tmp_path, BENCH + "solver.step = 3\n")
    assert status == 2
    assert "run.cfg:10: unknown field" in capsys.readouterr().err


def test_duplicate_field():
    with pytest.raises(ConfigurationError, match=r":3: duplicate field"):
        parse_config("command = solve\ngrid.N = 10\ngrid.N = 20\n")


def test_unknown_command(tmp_path):
    assert run(tmp_path, "command = fly\n")[0] == 2


def test_check_model(tmp_path):
    status, out = run(tmp_path, "command = check-model\nmodel.name = coupled_k2\nmodel.p = 1.5\nmodel.q = 4.5\n")
    assert status == 0
    text = (out / "assumption_report.txt").read_text()
    assert "a4_holds = true" in text


def test_check_model_uncoupled_fails_a4(tmp_path):
    status, out = run(tmp_path, "command = check-model\nmodel.name = uncoupled_sum\nmodel.count = 2\n")
    assert status == 1
    assert "a4_holds = false" in (out / "summary.txt").read_text()


def test_sweep(tmp_path):
    status, out = run(tmp_path, "command = sweep\n" + SMALL + "sweep.sigma_set = 100, 300\naudit.eta = 10\n")
    assert status == 0
    lines = (out / "sweep.csv").read_text().splitlines()
    assert lines[0].startswith("row,probe_of,sigma")
    assert len(lines) == 1 + 2 + 4  # two rows, two probes each


def test_hylomorphy(tmp_path):
    status, out = run(tmp_path, "command = hylomorphy\n" + SMALL.replace("600", "3000") + "hylomorphy.R_list = 5, 10, 20\n")
    assert status == 0
    assert (out / "hylomorphy.csv").read_text().startswith("R,xi_squared\n")


def test_coercivity(tmp_path):
    text = "command = coercivity\nmodel.name = scalar_quartic_quintic\ngrid.n = 3\ngrid.r_max = 1e6\ngrid.N = 4000\naudit.plateau = 60\naudit.bumps = 10\n"
    status, out = run(tmp_path, text)
    assert status == 0
    assert "violations = 0" in (out / "coercivity_audit.txt").read_text()


def test_evolve(tmp_path):
    text = "command = evolve\n" + SMALL + "sigma = 300\nevolve.T = 2\nevolve.compare_halved = true\n"
    status, out = run(tmp_path, text)
    assert status == 0
    assert (out / "evolution.csv").read_text().startswith("t,E,C_1,profile_drift\n")
    assert "energy_drift_halved" in (out / "evolution_report.txt").read_text()


def test_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("SOLWAVE_THREADS", "3")
    _, out = run(tmp_path, "command = check-model\nmodel.name = scalar_quartic_quintic\n")
    assert "threads = 3" in (out / "manifest.txt").read_text()
    monkeypatch.setenv("SOLWAVE_THREADS", "zero")
    assert run(tmp_path, "command = check-model\nmodel.name = scalar_quartic_quintic\n", "bad")[0] == 2


def test_seed_override(tmp_path):
    _, out = run(tmp_path, "command = check-model\nmodel.name = scalar_quartic_quintic\nseed = 1\n", extra=("--seed", "9"))
    assert "seed = 9" in (out / "manifest.txt").read_text()


def test_module_entry_point(tmp_path):
    cfg = tmp_path / "m.cfg"
    cfg.write_text("command = check-model\nmodel.name = scalar_quartic_quintic\n")
    proc = subprocess.run(
        [sys.executable, "-m", "solwave", "--config", str(cfg), "--out", str(tmp_path / "m")],
        capture_output=True, text=True, cwd=Path(__file__).parent,
    )
    assert proc.returncode == 0, proc.stderr
    assert "status: pass" in proc.stdout
