import csv
import subprocess
import sys

import numpy as np
import pytest

from plastodyn import cli
from plastodyn.algebra import build_m
from plastodyn.driver import NumericalError
from plastodyn.files import read_trajectory, write_trajectory
from plastodyn.grid import pulse_scenario
from plastodyn.plastic import run_plastic

PLASTIC = """
[grid]
cells = 100
[initial]
profile = bump
amplitude = 2.0
width = 0.15
[params]
lam = 0.5
T = 0.5
[checks]
run = energy, cone, flow_rule, boundary
[output]
stride = 10
"""


def _write(tmp_path, text, name="run.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_run_plastic_pulse(tmp_path, capsys):
    out = tmp_path / "out"
    code = cli.main(["run", "--config", _write(tmp_path, PLASTIC), "--out", str(out)])
    text = capsys.readouterr().out
    assert code == cli.EXIT_OK, text
    assert (out / "energy.csv").is_file() and (out / "report.txt").is_file()
    assert (out / "snap_0.csv").is_file()
    report = (out / "report.txt").read_text()
    assert "energy" in report and "FAIL" not in report
    with open(out / "energy.csv") as fh:
        rows = list(csv.reader(fh))
    n_steps = len(rows) - 2   # header and the initial row
    assert n_steps > 0
    assert (out / f"snap_{n_steps}.csv").is_file()


def test_run_zero_data(tmp_path):
    cfg = "[grid]\ncells = 20\n[params]\nT = 0.2\n[checks]\nrun = energy, cone\n"
    out = tmp_path / "z"
    assert cli.main(["run", "--config", _write(tmp_path, cfg), "--out", str(out)]) == 0
    with open(out / "energy.csv") as fh:
        rows = list(csv.reader(fh))[1:]
    assert rows and all(float(x) == 0.0 for r in rows for x in r[1:])


def test_run_negative_eps_is_input_error(tmp_path, capsys):
    cfg = PLASTIC.replace("lam = 0.5", "lam = 0.5\neps = -0.01")
    assert cli.main(["run", "--config", _write(tmp_path, cfg), "--out",
                     str(tmp_path / "o")]) == cli.EXIT_INPUT
    assert "params.eps" in capsys.readouterr().err


def test_run_input_errors(tmp_path):
    assert cli.main(["run"]) == cli.EXIT_INPUT
    assert cli.main(["run", "--config", str(tmp_path / "missing.ini")]) == cli.EXIT_INPUT
    assert cli.main(["run", "--config", _write(tmp_path, PLASTIC), "--stride", "0"]) == 2
    assert cli.main(["bogus"]) == cli.EXIT_INPUT


def test_run_numerical_abort(tmp_path, monkeypatch):
    def boom(*args, **kwargs):
        raise NumericalError("non-finite values at step 3")
    monkeypatch.setattr(cli, "integrate", boom)
    assert cli.main(["run", "--config", _write(tmp_path, PLASTIC)]) == cli.EXIT_NUMERIC


def test_sweep_eps(tmp_path):
    out = tmp_path / "sw"
    cfg = PLASTIC.replace("T = 0.5", "T = 0.3")
    code = cli.main(["sweep", "--config", _write(tmp_path, cfg), "--out", str(out),
                     "--axis", "eps", "--values", "0.1,0.03,0.01"])
    assert code == 0
    with open(out / "sweep_eps.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 3
    dev = [float(r["dev_v"]) for r in rows]
    assert dev[0] > dev[1] > dev[2]


def test_sweep_lambda(tmp_path):
    out = tmp_path / "sl"
    cfg = PLASTIC.replace("amplitude = 2.0", "amplitude = 0.5")
    code = cli.main(["sweep", "--config", _write(tmp_path, cfg), "--out", str(out),
                     "--axis", "lambda", "--values", "0.1,0.01,0.001", "--mode", "dirichlet"])
    assert code == 0
    with open(out / "sweep_lambda.csv") as fh:
        rows = list(csv.DictReader(fh))
    gap = [float(r["gap"]) for r in rows]
    assert gap[0] > gap[1] > gap[2]


def test_sweep_input_errors(tmp_path):
    path = _write(tmp_path, PLASTIC)
    assert cli.main(["sweep", "--config", path, "--axis", "eps", "--values", ""]) == 2
    assert cli.main(["sweep", "--config", path, "--axis", "eps"]) == 2
    assert cli.main(["sweep", "--config", path, "--axis", "eps", "--values", "a,b"]) == 2
    assert cli.main(["sweep", "--config", path, "--axis", "lambda", "--values", "1",
                     "--mode", "impedance"]) == 2


def _matrix(tmp_path, m, name="m.txt"):
    path = tmp_path / name
    path.write_text("\n".join(" ".join(repr(float(x)) for x in row) for row in m) + "\n")
    return str(path)


def test_verify_bc_build_m(tmp_path, capsys):
    assert cli.main(["verify-bc", _matrix(tmp_path, build_m(1.0, [1.0, 0.0])),
                     "--nu", "1,0"]) == 0
    text = capsys.readouterr().out
    assert "lambda = 1.0" in text and "distance to build_m(lambda, nu) = 0.000e+00" in text
    m = build_m(2.5, [0.6, 0.8])
    assert cli.main(["verify-bc", _matrix(tmp_path, m), "--nu", "0.6,0.8", "--lam", "2.5"]) == 0


def test_verify_bc_identity_fails(tmp_path, capsys):
    assert cli.main(["verify-bc", _matrix(tmp_path, np.eye(3))]) == cli.EXIT_FAIL
    assert "admissible: False" in capsys.readouterr().out


def test_verify_bc_malformed(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("1 0 0\n0 1\n")
    assert cli.main(["verify-bc", str(bad)]) == cli.EXIT_INPUT
    bad.write_text("1 0 0\n0 1 0\n")
    assert cli.main(["verify-bc", str(bad)]) == cli.EXIT_INPUT
    bad.write_text("1 x\n0 1\n")
    assert cli.main(["verify-bc", str(bad)]) == cli.EXIT_INPUT
    assert cli.main(["verify-bc", str(tmp_path / "nope.txt")]) == cli.EXIT_INPUT
    good = _matrix(tmp_path, build_m(1.0, [1.0, 0.0]))
    assert cli.main(["verify-bc", good, "--nu", "1"]) == cli.EXIT_INPUT
    assert cli.main(["verify-bc", good, "--nu", "0,0"]) == cli.EXIT_INPUT


@pytest.fixture(scope="module")
def stored_run(tmp_path_factory):
    d = tmp_path_factory.mktemp("genuine")
    sc = pulse_scenario(100, amplitude=2.0, width=0.15, lam=0.5, T=1.0)
    write_trajectory(d, run_plastic(sc))
    return d


def test_check_dissipative_genuine(stored_run, capsys):
    assert cli.main(["check-dissipative", str(stored_run)]) == 0
    assert "worst pair" in capsys.readouterr().out


def test_check_dissipative_forged_files(stored_run, tmp_path):
    tr = read_trajectory(stored_run)
    for st in tr.states:
        st.sigma[0] *= 1.2
    write_trajectory(tmp_path, tr)
    assert cli.main(["check-dissipative", str(tmp_path)]) == cli.EXIT_FAIL


def test_check_dissipative_empty_dir(tmp_path):
    assert cli.main(["check-dissipative", str(tmp_path)]) == cli.EXIT_INPUT


def test_console_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "plastodyn.cli", "verify-bc",
                          _matrix(tmp_path, np.eye(3))], capture_output=True, text=True)
    assert res.returncode == 1
