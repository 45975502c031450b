import csv
import json
import os
import pathlib
import subprocess
import sys
import time

import pytest

from bgkbaro.cli import main

CONFIGS = pathlib.Path(__file__).resolve().parents[1] / "configs"

LIMIT_SMALL = """
[regime]
gamma = 3
[grid]
L = 2
Nx = 32
Nv = 128
Vmax = 1.5
[solver]
T = 0.1
[initial]
profile = sine-density
amp = 0.1
"""

SHOCK = """
[regime]
gamma = 5/3
[grid]
L = 1
Nx = 128
Vmax = 3
[solver]
T = 2
[initial]
profile = sine-density
amp = 0.3
"""


def write(tmp_path, text, name="c.ini"):
    path = tmp_path / name
    path.write_bytes(text.encode() if isinstance(text, str) else text)
    return str(path)


def last_json(text):
    return json.loads(text.strip().splitlines()[-1])


def test_corrupted_config_exit_2(tmp_path, capsys):
    cfg = write(tmp_path, b"[grid\nNx = \xff\n")
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    rec = last_json(capsys.readouterr().err)
    assert rec["status"] == "error" and rec["error"] == "ParseError"


def test_invalid_config_lists_violations(tmp_path, capsys):
    cfg = write(tmp_path, "[regime]\nd = 2\ngamma = 3\n[grid]\nNx = 7\n")
    assert main(["simulate", "--config", cfg]) == 2
    rec = last_json(capsys.readouterr().err)
    assert rec["error"] == "ValidationError" and len(rec["violations"]) >= 2


def test_missing_config_exit_2(tmp_path, capsys):
    assert main(["euler", "--config", str(tmp_path / "nope.ini")]) == 2
    assert last_json(capsys.readouterr().err)["status"] == "error"


def test_simulate_smoke(tmp_path, capsys):
    start = time.perf_counter()
    code = main(["simulate", "--config", str(CONFIGS / "smoke_1d.ini"), "--out", str(tmp_path)])
    elapsed = time.perf_counter() - start
    assert code == 0
    assert elapsed < 5.0
    assert {"run.csv", "margins.csv"} <= set(os.listdir(tmp_path))
    with open(tmp_path / "margins.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert rows and all(r["ok"] == "1" for r in rows)


def test_default_equilibrium_run(tmp_path, capsys):
    assert main(["simulate", "--out", str(tmp_path)]) == 0
    assert "VIOLATED" not in capsys.readouterr().out


def test_csv_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        assert main(["simulate", "--config", str(CONFIGS / "smoke_1d.ini"), "--out", str(out)]) == 0
    for name in ("run.csv", "margins.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_limit_study_single_eps(tmp_path, capsys, monkeypatch):
    cfg = write(tmp_path, LIMIT_SMALL)
    monkeypatch.setenv("BGKBARO_LIMIT__EPS_LIST", "0.1")
    assert main(["limit-study", "--config", cfg, "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "order" not in out
    with open(tmp_path / "limit_study.csv") as fh:
        header = next(csv.reader(fh))
    assert header == ["eps", "l1_rho", "l1_momentum"]


def test_limit_study_orders(tmp_path, capsys):
    cfg = write(tmp_path, LIMIT_SMALL)
    assert main(["limit-study", "--config", cfg, "--out", str(tmp_path), "--eps-list", "0.2,0.1"]) == 0
    assert "order_rho" in capsys.readouterr().out


@pytest.mark.parametrize("command", ["euler", "limit-study"])
def test_post_shock_refused(tmp_path, capsys, command):
    cfg = write(tmp_path, SHOCK)
    assert main([command, "--config", cfg, "--out", str(tmp_path)]) == 1
    rec = last_json(capsys.readouterr().err)
    assert rec["error"] == "ShockDetected"


def test_euler_riemann_allowed(tmp_path, capsys):
    cfg = write(tmp_path, "[initial]\nprofile = riemann\n[solver]\nT = 0.2\n")
    assert main(["euler", "--config", cfg, "--out", str(tmp_path)]) == 0
    with open(tmp_path / "euler.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "mass", "momentum", "entropy"]
    assert float(rows[-1][0]) == pytest.approx(0.2)


MOMENTS_PP = "[regime]\ngamma = 7/5\n[grid]\nVmax = 4\n[verify]\nstates = 20\n"


def test_verify_moments_passes(tmp_path, capsys):
    cfg = write(tmp_path, MOMENTS_PP)
    assert main(["verify", "moments", "--config", cfg, "--out", str(tmp_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["passed"] and report["suite"] == "moments"


def test_verify_zero_tolerance_fails(tmp_path, capsys):
    cfg = write(tmp_path, MOMENTS_PP)
    code = main(["verify", "moments", "--config", cfg, "--out", str(tmp_path), "--tolerance-scale", "0"])
    assert code == 1
    captured = capsys.readouterr()
    assert not json.loads(captured.out)["passed"]
    assert "worst offender: finest_error" in captured.err


def test_verify_lipschitz(tmp_path, capsys):
    cfg = write(tmp_path, "[verify]\nsamples = 4000\n")
    assert main(["verify", "lipschitz", "--config", cfg, "--out", str(tmp_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert sum(report["info"]["case_counts"].values()) == 8000
    assert (tmp_path / "lipschitz.csv").exists()


def test_verify_interpolation(tmp_path, capsys):
    cfg = write(tmp_path, "[initial]\nprofile = sine-density\namp = 0.2\n")
    assert main(["verify", "interpolation", "--config", cfg, "--out", str(tmp_path)]) == 0


def test_seed_override_changes_states(tmp_path, capsys):
    cfg = write(tmp_path, "[verify]\nstates = 5\nlevels = 8, 16\n[regime]\ngamma=5/3\n[grid]\nVmax=4\n")
    main(["verify", "moments", "--config", cfg, "--out", str(tmp_path)])
    a = json.loads(capsys.readouterr().out)["info"]["errors"]
    main(["verify", "moments", "--config", cfg, "--out", str(tmp_path), "--seed", "3"])
    b = json.loads(capsys.readouterr().out)["info"]["errors"]
    assert a != b


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "bgkbaro", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "simulate" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "bgkbaro", "simulate", "--config", str(tmp_path / "x.ini")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert json.loads(proc.stderr.strip().splitlines()[-1])["status"] == "error"
