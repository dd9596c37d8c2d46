import json
import math
import subprocess
import sys

import pytest

from minimax_subgrad.cli import main


def test_rates_stdout(capsys):
    assert main(["rates", "--N", "3"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "n,delta,h_delta,asymptote"
    assert float(lines[3].split(",")[1]) == pytest.approx(2 ** -1.0)


def test_rates_inline_bound(tmp_path):
    bound = '{"kind":"holder","c":0.5,"theta":0.5,"D":1}'
    assert main(["rates", "--bound", bound, "--N", "2", "--out-dir", str(tmp_path)]) == 0
    rows = (tmp_path / "schedule.csv").read_text().splitlines()
    assert float(rows[2].split(",")[1]) == pytest.approx(math.sqrt(0.75))


def test_build_hard(tmp_path):
    assert main(["build-hard", "--N", "2", "--out-dir", str(tmp_path)]) == 0
    desc = json.loads((tmp_path / "instance.json").read_text())
    assert desc["N"] == 2 and desc["bound"]["kind"] == "holder"
    xs = [float(r.split(",")[1]) for r in (tmp_path / "x_star.csv").read_text().splitlines()[1:]]
    assert xs == pytest.approx([-1 / math.sqrt(2), -0.5, -0.5])


@pytest.mark.parametrize("method", ["polyak", "decay", "const:0.1"])
def test_solve_hard(tmp_path, method):
    assert main(["solve", "--N", "5", "--method", method, "--quiet",
                 "--out-dir", str(tmp_path)]) == 0
    stem = f"trace_{method.replace(':', '_')}"
    rows = (tmp_path / f"{stem}.csv").read_text().splitlines()
    assert rows[0].startswith("n,f,gap,dist") and len(rows) == 7
    assert json.loads((tmp_path / f"{stem}.json").read_text())["method"]


def test_solve_radial(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"instance": "radial", "dimension": 3, "N": 4,
                               "bound": {"kind": "holder", "c": 0.5, "theta": 1.0, "D": 1.0}}))
    assert main(["solve", "--config", str(cfg)]) == 0
    assert capsys.readouterr().out.startswith("n,f,gap")


def test_solve_unknown_method():
    with pytest.raises(SystemExit):
        main(["solve", "--N", "2", "--method", "newton"])


def test_verify(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples": 300, "N": 4}))
    assert main(["verify", "--config", str(cfg), "--seed", "3", "--out-dir", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "membership.json").read_text())
    assert rep["passed"] and rep["config"]["seed"] == 3


def test_sandwich_small(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"N": 5, "methods": ["polyak", "const:1"], "cells": [
        {"bound": {"kind": "holder", "c": 0.6, "theta": 1.0, "D": 1.0}}]}))
    out = tmp_path / "out"
    assert main(["sandwich", "--config", str(cfg), "--tol", "1e-6", "--out-dir", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["passed"] and rep["config"]["tolerances"]["sandwich"] == 1e-6
    assert len(list(out.glob("*.csv"))) == 2


def test_asymptotics(tmp_path):
    assert main(["asymptotics", "--out-dir", str(tmp_path)]) == 0
    assert json.loads((tmp_path / "asymptotics.json").read_text())["passed"]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "minimax_subgrad", "rates", "--N", "1"],
                         capture_output=True, text=True, check=True)
    assert res.stdout.startswith("n,delta")
