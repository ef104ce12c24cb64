import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from holderlab.cli import main
from holderlab.solution import GridSolution


def run(tmp_path, cmd, cfg=None, *extra):
    argv = [cmd, "--out", str(tmp_path / "out"), *extra]
    if cfg is not None:
        p = tmp_path / f"{cmd}.json"
        p.write_text(cfg if isinstance(cfg, str) else json.dumps(cfg))
        argv += ["--config", str(p)]
    return main(argv)


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_bootstrap_nondegenerate_2d(tmp_path):
    assert run(tmp_path, "bootstrap", {"d": 2, "variant": "nondegenerate"}) == 0
    rows = read_csv(tmp_path / "out" / "bootstrap.csv")
    assert rows[0] == ["n", "gamma_n", "C_n"]
    assert abs(float(rows[-1][1]) - 0.25) <= 1e-12


def test_decompose_3d_burgers(tmp_path):
    cfg = {"flux": {"kind": "burgers_family", "d": 3}, "v": 0.0, "h": 1.0, "a": [0, 0, 1]}
    assert run(tmp_path, "decompose", cfg) == 0
    out = json.loads((tmp_path / "out" / "decomposition.json").read_text())
    np.testing.assert_allclose(out["coefficients"], [13.5, -13.5, 4.5], rtol=1e-12)


def test_decompose_ill_conditioned_is_failed_verification(tmp_path):
    cfg = {"flux": {"kind": "burgers_family", "d": 6}, "v": 0.3, "h": 1e-3, "a": [1, 0, 0, 0, 0, 0]}
    assert run(tmp_path, "decompose", cfg) == 2
    assert "error" in json.loads((tmp_path / "out" / "decomposition.json").read_text())


def test_decompose_general(tmp_path):
    cfg = {"flux": {"kind": "burgers_family", "d": 2}, "v": 0.1, "h": 0.5, "a": [1, 2], "method": "general", "alpha": 0.5}
    assert run(tmp_path, "decompose", cfg) == 0
    out = json.loads((tmp_path / "out" / "decomposition.json").read_text())
    assert abs(sum(out["coefficients"])) <= 1e-12


def test_h_certify(tmp_path):
    cfg = {"d": 3, "flux": {"kind": "burgers_family", "d": 3}}
    assert run(tmp_path, "h-certify", cfg) == 0
    rows = read_csv(tmp_path / "out" / "h_certify.csv")
    assert rows[0] == ["h", "norm", "product"] and len(rows) == 14


def test_flux_report(tmp_path):
    assert run(tmp_path, "flux-report", {"flux": {"kind": "burgers_family", "d": 2}}) == 0
    rep = json.loads((tmp_path / "out" / "flux_report.json").read_text())
    assert rep["alpha"] == pytest.approx(0.5, abs=0.02)


def test_solve_then_analyse(tmp_path):
    cfg = {
        "flux": {"kind": "burgers_family", "d": 1},
        "cells": 512,
        "T": 0.2,
        "initial": {"kind": "expression", "expr": "0.35+0.15*sin(2*pi*x)"},
        "source": {"kind": "constant", "value": 0.1},
        "n_out": 3,
    }
    assert run(tmp_path, "solve", cfg) == 0
    sol = GridSolution.load(tmp_path / "out" / "solution.bin")
    assert sol.nt == 3 and sol.meta["flux"]["d"] == 1
    solution = str(tmp_path / "out" / "solution.bin")
    hp = {"solution": solution, "radii": [2.0**-k for k in range(3, 9)], "centers": [0.25, 0.5]}
    assert run(tmp_path, "hprofile", hp, "--threads", "2") == 0
    rows = read_csv(tmp_path / "out" / "hprofile.csv")
    assert rows[0] == ["center", "r", "h_r", "gamma_hat", "C_hat"] and len(rows) == 13
    kv = {"solution": solution, "T": 0.1, "g_bound": 0.1, "boxes": [{"center": [0.4], "r": 0.05, "v_lo": 0.3, "omega": 0.1}]}
    assert run(tmp_path, "kinetic-verify", kv) == 0
    kv["g_bound"] = 1e-9
    assert run(tmp_path, "kinetic-verify", kv) == 2
    assert run(tmp_path, "holder-check", {"solution": solution, "gamma": 0.5, "bound": 100.0}) == 0
    assert run(tmp_path, "holder-check", {"solution": solution, "gamma": 0.5, "bound": 1e-6}) == 2


def test_usage_and_config_errors(tmp_path, capsys):
    assert main(["no-such-command"]) == 1
    assert run(tmp_path, "solve", "{not json") == 1
    assert "malformed JSON" in capsys.readouterr().err
    assert run(tmp_path, "solve", {"flux": {"kind": "burgers_family", "d": 1}}) == 1
    assert "'cells'" in capsys.readouterr().err
    assert run(tmp_path, "decompose", {"flux": {"kind": "burgers_family", "d": 2}, "v": 0.1, "a": [1, 0]}) == 1
    assert "'h'" in capsys.readouterr().err
    assert run(tmp_path, "bootstrap", {"d": 2, "variant": "bogus"}) == 1
    assert run(tmp_path, "holder-check", {"solution": "missing.bin", "gamma": 0.5}) == 1
    assert run(tmp_path, "bootstrap", {"d": 2}, "--seed", "-1") == 1
    assert run(tmp_path, "bootstrap", {"d": 2}, "--threads", "0") == 1
    assert main(["bootstrap"]) == 1


def test_verify_all_subset(tmp_path):
    assert run(tmp_path, "verify-all", {"criteria": [1, 5]}) == 0
    rows = read_csv(tmp_path / "out" / "verify_all.csv")
    assert [r[0] for r in rows[1:]] == ["1", "5"]


def test_console_entry_point(tmp_path):
    cfg = tmp_path / "b.json"
    cfg.write_text(json.dumps({"d": 1, "variant": "burgers_1d"}))
    res = subprocess.run(
        [sys.executable, "-m", "holderlab.cli", "bootstrap", "--config", str(cfg), "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "bootstrap.csv").exists()


def test_fixed_seed_gives_identical_csv(tmp_path):
    cfg = {"flux": {"kind": "burgers_family", "d": 2}, "n_directions": 16}
    outs = []
    for _ in range(2):
        assert run(tmp_path, "flux-report", cfg, "--seed", "7") == 0
        outs.append((tmp_path / "out" / "nonlinearity.csv").read_bytes())
    assert outs[0] == outs[1]
    assert run(tmp_path, "flux-report", dict(cfg, n_directions=6)) == 1
