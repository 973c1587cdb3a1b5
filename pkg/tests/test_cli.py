import json
import shutil
import subprocess
import sys

import jsonschema
import numpy as np
import pytest

from heteroclinic.cli import load_schema, parse_config, run_command, verify_dict
from heteroclinic.solver import minimize
from heteroclinic.strip import Field, Grid, read_field, write_field

BASE = {
    "domain": {"T": 20, "nx": 400, "ny": 16},
    "operator": {"kind": "truncated-mean-curvature", "L": 1},
    "potential": {"family": "ginzburg-landau", "alpha": -0.1, "beta": 0.1},
    "coefficient": {"class": 1, "name": "constant"},
    "solver": {"tolGrad": 1e-8},
}


def write_config(tmp_path, cfg, name="run.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def run(tmp_path, cfg, command, *extra, out="out"):
    return run_command([command, "--config", write_config(tmp_path, cfg), "--out",
                        str(tmp_path / out), *extra])


def test_solve_writes_artifacts(tmp_path):
    assert run(tmp_path, BASE, "solve") == 0
    out = tmp_path / "out"
    assert (out / "solution.csv").exists()
    rep = json.loads((out / "report.json").read_text())
    jsonschema.validate(rep, load_schema("solve_report"))
    assert rep["converged"] and rep["termination"] == "tol_grad"
    assert rep["energy"]["total"] < 0.0829


def test_deterministic_runs_identical(tmp_path):
    assert run(tmp_path, BASE, "solve", "--deterministic", out="a") == 0
    assert run(tmp_path, BASE, "solve", "--deterministic", out="b") == 0
    for name in ("solution.csv", "report.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_round_trip_verify_bitwise(tmp_path):
    assert run(tmp_path, BASE, "solve", "--deterministic") == 0
    sol = str(tmp_path / "out" / "solution.csv")
    assert run(tmp_path, BASE, "verify", "--solution", sol) == 0
    from_file = json.loads((tmp_path / "out" / "verify.json").read_text())
    cfg = parse_config(BASE, deterministic=True)
    rep = minimize(cfg.start(), cfg.nf, cfg.A, cfg.V, cfg.solver)
    in_memory = json.loads(json.dumps(verify_dict(cfg, rep.field)))
    assert from_file == in_memory
    jsonschema.validate(from_file, load_schema("verify_report"))


def test_verify_constant_field_exit_1(tmp_path):
    g = Grid(20.0, 400, 16, 0.1, 0.1)
    p = tmp_path / "const.csv"
    write_field(p, Field(g, np.full((400, 16), 0.1)))
    assert run(tmp_path, BASE, "verify", "--solution", str(p)) == 1
    d = json.loads((tmp_path / "out" / "verify.json").read_text())
    assert not d["heteroclinic"]["pass"]


def test_missing_beta_exit_2(tmp_path, capsys):
    cfg = json.loads(json.dumps(BASE))
    del cfg["potential"]["beta"]
    assert run(tmp_path, cfg, "solve") == 2
    assert "potential.beta" in capsys.readouterr().err


@pytest.mark.parametrize("patch, path", [
    ({"potential": {"family": "ginzburg-landau", "alpha": 0.1, "beta": -0.1}}, "potential.beta"),
    ({"potential": {"family": "sine-gordon", "alpha": -0.1, "beta": 0.2}}, "potential.alpha"),
    ({"domain": {"T": 0.05, "nx": 400, "ny": 16}}, "domain.T"),
    ({"domain": {"T": 20, "nx": 401, "ny": 16}}, "domain.nx"),
    ({"operator": {"kind": "power-p"}}, "operator.p"),
    ({"operator": {"kind": "truncated-mean-curvature", "L": -1}}, "operator.L"),
    ({"coefficient": {"class": 3, "name": "constant"}}, "coefficient"),
    ({"solver": {"tolGrad": 1e-8, "colour": 1}}, "solver.colour"),
])
def test_config_errors_name_field(tmp_path, capsys, patch, path):
    cfg = {**BASE, **patch}
    assert run(tmp_path, cfg, "solve") == 2
    assert path in capsys.readouterr().err


def test_unreadable_config(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    assert run_command(["solve", "--config", str(p)]) == 2
    assert run_command(["solve", "--config", str(tmp_path / "missing.json")]) == 2


def test_solver_failure_exit_3(tmp_path):
    cfg = {**BASE, "solver": {"maxIter": 1}}
    assert run(tmp_path, cfg, "solve") == 3
    assert (tmp_path / "out" / "report.json").exists()


def test_export_profile(tmp_path):
    assert run(tmp_path, BASE, "solve") == 0
    sol = str(tmp_path / "out" / "solution.csv")
    cfg = {**BASE, "profile": {"y0": 0.3}}
    assert run(tmp_path, cfg, "export-profile", "--solution", sol) == 0
    lines = (tmp_path / "out" / "profile.csv").read_text().splitlines()
    assert lines[0] == "# y0=0.3" and lines[1] == "x,u"
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[2:]])
    assert data.shape == (402, 2)
    assert data[0].tolist() == [-20.0, -0.1] and data[-1].tolist() == [20.0, 0.1]
    f = read_field(sol)
    # y0 = 0.3 sits 0.3 of the way from row 4 (y = 0.28125) to row 5
    expected = 0.7 * f.values[:, 4] + 0.3 * f.values[:, 5]
    assert np.max(np.abs(data[1:-1, 1] - expected)) < 1e-15


def test_sweep_beta(tmp_path):
    cfg = {**BASE, "domain": {"T": 20, "nx": 400, "ny": 4},
           "sweep": {"betas": [0.4, 0.2, 0.1, 0.05]}}
    assert run(tmp_path, cfg, "sweep-beta") == 0
    csv = (tmp_path / "out" / "sweep_beta.csv").read_text().splitlines()
    assert len(csv) == 5
    d = json.loads((tmp_path / "out" / "sweep_beta.json").read_text())
    jsonschema.validate(d, load_schema("sweep"))
    assert d["summary"]["delta_hat"] == 0.4


def test_sweep_beta_needs_list(tmp_path, capsys):
    assert run(tmp_path, BASE, "sweep-beta") == 2
    assert "sweep.betas" in capsys.readouterr().err


def test_sweep_eps(tmp_path):
    cfg = {**BASE, "domain": {"T": 20, "nx": 400, "ny": 4},
           "coefficient": {"class": 3, "name": "rabinowitz-well",
                           "params": {"Ainf": 2.0, "Acenter": 0.5}},
           "sweep": {"eps": [0.5, 0.2, 0.1]}}
    assert run(tmp_path, cfg, "sweep-eps") == 0
    rows = (tmp_path / "out" / "sweep_eps.csv").read_text().splitlines()
    assert rows[0].startswith("eps,energy_eps,energy_inf") and len(rows) == 4


def test_sweep_eps_wrong_class(tmp_path, capsys):
    cfg = {**BASE, "sweep": {"eps": [0.5]}}
    assert run(tmp_path, cfg, "sweep-eps") == 2
    assert "coefficient.class" in capsys.readouterr().err


def test_verify_with_oracle(tmp_path):
    cfg = {**BASE, "verify": {"oracle": True}}
    assert run(tmp_path, cfg, "verify") == 0
    d = json.loads((tmp_path / "out" / "verify.json").read_text())
    assert d["oracle"]["pass"] and d["oracle"]["mismatch"] < 1e-4


@pytest.mark.skipif(shutil.which("heteroclinic") is None, reason="console script not installed")
def test_console_script(tmp_path):
    p = write_config(tmp_path, BASE)
    r = subprocess.run(["heteroclinic", "solve", "--config", p, "--out", str(tmp_path / "o")],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    r = subprocess.run([sys.executable, "-m", "heteroclinic.cli", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "sweep-beta" in r.stdout
