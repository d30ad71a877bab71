import csv
import json
import subprocess
import sys

import pytest

from h3plus.ansatz import load_parameters
from h3plus.cli import EXIT_TOLERANCE, EXIT_USAGE, EXIT_VALIDATION, main
from h3plus.vmc import VmcSettings, vmc_run
from h3plus.geometry import build_triangle

FAST = ["--max-evals", "200000", "--threads", "1"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_energy_manifest(capsys, tmp_path):
    target = tmp_path / "m.json"
    code, out, _ = run(capsys, "energy", "--params", "table2_row1.json", "--out", str(target), *FAST)
    assert code == 0
    m = json.loads(out)
    assert m == json.loads(target.read_text())
    e = m["results"]["energy"]
    assert e["hartree"] == e["ry"] / 2 and e["error_hartree"] == e["error_ry"] / 2
    assert m["params"]["gamma"] == 0.21632
    assert m["flags"]["max_evals"] == 200000 and m["version"]
    assert m["converged"] is False and m["results"]["evaluations"] <= 200000
    assert m["wall_time_s"] > 0


def test_manifest_rerun_reproduces(capsys):
    _, out, _ = run(capsys, "energy", "--params", "table2_row2.json", *FAST)
    m = json.loads(out)
    _, out2, _ = run(capsys, *m["argv"])
    assert json.loads(out2)["results"]["energy"] == m["results"]["energy"]


def test_strict_tolerance_exit(capsys):
    code, _, err = run(capsys, "energy", "--params", "table2_row1.json", "--strict", *FAST)
    assert code == EXIT_TOLERANCE and "tolerance" in err


def test_malformed_params(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"alpha": [1, 2, 3], "gamma": 0.1}))
    code, _, err = run(capsys, "energy", "--params", str(bad))
    assert code == EXIT_VALIDATION and "$.alpha" in err
    bad.write_text(json.dumps({"alpha": [0.1] * 6, "gamma": 1.0}))
    code, _, err = run(capsys, "energy", "--params", str(bad))
    assert code == EXIT_VALIDATION and "alpha1+alpha2+alpha3" in err
    code, _, _ = run(capsys, "energy", "--params", str(tmp_path / "missing.json"))
    assert code == EXIT_VALIDATION


@pytest.mark.parametrize("argv", [
    ["optimize", "--params", "table2_row1.json", "--stage", "9"],
    ["scan", "--params", "table2_row1.json", "--R-min", "1.5", "--R-max", "1.8", "--steps", "1"],
    ["energy", "--params", "table2_row1.json", "--R", "-1"],
    ["energy"],
    ["frobnicate"],
])
def test_usage_errors(capsys, argv):
    assert run(capsys, *argv)[0] == EXIT_USAGE


def test_help(capsys):
    assert run(capsys, "--help")[0] == 0


def test_expect(capsys):
    code, out, _ = run(capsys, "expect", "--params", "table2_row1.json", *FAST)
    r = json.loads(out)["results"]
    assert code == 0 and r["additivity_residual"] <= 1e-10
    assert r["inv_r1A"]["value"] == pytest.approx(0.8548, abs=0.01)


def test_vmc_command(capsys):
    args = ["vmc", "--params", "table2_row1.json", "--walkers", "4", "--steps", "2000", "--seed", "7"]
    _, out1, _ = run(capsys, *args)
    _, out2, _ = run(capsys, *args)
    r1, r2 = json.loads(out1)["results"], json.loads(out2)["results"]
    assert r1["observables"] == r2["observables"]
    assert r1["samples"] == 8000
    assert r1["observables"]["energy"]["hartree"] == r1["observables"]["energy"]["mean"] / 2


def test_optimize_writes_params(capsys, tmp_path):
    out_file, trace = tmp_path / "best.json", tmp_path / "trace.csv"
    code, out, _ = run(capsys, "optimize", "--params", "table2_row1.json", "--stage", "7",
                       "--tol-ladder", "1e-3", "--evals-ladder", "30000", "--max-iters", "5",
                       "--max-evals", "30000", "--threads", "1", "--out", str(out_file),
                       "--trace", str(trace))
    assert code in (0,)
    p = load_parameters(out_file)
    assert p.is_valid()
    assert next(csv.reader(trace.open())) == ["iteration", "best_energy_ry", "simplex_diameter", "cubature_tol"]
    assert json.loads(out)["stage"]["mode"] == "Seven"


def test_scan_minimum_near_equilibrium(capsys, tmp_path):
    path = tmp_path / "scan.csv"
    code, out, _ = run(capsys, "scan", "--params", "table2_row1.json", "--R-min", "1.5", "--R-max", "1.8",
                       "--steps", "7", "--out", str(path), "--max-evals", "1600000", "--threads", "1")
    assert code == 0
    rows = list(csv.DictReader(path.open()))
    assert list(rows[0]) == ["R_bohr", "E_ry", "E_hartree", "err_ry"]
    best = min(rows, key=lambda r: float(r["E_ry"]))
    assert abs(float(best["R_bohr"]) - 1.65) < 1e-12


def test_scan_rises_beyond_equilibrium(capsys, tmp_path, row1):
    path = tmp_path / "scan.csv"
    run(capsys, "scan", "--params", "table2_row1.json", "--R-min", "1.8", "--R-max", "2.2",
        "--steps", "3", "--out", str(path), "--max-evals", "1600000", "--threads", "1")
    e = [float(r["E_ry"]) for r in csv.DictReader(path.open())]
    assert e[0] < e[1] < e[2]
    # independent check at the two ends of the grid
    s = VmcSettings(n_walkers=20, n_steps=20_000, seed=9)
    lo = vmc_run(row1, build_triangle(1.8), s)
    hi = vmc_run(row1, build_triangle(2.2), s)
    d = hi.mean["energy"] - lo.mean["energy"]
    assert d > 3 * (lo.stderr["energy"] ** 2 + hi.stderr["energy"] ** 2) ** 0.5
    assert d == pytest.approx(e[2] - e[0], abs=0.02)


def test_selftest_command(capsys):
    code, out, _ = run(capsys, "selftest")
    assert code == 0 and json.loads(out)["results"]["passed"]


def test_module_entry_point():
    p = subprocess.run([sys.executable, "-m", "h3plus", "energy", "--params", "nonexistent.json"],
                       capture_output=True, text=True)
    assert p.returncode == EXIT_VALIDATION
