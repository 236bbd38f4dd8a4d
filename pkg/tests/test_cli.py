import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from mpinvert.cli import main


def run(tmp_path, *args):
    out = tmp_path / "out"
    code = main([*args, "--out", str(out), "--quiet"])
    return code, out


def load(path):
    return json.loads(path.read_text())


def write_config(tmp_path, data, name="config.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


# -- invert ----------------------------------------------------------------


def test_invert_quintic_two(tmp_path):
    code, out = run(tmp_path, "invert", "--problem", "quintic1d", "--target", "2")
    assert code == 0
    sol = [float(v) for v in (out / "solution.txt").read_text().split()]
    assert sol == pytest.approx([1.0], abs=1e-10)
    rep = load(out / "report.json")
    assert rep["status"] == "Converged"
    assert rep["config"]["solver"]["tol_res"] == 1e-9  # defaults echo into the report
    with open(out / "trace.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["iter", "phi", "grad_norm"]
    phis = [float(r[1]) for r in rows[1:]]
    assert all(b <= a for a, b in zip(phis, phis[1:]))


def test_invert_quintic_zero(tmp_path):
    code, out = run(tmp_path, "invert", "--problem", "quintic1d", "--target", "0")
    assert code == 0
    assert abs(float((out / "solution.txt").read_text())) <= 1e-3


def test_invert_square_hypothesis_violated(tmp_path):
    code, out = run(tmp_path, "invert", "--problem", "square", "--target", "-1")
    assert code == 3
    assert load(out / "report.json")["status"] == "HypothesisViolated"


def test_invert_stalled_exit_code(tmp_path):
    cfg = write_config(tmp_path, {"problem": "quintic1d", "target": [5.0], "solver": {"max_iters": 1, "starts": 1}})
    code, out = run(tmp_path, "invert", "--config", cfg)
    assert code == 2
    assert load(out / "report.json")["status"] == "Stalled"


def test_invert_bad_inputs(tmp_path, capsys):
    assert run(tmp_path, "invert", "--problem", "nonsense", "--target", "1")[0] == 1
    assert run(tmp_path, "invert", "--problem", "planar", "--target", "1,2,3")[0] == 1
    assert run(tmp_path, "invert", "--problem", "quintic1d")[0] == 1
    assert run(tmp_path, "invert", "--config", str(tmp_path / "missing.json"))[0] == 1
    bad = write_config(tmp_path, {"problem": "quintic1d", "target": [1.0], "solver": {"tol_res": -1}})
    assert run(tmp_path, "invert", "--config", bad)[0] == 1
    bad = write_config(tmp_path, {"problem": "quintic1d", "target": [1.0], "solver": {"colour": 1}})
    assert run(tmp_path, "invert", "--config", bad)[0] == 1
    assert "mpinvert:" in capsys.readouterr().err


def test_invert_reports_are_byte_identical(tmp_path):
    cfg = write_config(tmp_path, {"problem": "planar", "target": [0.3, -2.0], "solver": {"seed": 7}})
    a = main(["invert", "--config", cfg, "--out", str(tmp_path / "a"), "--quiet"])
    b = main(["invert", "--config", cfg, "--out", str(tmp_path / "b"), "--quiet"])
    assert a == b == 0
    for name in ("report.json", "trace.csv", "solution.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_seed_flag_overrides_config(tmp_path):
    cfg = write_config(tmp_path, {"problem": "quintic1d", "target": [1.0], "solver": {"seed": 7}})
    code, out = run(tmp_path, "invert", "--config", cfg, "--seed", "11")
    assert code == 0
    rep = load(out / "report.json")
    assert rep["seed"] == 11 and rep["config"]["solver"]["seed"] == 11


def test_invert_hammerstein_config(tmp_path):
    cfg = write_config(
        tmp_path,
        {
            "problem": "hammerstein",
            "hammerstein": {"kernel": "affine", "alpha": 1.0, "beta": 2.0, "grid_n": 16, "rule": "trapezoid"},
            "target": {"x_star": "affine"},
        },
    )
    code, out = run(tmp_path, "invert", "--config", cfg)
    assert code == 0
    sol = np.loadtxt(out / "solution.txt")
    np.testing.assert_allclose(sol, 1.0 + np.linspace(0, 1, 16), atol=1e-8)


def test_hammerstein_config_rejects_bad_kernel(tmp_path):
    for h in ({"kernel": "affine", "alpha": 2.0, "beta": 1.0}, {"grid_n": 2}, {"kernel": "gaussian"}, {"lattice": 3}):
        cfg = write_config(tmp_path, {"problem": "hammerstein", "hammerstein": h, "target": 1.0})
        assert run(tmp_path, "invert", "--config", cfg)[0] == 1


# -- audit -----------------------------------------------------------------


def test_audit_quintic(tmp_path):
    code, out = run(tmp_path, "audit", "--problem", "quintic1d", "--x1", "-1", "--x2", "1")
    assert code == 0
    rep = load(out / "audit.json")
    assert rep["verdict"] == "NotACollision" and rep["gap"] == 4.0


def test_audit_cube_minus_x(tmp_path):
    code, out = run(tmp_path, "audit", "--problem", "cube-minus-x", "--x1", "0", "--x2", "1")
    assert code == 0
    rep = load(out / "audit.json")
    assert rep["verdict"] == "CollisionConsistent"
    assert rep["psi_value"] == pytest.approx(2 / 27, abs=1e-10)


def test_audit_identical_points(tmp_path):
    assert run(tmp_path, "audit", "--problem", "quintic1d", "--x1", "0.5", "--x2", "0.5")[0] == 1


# -- probe -----------------------------------------------------------------


def test_probe_planar(tmp_path):
    code, out = run(tmp_path, "probe", "--problem", "planar")
    assert code == 0
    g = load(out / "growth_report.json")
    assert abs(g["min_exponent"] - 10) <= 0.05 and g["kind"] == "evidence"
    assert load(out / "ps_probe_report.json")["violation_found"] is False


def test_probe_linear(tmp_path):
    code, out = run(tmp_path, "probe", "--problem", "linear")
    assert code == 0
    assert load(out / "growth_report.json")["min_exponent"] == pytest.approx(2.0)


def test_probe_bounded_counter_example(tmp_path):
    code, out = run(tmp_path, "probe", "--problem", "arctan", "--target", "2")
    assert code == 5
    assert load(out / "ps_probe_report.json")["violation_found"] is True


# -- mpass -----------------------------------------------------------------


def test_mpass_two_well(tmp_path):
    code, out = run(tmp_path, "mpass", "--problem", "two-well", "--start", "-1", "--end", "1")
    assert code == 0
    rep = load(out / "mpass.json")
    assert abs(rep["critical_point"][0]) <= 1e-6
    assert rep["critical_value"] == pytest.approx(1.0, abs=1e-8)
    with open(out / "path_history.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["iter", "path_max"] and len(rows) == rep["path_history_length"] + 1
    with open(out / "path.csv") as fh:
        assert next(csv.reader(fh)) == ["x0", "value"]


def test_mpass_cube_minus_x_config(tmp_path):
    cfg = write_config(tmp_path, {"problem": "cube-minus-x", "x1": [0.0], "x2": [1.0]})
    code, out = run(tmp_path, "mpass", "--config", cfg)
    assert code == 0
    assert load(out / "mpass.json")["critical_value"] == pytest.approx(2 / 27, abs=1e-10)


def test_mpass_same_minimum_is_geometry_error(tmp_path):
    assert run(tmp_path, "mpass", "--problem", "two-well", "--start", "1", "--end", "1")[0] == 6


def test_mpass_reports_are_byte_identical(tmp_path):
    args = ["mpass", "--problem", "two-well-2d", "--start=-1,0", "--end=1,0", "--quiet"]
    assert main([*args, "--out", str(tmp_path / "a")]) == main([*args, "--out", str(tmp_path / "b")]) == 0
    for name in ("mpass.json", "path_history.csv", "path.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


# -- demo ------------------------------------------------------------------


def test_demo_scalar(capsys):
    assert main(["demo", "section2-scalar"]) == 0
    assert "max residual" in capsys.readouterr().out


def test_demo_unknown():
    assert main(["demo", "nonexistent"]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "mpinvert", "invert", "--problem", "linear", "--target", "3", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert float((tmp_path / "solution.txt").read_text()) == 3.0
