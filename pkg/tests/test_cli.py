import csv
import io
import json
import math
import subprocess
import sys

import pytest

from torsionkit import cli
from torsionkit.solver import ConvergenceError


def write(tmp_path, obj, name="in.json"):
    p = tmp_path / name
    p.write_text(json.dumps(obj) if not isinstance(obj, str) else obj)
    return str(p)


def rows_of(path):
    return list(csv.reader(open(path)))


def test_solve_interval(tmp_path, capsys):
    inp = write(tmp_path, {"domain": {"type": "interval", "a": 0, "b": 1}})
    out = tmp_path / "out.csv"
    assert cli.main(["solve", "--input", inp, "--output", str(out), "--grid-nodes", "257"]) == 0
    rows = rows_of(out)
    assert rows[0] == ["coordinate", "torsion", "eigenfunction"]
    assert len(rows) == 258
    summary = json.loads(capsys.readouterr().out)
    assert summary["lambda1"] == pytest.approx(math.pi**2, rel=1e-4)


def test_solve_ball_with_constant_potential(tmp_path, capsys):
    inp = write(tmp_path, {"domain": {"type": "ball", "dim": 3, "radius": 1},
                           "potential": {"type": "constant", "c": 2}})
    assert cli.main(["solve", "--input", inp, "--grid-nodes", "129"]) == 0
    text = capsys.readouterr().out
    assert text.startswith("coordinate,torsion,eigenfunction")


def test_efficiency_csv(tmp_path):
    inp = write(tmp_path, {"type": "interval", "a": 0, "b": 1})
    out = tmp_path / "eff.csv"
    assert cli.main(["efficiency", "--input", inp, "--output", str(out)]) == 0
    header, row = rows_of(out)
    rec = dict(zip(header, row))
    assert float(rec["phi"]) == pytest.approx(2 / 3, rel=1e-12)
    assert float(rec["E"]) == pytest.approx(2 / math.pi, abs=1e-6)
    # floats carry 17 significant digits
    assert rec["phi"] == format(float(rec["phi"]), ".17g")


def test_efficiency_union_leaves_E_blank(tmp_path):
    inp = write(tmp_path, {"type": "ball_union", "dim": 2,
                           "balls": [{"center": [0, 0], "radius": 1}, {"center": [5, 0], "radius": "1/2"}]})
    out = tmp_path / "eff.csv"
    assert cli.main(["efficiency", "--input", inp, "--output", str(out)]) == 0
    header, row = rows_of(out)
    assert dict(zip(header, row))["E"] == ""


def test_kappa_scan(tmp_path, capsys):
    inp = write(tmp_path, {"family": "example1", "alpha_exp": "2/3", "c": 1})
    out = tmp_path / "k.csv"
    assert cli.main(["kappa-scan", "--input", inp, "--output", str(out), "--n-values", "100,1000,10000"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert abs(summary["kappa_hat"] - 0.25) < 0.05
    assert summary["classification"] == "kappa"
    assert json.loads((tmp_path / "k.json").read_text()) == summary
    assert rows_of(out)[0] == ["n", "mass_fraction", "volume_fraction"]


def test_kappa_scan_example2(tmp_path, capsys):
    inp = write(tmp_path, {"family": "example2", "dim": 2, "alpha_exp": "3/5", "beta_exp": "7/20"})
    assert cli.main(["kappa-scan", "--input", inp]) == 0
    err = capsys.readouterr().err
    assert json.loads(err)["kappa_hat"] == pytest.approx(0.5)


def test_obstacle_curve(tmp_path):
    out = tmp_path / "o.csv"
    assert cli.main(["obstacle-curve", "--output", str(out), "--dims", "2", "4", "--l-count", "5"]) == 0
    rows = rows_of(out)
    assert rows[0] == ["m", "l", "c", "theta", "f_value", "g_closed_form"]
    assert len(rows) == 11
    for m, l, c, th, f, g in rows[1:]:
        assert float(f) == pytest.approx(float(g), rel=1e-9)


def test_bounds_command(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert cli.main(["bounds", "--output", str(out)]) == 0
    rows = rows_of(out)
    assert rows[0] == ["bound_name", "context", "lhs", "rhs", "slack", "satisfied"]
    assert len(rows) > 40 and all(r[5] == "true" for r in rows[1:])
    # an impossible tolerance turns every tight check into a failure
    assert cli.main(["bounds", "--output", str(out), "--tol", "-1"]) == 1


def test_theorem7_scan(tmp_path):
    out = tmp_path / "t.csv"
    assert cli.main(["theorem7-scan", "--output", str(out), "--grid-nodes", "1025"]) == 0
    rows = rows_of(out)
    assert rows[0] == ["eps", "lambda_eps", "lambda_2", "simple", "mean_to_max", "l2_norm", "plateau_value"]
    ratios = [float(r[4]) for r in rows[1:]]
    assert ratios == sorted(ratios)


def test_outputs_are_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    inp = write(tmp_path, {"type": "annulus", "dim": 2, "r_in": 0.5, "r_out": 1})
    for p in (a, b):
        assert cli.main(["efficiency", "--input", inp, "--output", str(p), "--grid-nodes", "513"]) == 0
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("argv_fn", [
    lambda p: ["solve"],
    lambda p: ["solve", "--input", write(p, "{not json")],
    lambda p: ["solve", "--input", write(p, [1, 2])],
    lambda p: ["solve", "--input", write(p, {"type": "ball", "dim": 2, "radius": -1})],
    lambda p: ["solve", "--input", write(p, {"type": "box", "dim": 2, "sides": [1, 1]})],
    lambda p: ["efficiency", "--input", write(p, {"type": "interval", "a": 0, "b": 1}), "--grid-nodes", "4"],
    lambda p: ["kappa-scan", "--input", write(p, {"family": "nope", "alpha_exp": 0.5})],
    lambda p: ["kappa-scan", "--input", write(p, {"family": "example1"})],
    lambda p: ["kappa-scan", "--input", write(p, {"family": "example1", "alpha_exp": "2/3"}), "--n-values", "10,5,1"],
    lambda p: ["kappa-scan", "--input", write(p, {"family": "example1", "alpha_exp": "2/3"}), "--n-values", "10,100"],
])
def test_input_errors_exit_2(tmp_path, argv_fn, capsys):
    assert cli.main(argv_fn(tmp_path)) == 2
    assert "error" in capsys.readouterr().err


def test_solver_failure_exits_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise ConvergenceError("no convergence")

    monkeypatch.setattr(cli, "first_eigenpair_1d", boom)
    inp = write(tmp_path, {"type": "interval", "a": 0, "b": 1})
    assert cli.main(["solve", "--input", inp, "--grid-nodes", "64"]) == 3


def test_module_entry_point(tmp_path):
    inp = write(tmp_path, {"type": "ball", "dim": 2, "radius": 1})
    res = subprocess.run([sys.executable, "-m", "torsionkit", "efficiency", "--input", inp],
                         capture_output=True, text=True, check=False)
    assert res.returncode == 0
    rec = dict(zip(*csv.reader(io.StringIO(res.stdout))))
    assert float(rec["phi"]) == pytest.approx(0.5)
