import csv
import json
import runpy
from pathlib import Path

import pytest

from battling import cli

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


def run(capsys, *argv):
    code = cli.run([str(a) for a in argv])
    out = capsys.readouterr().out
    return code, json.loads(out) if out else None


def test_solve_interval_boundary(capsys):
    code, rep = run(capsys, "solve", SCENARIOS / "interval_boundary.json")
    assert code == 0
    assert rep["solve"]["profile"] == [[0.0], [6.0]]
    assert rep["audit"]["interior_players"] == []
    assert rep["verification"]["passed"]


def test_classify_square_opposed(capsys):
    code, rep = run(capsys, "classify", SCENARIOS / "square_opposed.json")
    assert code == 0 and rep["cardinality"] == "infinite" and len(rep["witnesses"]) == 2


def test_wdse_and_finite(capsys):
    code, rep = run(capsys, "wdse", SCENARIOS / "diamond_wdse.json")
    assert code == 0 and rep["profile"] == [[6.0, 0.0], [0.0, 6.0]]
    code, rep = run(capsys, "finite-enumerate", SCENARIOS / "powers_of_two.json")
    assert code == 0 and rep["count"] == 48
    assert rep["equilibria"] == sorted(rep["equilibria"])
    code, rep = run(capsys, "finite-solve", SCENARIOS / "powers_of_two.json", "--seed", 3)
    assert code == 0 and rep["is_pure_ne"]


def test_reports_byte_identical(tmp_path, capsys):
    for command, name in [("solve", "interval_interior"), ("dynamics", "interval_boundary"), ("classify", "square_diagonal"),
                          ("wdse", "square_wdse"), ("finite-enumerate", "powers_of_two")]:
        a, b = tmp_path / f"{name}_a.json", tmp_path / f"{name}_b.json"
        assert cli.run([command, str(SCENARIOS / f"{name}.json"), "--out", str(a)]) == 0
        assert cli.run([command, str(SCENARIOS / f"{name}.json"), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


def test_trajectory_csv_alongside_report(tmp_path):
    out, traj = tmp_path / "r.json", tmp_path / "t.csv"
    assert cli.run(["solve", str(SCENARIOS / "interval_interior.json"), "--out", str(out),
                    "--trajectory", str(traj)]) == 0
    rows = list(csv.reader(open(traj)))
    assert rows[0] == ["iteration", "phi", "x0_0", "x1_0"]
    assert json.loads(out.read_text())["solve"]["converged"]


def test_align_commands(tmp_path, capsys):
    data = json.loads((SCENARIOS / "alignment.json").read_text())
    data["alignment"]["N"] = [2000, 2000]
    path = tmp_path / "a.json"
    path.write_text(json.dumps(data))
    ds = tmp_path / "ds.csv"
    code, rep = run(capsys, "align-run", path, "--dataset", ds)
    assert code == 0 and rep["theory"] == [-1.0, 1.0]
    assert len(list(csv.reader(open(ds)))) == 4001
    code, rep = run(capsys, "align-surface", path, "--trajectory", tmp_path / "s.csv")
    assert code == 0 and abs(rep["theta_argmax_on_grid"] - rep["mle"][0]) <= 0.01


def test_flags_override_options(tmp_path, capsys):
    code, rep = run(capsys, "classify", SCENARIOS / "square_diagonal.json", "--restarts", 3)
    assert code == 0 and rep["restarts"] == 3


@pytest.mark.parametrize("text, location", [
    ('{"kind": "continuous", "game": [', "line 1 column 33"),
    ('[]', "$"),
    ('{"kind": "nope"}', "kind"),
    ('{"kind": "finite", "game": {}}', "$"),
    ('{"kind": "continuous", "game": {"space": {"box": {"lo": [0], "hi": [6]}}, "w0": 0,'
     ' "x0": [9], "w": [0.5, 0.5], "t": [[1], [4]]}}', "game.x0"),
    ('{"kind": "continuous", "game": {"space": {"cube": {}}, "w0": 0, "x0": [0],'
     ' "w": [1], "t": [[1]]}}', "game.space"),
])
def test_malformed_scenarios_exit_2(tmp_path, capsys, text, location):
    path = tmp_path / "bad.json"
    path.write_text(text)
    code, rep = run(capsys, "solve", path)
    assert code == 2
    assert rep["error"]["location"] == location


def test_missing_file_exit_2(tmp_path, capsys):
    code, rep = run(capsys, "solve", tmp_path / "nope.json")
    assert code == 2 and rep["error"]["type"] == "ScenarioError"


def test_wrong_kind_exit_2(capsys):
    code, rep = run(capsys, "finite-solve", SCENARIOS / "interval_boundary.json")
    assert code == 2 and rep["error"]["location"] == "kind"


def test_non_convergence_exit_3(capsys):
    code, rep = run(capsys, "solve", SCENARIOS / "interval_interior.json", "--max-iters", 1)
    assert code == 3 and rep["error"]["type"] == "NonConvergence"


def _shifted_solver(original):
    """Wrap a solver so player 0 reports a dominated action."""
    def solve(spec):
        res = original(spec)
        res.profile[0] = [3.0, 3.0]
        return res
    return solve


def test_dominance_violation_exit_4(capsys, monkeypatch):
    from battling import wdse

    monkeypatch.setattr(wdse, "wdse_solve", _shifted_solver(wdse.wdse_solve))
    code, rep = run(capsys, "wdse", SCENARIOS / "diamond_wdse.json")
    assert code == 4 and rep["error"]["type"] == "DominanceViolation"


def test_audit_violation_exit_4(capsys, monkeypatch):
    from battling import solvers

    def strict_audit(spec, x, **kw):
        return original(spec, x, eps_int=-1.0)

    original = solvers.exaggeration_audit
    monkeypatch.setattr(solvers, "exaggeration_audit", strict_audit)
    code, rep = run(capsys, "solve", SCENARIOS / "interval_interior.json")
    assert code == 4 and rep["error"]["type"] == "AuditViolation"


def test_shipped_scenarios_reproduce_expected(tmp_path, capsys):
    script = runpy.run_path(str(SCENARIOS.parent / "scripts" / "run_scenarios.py"))
    assert script["main"](["--outdir", str(tmp_path)]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert len(lines) == len(script["RUNS"]) and all(line.endswith("ok") for line in lines)
