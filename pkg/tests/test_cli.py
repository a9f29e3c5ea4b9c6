from __future__ import annotations

import csv
import io
import json
import math

import pytest

from solitonlab.scenario import _builtin_path as builtin_path
from solitonlab.cli import EXIT_FAIL, EXIT_PASS, EXIT_SINGULAR, EXIT_USAGE, main
from solitonlab.spectrum import csv_header


def _run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def _json(capsys, *argv):
    code, out, _ = _run(capsys, *argv, "--format", "json")
    return code, json.loads(out)


def _checks(report):
    return {c["name"]: c for c in report["checks"]}


def test_verify_known_gaussian(capsys):
    code, rep = _json(capsys, "verify-known", "--case", "gaussian", "--n", "4", "--lambda", "1")
    assert code == EXIT_PASS
    assert all(c["pass"] for c in rep["checks"])
    assert rep["eigenvalue_count"]["max_count"] == 1


@pytest.mark.parametrize("case,lam", [("cylinder", "2"), ("sphere", "3")])
def test_verify_known_other_fixtures(capsys, case, lam):
    code, rep = _json(capsys, "verify-known", "--case", case, "--lambda", lam)
    assert code == EXIT_PASS
    if case == "sphere":
        assert "vacuous" in (_checks(rep)["bari_residual"]["note"] or "")


def test_verify_known_rejects_wrong_lambda(capsys):
    code, _, err = _run(capsys, "verify-known", "--case", "sphere", "--lambda", "2")
    assert code == EXIT_USAGE and "n - 1" in err


def test_check_theorem_two_fiber(capsys):
    code, rep = _json(capsys, "check-theorem", "--scenario", "two_fiber.json")
    assert code == EXIT_PASS
    assert rep["eigenvalue_count"]["max_count"] <= 3


def test_check_theorem_three_fiber_reports_failing_clause(capsys):
    code, rep = _json(capsys, "check-theorem", "--scenario", "three_fiber_steady_b")
    assert code == EXIT_PASS
    obs = rep["obstruction"]
    assert not obs["joint_holds"] and "harmonic_weyl" in obs["failing_clauses"]


def test_oracle_compare_cylinder(capsys):
    code, rep = _json(capsys, "oracle-compare", "--scenario", "cylinder.json", "--points", "16")
    assert code == EXIT_PASS
    assert _checks(rep)["ricci_eigenvalues"]["max_residual"] < 1e-5
    _, out, _ = _run(capsys, "oracle-compare", "--scenario", "cylinder.json", "--points", "16", "--format", "csv")
    assert len(out.splitlines()) == 1 + 16


def test_spectrum_negative_control_fails(capsys):
    code, rep = _json(capsys, "spectrum", "--scenario", "non_soliton")
    assert code == EXIT_FAIL
    assert not _checks(rep)["identity_quadratic_bc"]["pass"]


def test_integrate_csv_columns(capsys):
    code, out, _ = _run(capsys, "integrate", "--scenario", "two_fiber", "--format", "csv")
    assert code == EXIT_PASS
    rows = list(csv.reader(io.StringIO(out)))
    header = rows[0]
    assert header == csv_header(2)
    assert all(len(r) == len(header) for r in rows[1:])
    assert len(rows) == 1 + 401


def test_terminated_integration_exits_singular(capsys, tmp_path):
    sc = {"name": "sphere_to_pole", "dim_total": 4, "lambda": 3.0,
          "fibers": [{"dim": 3, "einstein_const": 2.0, "model": "sphere"}],
          "initial_state": {"s": math.pi / 2, "f": 0.0, "fp": 0.0, "h": [1.0], "hp": [0.0]},
          "s_span": [math.pi / 2, math.pi]}
    path = tmp_path / "pole.json"
    path.write_text(json.dumps(sc), encoding="utf-8")
    code, rep = _json(capsys, "integrate", "--scenario", str(path))
    assert code == EXIT_SINGULAR
    assert rep["terminated"] and rep["exit_code"] == EXIT_SINGULAR
    assert rep["events"][0]["kind"] == "warp_collapse"


def test_usage_errors(capsys, tmp_path):
    assert _run(capsys, "integrate", "--scenario", str(tmp_path / "none.json"))[0] == EXIT_USAGE
    bad = tmp_path / "bad.json"
    bad.write_text('{"name": "x"}', encoding="utf-8")
    code, _, err = _run(capsys, "integrate", "--scenario", str(bad))
    assert code == EXIT_USAGE and "missing required field" in err
    assert _run(capsys, "check-theorem", "--scenario", "non_soliton")[0] == EXIT_USAGE
    with pytest.raises(SystemExit):
        main(["frobnicate"])


def test_reports_are_byte_identical(capsys, tmp_path):
    data = json.loads((builtin_path("two_fiber")).read_text(encoding="utf-8"))
    data["random_trials"] = 1
    path = tmp_path / "one_trial.json"
    path.write_text(json.dumps(data), encoding="utf-8")
    argv = ["check-theorem", "--scenario", str(path), "--seed", "3"]
    _, first, _ = _run(capsys, *argv)
    _, second, _ = _run(capsys, *argv)
    assert first == second
    _, other, _ = _run(capsys, "check-theorem", "--scenario", str(path), "--seed", "4")
    assert other != first


def test_out_directory_artifacts(capsys, tmp_path):
    code, out, _ = _run(capsys, "integrate", "--scenario", "cylinder", "--out", str(tmp_path))
    assert code == EXIT_PASS
    written = sorted(p.name for p in tmp_path.iterdir())
    assert written == ["cylinder-integrate.csv", "cylinder-integrate.json"]
    assert (tmp_path / "cylinder-integrate.json").read_text(encoding="utf-8") == out
