from __future__ import annotations

import json

import pytest

# wall-clock budgets in seconds; criteria without one are bounded by the suite as a whole
TIME_LIMITS = {1: 10.0, 2: 30.0, 3: 5.0, 4: 60.0, 7: 60.0}


def _failure(result) -> str:
    return json.dumps(result.report, indent=1, default=str)[:4000]


@pytest.mark.parametrize("number", range(1, 9))
def test_criterion(acceptance_runner, number):
    result = acceptance_runner.get(number)
    assert result.passed, _failure(result)
    if number in TIME_LIMITS:
        assert result.seconds < TIME_LIMITS[number], f"took {result.seconds:.1f} s"


def test_criterion_1_covers_all_fixtures(acceptance_runner):
    rep = acceptance_runner.get(1).report
    assert set(rep["fixtures"]) == {"gaussian", "cylinder", "sphere"}
    assert all(v["points"] == 8 for v in rep["fixtures"].values())


def test_criterion_2_negative_control_is_large(acceptance_runner):
    rep = acceptance_runner.get(2).report["fixtures"]
    assert rep["perturbed_cylinder"]["min_cotton"] > 1e-3
    assert rep["perturbed_cylinder"]["min_bari"] > 1e-3
    assert rep["sphere"]["bari_vacuous"]


def test_criterion_3_measures_fourth_order_on_sphere(acceptance_runner):
    rep = acceptance_runner.get(3).report["fixtures"]
    assert 12 <= rep["sphere"]["ratio"] <= 20
    assert rep["gaussian"]["exact_to_rounding"] and rep["cylinder"]["exact_to_rounding"]


def test_criterion_4_draws_span_required_range(acceptance_runner):
    rows = acceptance_runner.get(4).report["trajectories"]
    assert len(rows) == 20
    assert {r["n"] for r in rows} == {4, 5, 6}
    assert {r["k"] for r in rows} == {1, 2}


def test_criterion_6_sign_is_discriminating(acceptance_runner):
    case = acceptance_runner.get(6).report["cases"]["random_trajectory"]
    assert case["opposite_sign_gap"] > 1e-2


def test_criterion_7_names_failing_clause(acceptance_runner):
    for name, rep in acceptance_runner.get(7).report["scenarios"].items():
        assert rep["obstruction"]["failing_clauses"], name
