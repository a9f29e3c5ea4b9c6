"""Acceptance criteria as deterministic, report-producing runners.

Each ``criterion_N()`` returns a :class:`CriterionResult` whose ``report`` is a
JSON-serialisable dict containing only computed values (no timings), so that
repeated runs can be compared byte for byte.  ``python -m solitonlab.acceptance``
prints one pass/fail line per criterion.
"""

from __future__ import annotations

import json
import math
import sys
import time
from dataclasses import dataclass

import numpy as np

from .cli import (DRIFT_TOL, HW_THRESHOLD, IDENTITY_TOL, _clean, _fiber_spread, _interior, _residual_maxima,
                  check_theorem, sample_points)
from .charts import perturbed
from .ode import (IntegrationControl, conserved_drift, integrate, known_solution, random_initial_data,
                  trajectory_spec)
from .oracle import PointGeometry, bari_residual, bari_tensor, GRADIENT_FLOOR
from .scenario import builtin_scenario
from .spectrum import count_distinct_eigenvalues, laplacian_checks
from .tensors import generalized_eigenvalues
from .warped import along_s, ricci_closed_form, to_chart

__all__ = ["CriterionResult", "FIXTURES", "THREE_FIBER_SCENARIOS", "RANDOM_SEED", "run_all", "CRITERIA"]

FIXTURES = (("gaussian", 4, 1.0), ("cylinder", 4, 2.0), ("sphere", 4, 3.0))
THREE_FIBER_SCENARIOS = ("three_fiber_steady_a", "three_fiber_steady_b", "three_fiber_shrinker")
RANDOM_SEED = 20240611
RANDOM_SETS = 20
POINTS = 8


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    report: dict
    seconds: float = 0.0

    def line(self) -> str:
        return f"criterion {self.number}: {'PASS' if self.passed else 'FAIL'} - {self.title}"

    def to_json(self) -> str:
        return json.dumps(_clean({"criterion": self.number, "title": self.title, "pass": self.passed,
                                  "report": self.report}), indent=2, sort_keys=True)


def _fixture_points(case: str, n: int, lam: float):
    spec, state = known_solution(case, n, lam)
    chart = to_chart(spec)
    s0 = state.s
    window = (s0 - 0.5, s0 + 0.5) if case == "sphere" else (s0, s0 + 1.0)
    return spec, state, chart, window, sample_points(chart, _interior(*window, POINTS), seed=0)


def criterion_1() -> dict:
    """Fixture exactness: soliton equation on the charts and closed-form Ricci against the oracle."""
    out, ok = {}, True
    for case, n, lam in FIXTURES:
        spec, _, chart, _, pts = _fixture_points(case, n, lam)
        sol, eig = [], []
        for x in pts:
            geo = PointGeometry(chart, x, depth=2)
            sol.append(float(np.max(np.abs(geo.ric.value + geo.hess_f.value - lam * geo.g.value))))
            oracle = generalized_eigenvalues(geo.ric.value, geo.g.value)
            closed = np.sort(ricci_closed_form(spec, x[0]).eigenvalues())
            eig.append(float(np.max(np.abs(oracle - closed))))
        passed = max(sol) < 1e-6 and max(eig) < 1e-5
        ok &= passed
        out[case] = {"soliton_residual": max(sol), "ricci_vs_oracle": max(eig), "points": len(pts), "pass": passed}
    return {"thresholds": {"soliton_residual": 1e-6, "ricci_vs_oracle": 1e-5}, "fixtures": out, "pass": ok}


def criterion_2() -> dict:
    """Zero Cotton and the gradient identity on fixtures; both large on a perturbed metric."""
    out, ok = {}, True
    for case, n, lam in FIXTURES:
        _, _, chart, _, pts = _fixture_points(case, n, lam)
        cot, bari, degenerate = [], [], 0
        for x in pts:
            geo = PointGeometry(chart, x, depth=3)
            cot.append(float(np.max(np.abs(geo.cotton.value))))
            if np.linalg.norm(geo.grad_f) < GRADIENT_FLOOR:
                degenerate += 1
            else:
                bari.append(float(np.max(np.abs(bari_tensor(geo)))))
        bmax = max(bari) if bari else None
        # A vanishing gradient makes the identity vacuous (constant potential on the sphere).
        passed = max(cot) < 1e-5 and (bmax is None or bmax < 1e-5)
        ok &= passed
        out[case] = {"cotton": max(cot), "bari": bmax, "degenerate_points": degenerate,
                     "bari_vacuous": bmax is None, "pass": passed}
    spec, state = known_solution("cylinder", 4, 2.0)
    base = to_chart(spec)
    center = base.center.copy()
    center[0] = 1.5
    chart = perturbed(base, 0.1, center=center, width=0.5, seed=3)
    cot, bari = [], []
    for x in sample_points(chart, _interior(1.2, 1.8, 4), seed=1, spread=0.2):
        geo = PointGeometry(chart, x, depth=3)
        cot.append(float(np.max(np.abs(geo.cotton.value))))
        bari.append(bari_residual(chart, x))
    neg = min(cot) > 1e-3 and min(bari) > 1e-3
    ok &= neg
    out["perturbed_cylinder"] = {"min_cotton": min(cot), "min_bari": min(bari), "pass": neg}
    return {"thresholds": {"fixtures": 1e-5, "negative_control": 1e-3}, "fixtures": out, "pass": ok}


def _closed_form_error(spec, traj) -> float:
    exact = np.array([[float(spec.potential(s)), float(spec.warps[0](s))] for s in traj.s])
    return float(np.max(np.abs(traj.y[:, [0, 2]] - exact)))


def criterion_3() -> dict:
    """ODE integration reproduces the fixtures; fixed-step RK4 converges at fourth order."""
    out, ok = {}, True
    for case, n, lam in FIXTURES:
        spec, state = known_solution(case, n, lam)
        span = (state.s, state.s + 1.0)
        traj = integrate(state, spec.fibers, lam, span)
        err = _closed_form_error(spec, traj)
        fixed = []
        for step in (0.1, 0.05):
            ctrl = IntegrationControl(max_step=step, adaptive=False, grid_points=11)
            fixed.append(_closed_form_error(spec, integrate(state, spec.fibers, lam, span, ctrl)))
        # Linear-in-s fixtures are reproduced by RK4 to rounding, leaving no ratio to measure.
        exact = max(fixed) < 1e-12
        ratio = None if exact else fixed[0] / fixed[1]
        order_ok = exact or (12 <= ratio <= 20)
        passed = traj.complete and err < 1e-6 and order_ok
        ok &= passed
        out[case] = {"sup_error": err, "fixed_step_errors": fixed, "ratio": ratio, "exact_to_rounding": exact,
                     "pass": passed}
    return {"thresholds": {"sup_error": 1e-6, "ratio": [12, 20]}, "fixtures": out, "pass": ok}


def _random_suite():
    """The twenty seeded random trajectories shared by criteria 4 and 5."""
    suite = []
    for i in range(RANDOM_SETS):
        rng = np.random.default_rng([RANDOM_SEED, i])
        n = (4, 5, 6)[i % 3]
        k = 1 + (i // 3) % 2
        fibers, state, lam = random_initial_data(rng, n, k)
        traj = integrate(state, fibers, lam, (state.s, state.s + 1.0))
        suite.append((n, k, lam, fibers, traj))
    return suite


_SUITE_CACHE: dict = {}


def _suite():
    if "suite" not in _SUITE_CACHE:
        _SUITE_CACHE["suite"] = [(n, k, lam, fibers, traj, traj.samples()) for n, k, lam, fibers, traj
                                 in _random_suite()]
    return _SUITE_CACHE["suite"]


def criterion_4() -> dict:
    """Soliton identities along 20 seeded random harmonic-Weyl trajectories."""
    rows, ok = [], True
    checked = ("riccati", "base_curvature", "base_soliton", "quadratic_bc", "root_polynomial")
    for n, k, lam, fibers, traj, samples in _suite():
        maxima = _residual_maxima(samples)
        spread = _fiber_spread(samples)
        drift = conserved_drift(traj)
        worst = max(maxima[f] for f in checked)
        passed = traj.complete and worst < IDENTITY_TOL and spread < IDENTITY_TOL and drift < DRIFT_TOL
        ok &= passed
        rows.append({"n": n, "k": k, "lambda": lam, "dims": [f.dim for f in fibers],
                     "kappas": [f.einstein_const for f in fibers], "residuals": maxima,
                     "fiber_independence": spread, "drift": drift,
                     "regular_samples": sum(not s.singular for s in samples), "pass": passed})
    return {"thresholds": {"identities": IDENTITY_TOL, "drift": DRIFT_TOL}, "trajectories": rows, "pass": ok}


def criterion_5() -> dict:
    """At most three distinct Ricci eigenvalues along criterion 4's trajectories; fixture counts."""
    counts = [count_distinct_eigenvalues(samples).max_count for *_, samples in _suite()]
    fixture_counts = {}
    for case, expected in (("cylinder", 2), ("gaussian", 1)):
        lam = 2.0 if case == "cylinder" else 1.0
        spec, state = known_solution(case, 4, lam)
        traj = integrate(state, spec.fibers, lam, (state.s, state.s + 1.0))
        fixture_counts[case] = {"max_count": count_distinct_eigenvalues(traj).max_count, "expected": expected}
    ok = max(counts) <= 3 and all(v["max_count"] == v["expected"] for v in fixture_counts.values())
    return {"random_max_counts": counts, "fixtures": fixture_counts, "pass": ok}


def criterion_6() -> dict:
    """Both Laplacian identities on the fixtures, with the chart-oracle Laplacian as a cross-check."""
    out, ok = {}, True
    for case, n, lam in FIXTURES:
        spec, _, _, window, _ = _fixture_points(case, n, lam)
        imbalance = {}
        for s in _interior(*window, POINTS):
            chk = laplacian_checks(spec, s, oracle=True)
            for name, (a, b) in chk.pairs.items():
                imbalance[name] = max(imbalance.get(name, 0.0), abs(a - b))
        passed = max(imbalance.values()) < 1e-4
        ok &= passed
        out[case] = {**imbalance, "pass": passed}
    # A trajectory with R' != 0 separates the two possible signs of the radial term.
    rng = np.random.default_rng([RANDOM_SEED, 999])
    fibers, state, lam = random_initial_data(rng, 4, 1, lam=1.0)
    traj = integrate(state, fibers, lam, (state.s, state.s + 1.0))
    spec = trajectory_spec(traj)
    imbalance, flipped = {}, math.inf
    for s in _interior(traj.s[0], traj.s[-1], 3):
        chk = laplacian_checks(spec, s, oracle=True)
        for name, (a, b) in chk.pairs.items():
            imbalance[name] = max(imbalance.get(name, 0.0), abs(a - b))
        # Distance from the oracle Laplacian to the formula with the drift term negated.
        R2 = float(along_s(spec, s, 4)["R"].derivative((2,)))
        oracle_value, laplacian = chk.pairs["oracle_laplacian"]
        flipped = min(flipped, abs(oracle_value - (2 * R2 - laplacian)))
    passed = max(imbalance.values()) < 1e-4 and flipped > 1e-3
    ok &= passed
    out["random_trajectory"] = {**imbalance, "opposite_sign_gap": flipped, "pass": passed}
    return {"threshold": 1e-4, "cases": out, "pass": ok}


def criterion_7() -> dict:
    """Three-fiber scenarios fail the joint harmonic-Weyl and separation condition."""
    out, ok = {}, True
    for name in THREE_FIBER_SCENARIOS:
        rep = check_theorem(builtin_scenario(name), points=POINTS)
        obs = rep.sections.get("obstruction")
        passed = obs is not None and not obs["joint_holds"] and not rep.terminated
        ok &= passed
        out[name] = {"obstruction": obs, "max_count": rep.sections["eigenvalue_count"]["max_count"],
                     "pass": passed}
    return {"threshold": HW_THRESHOLD, "scenarios": out, "pass": ok}


TITLES = {
    1: "fixture exactness (soliton residual, closed-form Ricci vs oracle)",
    2: "harmonic-Weyl equivalence (Cotton and gradient identity; perturbed control)",
    3: "ODE correctness (closed forms, fourth-order convergence)",
    4: "identity suite along 20 random trajectories",
    5: "at most three distinct Ricci eigenvalues",
    6: "Laplacian identities",
    7: "three-fiber obstruction",
    8: "determinism (byte-identical reports)",
}
CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5, 6: criterion_6,
            7: criterion_7}


def run_criterion(number: int) -> CriterionResult:
    start = time.perf_counter()
    report = _clean(CRITERIA[number]())
    return CriterionResult(number, TITLES[number], bool(report["pass"]), report, time.perf_counter() - start)


def determinism(previous: dict[int, CriterionResult]) -> CriterionResult:
    """Re-run criteria 1-7 from scratch and compare serialised reports."""
    start = time.perf_counter()
    _SUITE_CACHE.clear()
    same = {}
    for number in sorted(CRITERIA):
        again = run_criterion(number)
        same[str(number)] = again.to_json() == previous[number].to_json()
    report = {"identical": same, "pass": all(same.values())}
    return CriterionResult(8, TITLES[8], report["pass"], report, time.perf_counter() - start)


def run_all() -> list[CriterionResult]:
    results = {n: run_criterion(n) for n in sorted(CRITERIA)}
    return [*results.values(), determinism(results)]


def main() -> int:  # pragma: no cover - thin wrapper
    results = run_all()
    for r in results:
        print(f"{r.line()} ({r.seconds:.1f} s)")
    return 0 if all(r.passed for r in results) else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
