"""Command-line front end.

Every command builds a :class:`Report` from library calls only; ``--format``
selects what goes to stdout (the JSON report or the CSV table) and ``--out``
writes both to a directory.  Exit codes: 0 all checks pass, 1 a check failed,
2 schema or usage error, 3 singular point or event before the end of a
required span.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .errors import DegenerateGradientError, ScenarioError, SingularPointError, SolitonLabError
from .ode import (KNOWN_CASES, Trajectory, conserved_drift, integrate, known_solution,
                  random_initial_data, trajectory_spec)
from .oracle import GRADIENT_FLOOR, PointGeometry, bari_residual, bari_tensor
from .scenario import Scenario, parse_scenario
from .spectrum import (PER_FIBER_RESIDUALS, count_distinct_eigenvalues, csv_header, laplacian_checks,
                       spectrum_at)
from .tensors import generalized_eigenvalues
from .warped import WarpedSpec, connection_summary, ricci_closed_form, scalar_closed_form, to_chart

__all__ = ["Check", "Report", "main", "verify_known", "integrate_scenario", "spectrum_scenario",
           "check_theorem", "oracle_compare", "sample_points", "EXIT_PASS", "EXIT_FAIL", "EXIT_USAGE",
           "EXIT_SINGULAR"]

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_SINGULAR = 0, 1, 2, 3

HW_THRESHOLD = 1e-5
SEPARATION = 0.1
IDENTITY_TOL = 1e-4
DRIFT_TOL = 1e-6
RESIDUAL_FAMILIES = PER_FIBER_RESIDUALS + ("base_soliton",)


def _clean(x):
    """JSON-safe value: numpy scalars to Python, non-finite floats to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


@dataclass
class Check:
    name: str
    value: float | None
    threshold: float
    relation: str = "<"  # "<", "<=", ">", "=="
    note: str | None = None
    passed: bool | None = None

    def __post_init__(self) -> None:
        if self.passed is None:
            v, t = self.value, self.threshold
            if v is None or (isinstance(v, float) and not math.isfinite(v)):
                self.passed = False
            else:
                self.passed = {"<": v < t, "<=": v <= t, ">": v > t, "==": v == t}[self.relation]

    def to_dict(self) -> dict:
        out = {"name": self.name, "max_residual": self.value, "threshold": self.threshold,
               "relation": self.relation, "pass": bool(self.passed)}
        if self.note:
            out["note"] = self.note
        return out


@dataclass
class Report:
    command: str
    scenario: dict
    checks: list[Check] = field(default_factory=list)
    sections: dict = field(default_factory=dict)
    events: list = field(default_factory=list)
    stats: dict = field(default_factory=dict)
    table_header: list[str] | None = None
    table: list[list] | None = None
    terminated: bool = False

    def add(self, check: Check) -> Check:
        if any(c.name == check.name for c in self.checks):
            raise ValueError(f"duplicate check '{check.name}'")
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def exit_code(self) -> int:
        if self.terminated:
            return EXIT_SINGULAR
        return EXIT_PASS if self.passed else EXIT_FAIL

    def to_dict(self) -> dict:
        return _clean({
            "command": self.command,
            "version": __version__,
            "scenario": self.scenario,
            "checks": [c.to_dict() for c in self.checks],
            **self.sections,
            "events": self.events,
            "stats": self.stats,
            "terminated": self.terminated,
            "pass": self.passed,
            "exit_code": self.exit_code,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        if self.table is None:
            writer.writerow(["name", "max_residual", "threshold", "pass"])
            for c in self.checks:
                writer.writerow([c.name, _cell(c.value), repr(c.threshold), "pass" if c.passed else "fail"])
        else:
            writer.writerow(self.table_header)
            for row in self.table:
                writer.writerow([_cell(v) for v in row])
        return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        v = float(v) + 0.0  # folds -0.0 into 0.0
        return repr(v) if math.isfinite(v) else ""
    return str(v)


def _max(values) -> float | None:
    vals = [abs(v) for v in values if v is not None and math.isfinite(v)]
    return max(vals) if vals else None


def sample_points(chart, s_values: Sequence[float], seed: int = 0, spread: float = 0.5) -> list[np.ndarray]:
    """Chart points at the given ``s`` with seeded fiber coordinates inside ``spread`` of each box."""
    rng = np.random.default_rng(seed)
    half = 0.5 * (chart.upper - chart.lower)
    pts = []
    for s in s_values:
        x = chart.center + spread * half * rng.uniform(-1.0, 1.0, chart.dim)
        x[0] = s
        pts.append(x)
    return pts


def _interior(lo: float, hi: float, count: int) -> np.ndarray:
    return np.linspace(lo, hi, count + 2)[1:-1]


def _spectrum_gap(spec: WarpedSpec, chart, x: np.ndarray) -> tuple[float, float]:
    geo = PointGeometry(chart, x, depth=2)
    oracle = generalized_eigenvalues(geo.ric.value, geo.g.value)
    closed = np.sort(ricci_closed_form(spec, x[0]).eigenvalues())
    return float(np.max(np.abs(oracle - closed))), abs(float(geo.scalar.value) - scalar_closed_form(spec, x[0]))


def _residual_maxima(samples) -> dict[str, float | None]:
    out = {}
    for fam in RESIDUAL_FAMILIES:
        vals = [v for smp in samples for name, v in smp.residuals.items()
                if (name == fam if fam == "base_soliton" else name.rsplit("_", 1)[0] == fam)]
        out[fam] = _max(vals)
    return out


def _fiber_spread(samples) -> float | None:
    """Largest spread over fibers of ``-(n-1)(xi_i' + xi_i^2)`` at a sample."""
    spreads = []
    for smp in samples:
        vals = [-(smp.n - 1) * (d + x * x) for x, d in zip(smp.xi, smp.xi_prime)]
        spreads.append(max(vals) - min(vals))
    return max(spreads) if spreads else None


def _hw_scan(traj: Trajectory, points: int) -> dict:
    """Bari residual (zero-Cotton criterion) at interior grid points of a trajectory."""
    spec = trajectory_spec(traj)
    chart = to_chart(spec)
    idx = np.unique(np.round(_interior(0, traj.s.size - 1, points)).astype(int))
    values, skipped = [], 0
    for j in idx:
        x = chart.center.copy()
        x[0] = traj.s[j]
        try:
            values.append(bari_residual(chart, x))
        except DegenerateGradientError:
            skipped += 1
    return {"max_bari": max(values) if values else None, "min_bari": min(values) if values else None,
            "points": int(idx.size), "degenerate_points": skipped}


def _min_xi_gap(traj: Trajectory) -> float | None:
    k = traj.k
    if k < 2:
        return None
    xi = traj.y[:, 2 + k :] / traj.y[:, 2 : 2 + k]
    return float(min(np.min(np.abs(xi[:, i] - xi[:, j])) for i in range(k) for j in range(i + 1, k)))


# -- commands -----------------------------------------------------------------------


def verify_known(case: str, n: int, lam: float, points: int = 8, seed: int = 0) -> Report:
    """Full fixture suite for a closed-form solution."""
    spec, state = known_solution(case, n, lam)
    echo = {"case": case, "n": n, "lambda": lam, "points": points, "seed": seed}
    rep = Report("verify-known", echo)
    chart = to_chart(spec)
    s0 = state.s
    window = (s0 - 0.5, s0 + 0.5) if case == "sphere" else (s0, s0 + 1.0)
    pts = sample_points(chart, _interior(*window, points), seed)

    soliton, eig, scal, cotton, bari, degenerate = [], [], [], [], [], 0
    for x in pts:
        geo = PointGeometry(chart, x, depth=3)
        soliton.append(float(np.max(np.abs(geo.ric.value + geo.hess_f.value - lam * geo.g.value))))
        e, sc = _spectrum_gap(spec, chart, x)
        eig.append(e)
        scal.append(sc)
        cotton.append(float(np.max(np.abs(geo.cotton.value))))
        if np.linalg.norm(geo.grad_f) < GRADIENT_FLOOR:
            degenerate += 1
        else:
            bari.append(float(np.max(np.abs(bari_tensor(geo)))))
    rep.add(Check("soliton_residual", max(soliton), 1e-6))
    rep.add(Check("ricci_closed_form_vs_oracle", max(eig), 1e-5))
    rep.add(Check("scalar_closed_form_vs_oracle", max(scal), 1e-5))
    rep.add(Check("cotton", max(cotton), 1e-5))
    if bari:
        rep.add(Check("bari_residual", max(bari), 1e-5))
    else:
        rep.add(Check("bari_residual", None, 1e-5, note="vacuous: grad f vanishes at every sample point",
                      passed=True))

    traj = integrate(state, spec.fibers, lam, (s0, s0 + 1.0))
    rep.events = [e.to_dict() for e in traj.events]
    rep.stats = dict(traj.stats)
    exact = np.array([[float(spec.potential(s)), float(spec.warps[0](s))] for s in traj.s])
    rep.add(Check("integration_vs_closed_form", float(np.max(np.abs(traj.y[:, [0, 2]] - exact))), 1e-6))
    rep.add(Check("conserved_drift", conserved_drift(traj), DRIFT_TOL))
    samples = traj.samples()
    maxima = _residual_maxima(samples)
    for fam, val in maxima.items():
        if val is None:
            rep.add(Check(f"identity_{fam}", None, IDENTITY_TOL, note="undefined: f' vanishes", passed=True))
        else:
            rep.add(Check(f"identity_{fam}", val, IDENTITY_TOL))
    lap = [laplacian_checks(spec, s).max_imbalance for s in _interior(*window, points)]
    rep.add(Check("laplacian_identities", max(lap), 1e-4))
    counts = count_distinct_eigenvalues(samples)
    rep.add(Check("distinct_eigenvalues", counts.max_count, 3, "<="))
    rep.sections["eigenvalue_count"] = {"max_count": counts.max_count}
    rep.terminated = not traj.complete
    return rep


def _trajectory(sc: Scenario) -> Trajectory:
    state = sc.initial_state
    if state is None:
        raise ScenarioError("initial_state", "this command needs an initial_state (or \"from_warps\")")
    return integrate(state, sc.fibers, sc.lam, sc.s_span, sc.control())


def integrate_scenario(sc: Scenario) -> Report:
    traj = _trajectory(sc)
    rep = Report("integrate", sc.echo())
    rep.events = [e.to_dict() for e in traj.events]
    rep.stats = dict(traj.stats)
    rep.sections["trajectory"] = {"reached": float(traj.s[-1]), "grid_points": int(traj.s.size)}
    rep.add(Check("conserved_drift", conserved_drift(traj), DRIFT_TOL))
    samples = traj.samples() if traj.s.size >= 5 else []
    rep.table_header = csv_header(sc.k)
    rep.table = [smp.row() for smp in samples]
    rep.terminated = not traj.complete
    return rep


def spectrum_scenario(sc: Scenario, tol: float | None = None) -> Report:
    """Closed-form spectrum and residuals on the output grid of a spec."""
    spec = sc.spec()
    tol = 1e-6 if tol is None else tol
    rep = Report("spectrum", sc.echo())
    samples = [spectrum_at(spec, s) for s in np.linspace(*sc.s_span, sc.outputs.grid_points)]
    for fam, val in _residual_maxima(samples).items():
        if val is None:
            rep.add(Check(f"identity_{fam}", None, tol, note="undefined at every sample", passed=True))
        else:
            rep.add(Check(f"identity_{fam}", val, tol))
    counts = count_distinct_eigenvalues(samples, sc.tolerances.spectrum_tol)
    rep.sections["eigenvalue_count"] = {"max_count": counts.max_count}
    rep.sections["singular_samples"] = sum(smp.singular for smp in samples)
    rep.table_header = csv_header(sc.k)
    rep.table = [smp.row() for smp in samples]
    return rep


def check_theorem(sc: Scenario, tol: float | None = None, seed: int | None = None, points: int = 8) -> Report:
    """Distinct-eigenvalue bound along the scenario trajectory, with the harmonic-Weyl test.

    For three or more fibers the report carries an ``obstruction`` section with
    the two clauses of the joint condition (harmonic Weyl over the span and
    pairwise ``xi`` separation above 0.1) and which of them fail.
    """
    tol = sc.tolerances.spectrum_tol if tol is None else tol
    seed = sc.seed if seed is None else seed
    traj = _trajectory(sc)
    rep = Report("check-theorem", sc.echo())
    rep.events = [e.to_dict() for e in traj.events]
    rep.stats = dict(traj.stats)
    if not traj.complete:
        rep.terminated = True
        rep.add(Check("full_span", float(traj.s[-1]), sc.s_span[1], "==", note="event before the end of s_span"))
        return rep
    samples = traj.samples()
    counts = count_distinct_eigenvalues(samples, tol)
    hw = _hw_scan(traj, points)
    gap = _min_xi_gap(traj)
    hw_holds = hw["max_bari"] is not None and hw["max_bari"] < HW_THRESHOLD
    rep.sections["eigenvalue_count"] = {"max_count": counts.max_count,
                                        "count_histogram": {str(c): counts.counts.count(c)
                                                            for c in sorted(set(counts.counts))}}
    rep.sections["harmonic_weyl"] = {**hw, "threshold": HW_THRESHOLD, "holds": hw_holds}
    rep.add(Check("conserved_drift", conserved_drift(traj), DRIFT_TOL))
    rep.add(Check("theorem_consistent", counts.max_count, 3, "<=",
                  passed=(not hw_holds) or counts.max_count <= 3,
                  note="at most three distinct eigenvalues wherever the Weyl tensor is harmonic"))
    if sc.k <= 2:
        rep.add(Check("harmonic_weyl", hw["max_bari"], HW_THRESHOLD))
        maxima = _residual_maxima(samples)
        for fam in RESIDUAL_FAMILIES:
            rep.add(Check(f"identity_{fam}", maxima[fam], IDENTITY_TOL))
        rep.add(Check("identity_fiber_independence", _fiber_spread(samples), IDENTITY_TOL))
    else:
        separated = gap is not None and gap > SEPARATION
        failing = [name for name, ok in (("harmonic_weyl", hw_holds), ("xi_separation", separated)) if not ok]
        rep.sections["obstruction"] = {
            "bari_clause": {"max_bari": hw["max_bari"], "min_bari": hw["min_bari"], "threshold": HW_THRESHOLD,
                            "holds": hw_holds},
            "separation_clause": {"min_xi_gap": gap, "threshold": SEPARATION, "holds": separated},
            "joint_holds": hw_holds and separated,
            "failing_clauses": failing,
        }
        rep.add(Check("three_fiber_obstruction", hw["max_bari"], HW_THRESHOLD, ">=",
                      passed=not (hw_holds and separated),
                      note="joint condition must fail; failing: " + (", ".join(failing) or "none")))
    if sc.random_trials:
        _random_trials(rep, sc, seed, tol)
    return rep


def _random_trials(rep: Report, sc: Scenario, seed: int, tol: float | None) -> None:
    worst: dict[str, float] = {}
    max_count, drift = 0, 0.0
    for i in range(sc.random_trials):
        rng = np.random.default_rng([seed, i])
        k = 1 + i % 2
        fibers, state, lam = random_initial_data(rng, sc.dim_total, k)
        traj = integrate(state, fibers, lam, (state.s, state.s + 1.0))
        samples = traj.samples()
        max_count = max(max_count, count_distinct_eigenvalues(samples, tol).max_count)
        drift = max(drift, conserved_drift(traj))
        for fam, val in _residual_maxima(samples).items():
            if val is not None:
                worst[fam] = max(worst.get(fam, 0.0), val)
    rep.sections["random_trials"] = {"count": sc.random_trials, "seed": seed, "max_count": max_count,
                                     "max_residuals": worst, "max_drift": drift}
    rep.add(Check("random_trials_distinct_eigenvalues", max_count, 3, "<="))
    rep.add(Check("random_trials_identities", max(worst.values(), default=None), IDENTITY_TOL))
    rep.add(Check("random_trials_conserved_drift", drift, DRIFT_TOL))


def oracle_compare(sc: Scenario, points: int = 16, seed: int | None = None) -> Report:
    """Closed-form spectrum against the chart oracle at interior points."""
    seed = (sc.seed or 0) if seed is None else seed
    if sc.warps is not None:
        spec = sc.spec()
    else:
        traj = _trajectory(sc)
        if not traj.complete:
            rep = Report("oracle-compare", sc.echo(), terminated=True)
            rep.events = [e.to_dict() for e in traj.events]
            return rep
        spec = trajectory_spec(traj, sc.name)
    chart = to_chart(spec)
    a, b = spec.interval
    margin = 0.02 * (b - a)
    pts = sample_points(chart, _interior(a + margin, b - margin, points), seed)
    rep = Report("oracle-compare", sc.echo())
    rows, eig, scal, block = [], [], [], []
    offsets = np.cumsum([1] + [f.dim for f in spec.fibers])
    for x in pts:
        e, s_err = _spectrum_gap(spec, chart, x)
        geo = PointGeometry(chart, x, depth=1)
        g, dg = geo.g.value, geo.g.partial(0).value
        xi = [float(v) for v in np.atleast_1d(connection_summary(spec, x[0]))]
        err = 0.0
        for i, o in enumerate(offsets[:-1]):
            sl = slice(o, offsets[i + 1])
            err = max(err, float(np.max(np.abs(dg[sl, sl] - 2 * xi[i] * g[sl, sl]))))
        eig.append(e)
        scal.append(s_err)
        block.append(err)
        rows.append([float(x[0]), e, s_err, err])
    rep.add(Check("ricci_eigenvalues", max(eig), 1e-5))
    rep.add(Check("scalar_curvature", max(scal), 1e-5))
    rep.add(Check("fiber_block_log_derivative", max(block), 1e-6))
    rep.table_header = ["s", "ricci_eigenvalue_gap", "scalar_gap", "fiber_block_gap"]
    rep.table = rows
    return rep


# -- argument handling ------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solitonlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", required=True, help="scenario JSON file or built-in name")
        p.add_argument("--out", help="directory for report.json and the CSV table")
        p.add_argument("--format", choices=("json", "csv"), default="json", help="stdout format")
        p.add_argument("--seed", type=int, help="override the scenario seed")
        return p

    vk = common(sub.add_parser("verify-known", help="fixture suite for a closed-form solution"), scenario=False)
    vk.add_argument("--case", required=True, choices=KNOWN_CASES)
    vk.add_argument("--n", type=int, default=4)
    vk.add_argument("--lambda", dest="lam", type=float, required=True)
    vk.add_argument("--points", type=int, default=8)
    common(sub.add_parser("integrate", help="integrate the soliton ODE from initial_state"))
    sp = common(sub.add_parser("spectrum", help="closed-form spectrum and residuals on the grid"))
    sp.add_argument("--tol", type=float, help="residual threshold (default 1e-6)")
    ct = common(sub.add_parser("check-theorem", help="distinct Ricci eigenvalues along a trajectory"))
    ct.add_argument("--tol", type=float, help="eigenvalue clustering tolerance")
    ct.add_argument("--points", type=int, default=8, help="harmonic-Weyl sample points")
    oc = common(sub.add_parser("oracle-compare", help="closed form against the chart oracle"))
    oc.add_argument("--points", type=int, default=16)
    return parser


def run(args: argparse.Namespace) -> Report:
    if args.command == "verify-known":
        if args.points < 1:
            raise ScenarioError("--points", "must be >= 1")
        try:
            return verify_known(args.case, args.n, args.lam, args.points, args.seed or 0)
        except SolitonLabError:
            raise
        except ValueError as exc:
            raise ScenarioError("--case", str(exc)) from None
    sc = parse_scenario(args.scenario)
    if args.command == "integrate":
        return integrate_scenario(sc)
    if args.command == "spectrum":
        return spectrum_scenario(sc, args.tol)
    if args.command == "check-theorem":
        return check_theorem(sc, args.tol, args.seed, args.points)
    return oracle_compare(sc, args.points, args.seed)


def _write(rep: Report, out: Path, stem: str, emit: Sequence[str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.json").write_text(rep.to_json(), encoding="utf-8")
    if "csv" in emit:
        (out / f"{stem}.csv").write_text(rep.to_csv(), encoding="utf-8")


def main(argv: Sequence[str] | None = None) -> int:
    parser = _parser()
    args = parser.parse_args(argv)
    try:
        rep = run(args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SingularPointError as exc:
        print(f"singular point: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except (SolitonLabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.out:
        if args.command == "verify-known":
            stem, emit = f"{args.case}-n{args.n}-verify-known", ("json", "csv")
        else:
            stem, emit = f"{Path(args.scenario).stem}-{args.command}", parse_scenario(args.scenario).outputs.emit
        _write(rep, Path(args.out), stem, set(emit) | {args.format})
    try:
        sys.stdout.write(rep.to_json() if args.format == "json" else rep.to_csv())
        sys.stdout.flush()
    except BrokenPipeError:
        # reader closed early (e.g. piped into head); keep the exit code meaningful
        sys.stdout = open(os.devnull, "w")
    return rep.exit_code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
