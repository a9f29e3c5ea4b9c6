"""Scenario files: a single strict JSON document describing one warped-product setup.

Example (round cylinder shrinker)::

    {
      "name": "cylinder",
      "dim_total": 4,
      "lambda": 2.0,
      "fibers": [{"dim": 3, "einstein_const": 2.0, "model": "sphere"}],
      "warps": [{"kind": "closed_form", "name": "const", "params": {"c": 1.0}}],
      "potential": {"kind": "closed_form", "name": "quadratic", "params": {"a": 1.0}},
      "initial_state": {"s": 1.0, "f": 1.0, "fp": 2.0, "h": [1.0], "hp": [0.0]},
      "s_span": [1.0, 2.0],
      "tolerances": {"rel_tol": 1e-10, "abs_tol": 1e-12},
      "outputs": {"grid_points": 401, "emit": ["csv", "json"]}
    }

Unknown keys are rejected.  ``warps``/``potential`` are needed by the
closed-form commands, ``initial_state`` (or the string ``"from_warps"``) by
the integrating ones.  ``random_trials`` > 0 adds seeded random trajectories
to ``check-theorem`` and then requires an integer ``seed``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import ScenarioError, SolitonLabError
from .ode import IntegrationControl, SolitonState
from .warped import FIBER_MODELS, ClosedForm, FiberSpec, SampledFunction, WarpedSpec

__all__ = ["Scenario", "Tolerances", "Outputs", "parse_scenario", "loads_scenario", "builtin_scenario",
           "builtin_names"]

_TOP = {"name", "dim_total", "lambda", "fibers", "warps", "potential", "initial_state", "s_span",
        "tolerances", "outputs", "seed", "random_trials"}
_REQUIRED = ("name", "dim_total", "lambda", "fibers", "s_span")
_FIBER = {"dim", "einstein_const", "model", "model_params"}
_FUNCTION = {"kind", "name", "params", "s", "values"}
_STATE = {"s", "f", "fp", "h", "hp"}
_TOL = {"rel_tol", "abs_tol", "fd_step", "spectrum_tol"}
_OUT = {"grid_points", "emit"}


@dataclass(frozen=True)
class Tolerances:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    fd_step: float = 1e-3
    spectrum_tol: float | None = None


@dataclass(frozen=True)
class Outputs:
    grid_points: int = 401
    emit: tuple[str, ...] = ("json",)


@dataclass(frozen=True)
class Scenario:
    name: str
    dim_total: int
    lam: float
    fibers: tuple[FiberSpec, ...]
    s_span: tuple[float, float]
    warps: tuple | None = None
    potential: Any = None
    initial_state: SolitonState | None = None
    tolerances: Tolerances = field(default_factory=Tolerances)
    outputs: Outputs = field(default_factory=Outputs)
    seed: int | None = None
    random_trials: int = 0
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def k(self) -> int:
        return len(self.fibers)

    def spec(self) -> WarpedSpec:
        if self.warps is None:
            raise ScenarioError("warps", "this command needs closed-form or sampled warps")
        return WarpedSpec(self.s_span, self.fibers, self.warps, self.potential, self.lam, self.name)

    def control(self) -> IntegrationControl:
        return IntegrationControl(rel_tol=self.tolerances.rel_tol, abs_tol=self.tolerances.abs_tol,
                                  grid_points=self.outputs.grid_points)

    def echo(self) -> dict:
        """The scenario as parsed, in a canonical key order."""
        return json.loads(json.dumps(self.raw, sort_keys=True))


def _line_of(text: str, path: tuple) -> int | None:
    """Best-effort source line of a key path (keys searched in order of nesting)."""
    pos, found = 0, None
    for part in path:
        if isinstance(part, int):
            continue
        idx = text.find(f'"{part}"', pos)
        if idx < 0:
            break
        pos, found = idx, idx
    return None if found is None else text.count("\n", 0, found) + 1


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text

    def fail(self, path: tuple, reason: str):
        name = ".".join(str(p) if not isinstance(p, int) else f"[{p}]" for p in path).replace(".[", "[")
        raise ScenarioError(name or "<root>", reason, _line_of(self.text, path))

    def obj(self, value, path: tuple, allowed: set) -> dict:
        if not isinstance(value, dict):
            self.fail(path, "expected an object")
        for key in value:
            if key not in allowed:
                self.fail(path + (key,), f"unknown field (allowed: {', '.join(sorted(allowed))})")
        return value

    def number(self, value, path: tuple, positive: bool = False) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            self.fail(path, "expected a finite number")
        if positive and not value > 0:
            self.fail(path, f"must be positive, got {value}")
        return float(value)

    def integer(self, value, path: tuple, minimum: int | None = None) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, "expected an integer")
        if minimum is not None and value < minimum:
            self.fail(path, f"must be >= {minimum}, got {value}")
        return value

    def numbers(self, value, path: tuple) -> list[float]:
        if not isinstance(value, list):
            self.fail(path, "expected a list of numbers")
        return [self.number(v, path + (i,)) for i, v in enumerate(value)]

    def function(self, value, path: tuple):
        d = self.obj(value, path, _FUNCTION)
        kind = d.get("kind")
        if kind == "closed_form":
            extra = {"s", "values"} & set(d)
            if extra:
                self.fail(path + (sorted(extra)[0],), "not allowed for closed_form")
            name = d.get("name")
            if not isinstance(name, str):
                self.fail(path + ("name",), f"expected one of {ClosedForm.names()}")
            params = d.get("params", {})
            if not isinstance(params, dict):
                self.fail(path + ("params",), "expected an object")
            clean = {k: self.number(v, path + ("params", k)) for k, v in params.items()}
            try:
                return ClosedForm(name, tuple(clean.items()))
            except (ValueError, TypeError) as exc:
                self.fail(path + ("name",), str(exc))
        if kind == "samples":
            extra = {"name", "params"} & set(d)
            if extra:
                self.fail(path + (sorted(extra)[0],), "not allowed for samples")
            s = self.numbers(d.get("s"), path + ("s",))
            v = self.numbers(d.get("values"), path + ("values",))
            try:
                return SampledFunction(s, v)
            except ValueError as exc:
                self.fail(path + ("s",), str(exc))
        self.fail(path + ("kind",), "expected 'closed_form' or 'samples'")

    def fiber(self, value, path: tuple) -> FiberSpec:
        d = self.obj(value, path, _FIBER)
        dim = self.integer(d.get("dim"), path + ("dim",), 1)
        kappa = self.number(d.get("einstein_const", 0.0), path + ("einstein_const",))
        model = d.get("model", "flat")
        if model not in FIBER_MODELS or model == "custom":
            self.fail(path + ("model",), "expected 'sphere', 'flat' or 'hyperbolic' (custom charts are library-only)")
        params = d.get("model_params", {})
        if params not in ({}, None):
            self.fail(path + ("model_params",), "built-in models take no parameters")
        try:
            return FiberSpec(dim, kappa, model)
        except SolitonLabError as exc:
            self.fail(path, str(exc))
        except ValueError as exc:
            self.fail(path, str(exc))


def loads_scenario(text: str) -> Scenario:
    """Parse and validate scenario JSON text."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("<json>", exc.msg, exc.lineno) from None
    p = _Parser(text)
    d = p.obj(data, (), _TOP)
    for key in _REQUIRED:
        if key not in d:
            raise ScenarioError(key, "missing required field")
    name = d["name"]
    if not isinstance(name, str) or not name:
        p.fail(("name",), "expected a nonempty string")
    n = p.integer(d["dim_total"], ("dim_total",), 4)
    lam = p.number(d["lambda"], ("lambda",))
    if not isinstance(d["fibers"], list) or not d["fibers"]:
        p.fail(("fibers",), "expected a nonempty list")
    fibers = tuple(p.fiber(f, ("fibers", i)) for i, f in enumerate(d["fibers"]))
    total = 1 + sum(f.dim for f in fibers)
    if total != n:
        p.fail(("dim_total",), f"dim_total = {n} but 1 + sum of fiber dims = {total}")
    span = p.numbers(d["s_span"], ("s_span",))
    if len(span) != 2 or not span[1] > span[0]:
        p.fail(("s_span",), f"expected [s_start, s_end] with s_end > s_start, got {span}")

    tol = Tolerances()
    if "tolerances" in d:
        t = p.obj(d["tolerances"], ("tolerances",), _TOL)
        vals = {}
        for key in ("rel_tol", "abs_tol", "fd_step"):
            if key in t:
                vals[key] = p.number(t[key], ("tolerances", key), positive=True)
        if t.get("spectrum_tol") is not None:
            vals["spectrum_tol"] = p.number(t["spectrum_tol"], ("tolerances", "spectrum_tol"), positive=True)
        tol = Tolerances(**vals)

    out = Outputs()
    if "outputs" in d:
        o = p.obj(d["outputs"], ("outputs",), _OUT)
        grid = p.integer(o.get("grid_points", out.grid_points), ("outputs", "grid_points"), 5)
        emit = o.get("emit", list(out.emit))
        if not isinstance(emit, list) or not emit or any(e not in ("csv", "json") for e in emit):
            p.fail(("outputs", "emit"), "expected a nonempty list drawn from 'csv', 'json'")
        out = Outputs(grid, tuple(dict.fromkeys(emit)))

    warps = potential = None
    if "warps" in d:
        if not isinstance(d["warps"], list):
            p.fail(("warps",), "expected a list")
        if len(d["warps"]) != len(fibers):
            p.fail(("warps",), f"{len(d['warps'])} warps for {len(fibers)} fibers")
        warps = tuple(p.function(w, ("warps", i)) for i, w in enumerate(d["warps"]))
        potential = p.function(d["potential"], ("potential",)) if "potential" in d else ClosedForm("zero")
    elif "potential" in d:
        p.fail(("potential",), "a potential needs warps")

    seed = None
    if "seed" in d:
        seed = p.integer(d["seed"], ("seed",), 0)
    trials = p.integer(d.get("random_trials", 0), ("random_trials",), 0)
    if trials and seed is None:
        p.fail(("random_trials",), "random trials need an explicit integer seed")

    state = None
    if "initial_state" in d:
        raw = d["initial_state"]
        if raw == "from_warps":
            if warps is None:
                p.fail(("initial_state",), "'from_warps' needs warps")
            state = _state_from_warps(warps, potential, span[0], p)
        else:
            st = p.obj(raw, ("initial_state",), _STATE)
            for key in _STATE:
                if key not in st:
                    p.fail(("initial_state", key), "missing field")
            h = p.numbers(st["h"], ("initial_state", "h"))
            hp = p.numbers(st["hp"], ("initial_state", "hp"))
            if len(h) != len(fibers) or len(hp) != len(fibers):
                p.fail(("initial_state", "h"), f"need {len(fibers)} entries in h and hp")
            if min(h) <= 0:
                p.fail(("initial_state", "h"), "warps must be positive")
            s0 = p.number(st["s"], ("initial_state", "s"))
            if abs(s0 - span[0]) > 1e-12:
                p.fail(("initial_state", "s"), f"initial s = {s0} must equal s_span[0] = {span[0]}")
            state = SolitonState(s0, p.number(st["f"], ("initial_state", "f")),
                                 p.number(st["fp"], ("initial_state", "fp")), tuple(h), tuple(hp))

    scenario = Scenario(name, n, lam, fibers, (span[0], span[1]), warps, potential, state, tol, out, seed,
                        trials, data)
    if warps is not None:
        try:
            scenario.spec()
        except (SolitonLabError, ValueError) as exc:
            p.fail(("warps",), str(exc))
    return scenario


def _state_from_warps(warps, potential, s0: float, p: _Parser) -> SolitonState:
    from .jets import univariate_derivatives

    h = [univariate_derivatives(w, s0, 1) for w in warps]
    f = univariate_derivatives(potential, s0, 1)
    if min(v[0] for v in h) <= 0:
        p.fail(("initial_state",), "warps are not positive at s_span[0]")
    return SolitonState(s0, f[0], f[1], tuple(v[0] for v in h), tuple(v[1] for v in h))


def parse_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file (or a built-in name such as ``cylinder``)."""
    path = Path(path)
    if not path.exists():
        builtin = _builtin_path(str(path))
        if builtin is None:
            raise ScenarioError("<file>", f"no such scenario file: {path}")
        path = builtin
    return loads_scenario(path.read_text(encoding="utf-8"))


_BUILTIN_DIR = Path(__file__).parent / "scenarios"


def builtin_names() -> list[str]:
    return sorted(p.stem for p in _BUILTIN_DIR.glob("*.json"))


def _builtin_path(name: str) -> Path | None:
    stem = Path(name).name
    stem = stem[:-5] if stem.endswith(".json") else stem
    candidate = _BUILTIN_DIR / f"{stem}.json"
    return candidate if candidate.exists() else None


def builtin_scenario(name: str) -> Scenario:
    path = _builtin_path(name)
    if path is None:
        raise ScenarioError("<file>", f"no built-in scenario '{name}' (known: {builtin_names()})")
    return loads_scenario(path.read_text(encoding="utf-8"))
