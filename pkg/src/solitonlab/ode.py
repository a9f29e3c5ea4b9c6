"""Soliton ODE for multiply warped products over a line.

State ``(s, f, f', h_1..h_k, h_1'..h_k')``.  The fiber equations come from the
soliton equation restricted to each fiber block, ``f''`` from the base block.
Integration is classic RK4 with step-doubling error control.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import InvalidStateError
from .jets import Jet, apply_taylor
from .warped import ClosedForm, FiberSpec, WarpedSpec, ricci_terms

__all__ = [
    "SolitonState",
    "IntegrationControl",
    "Event",
    "Trajectory",
    "rhs",
    "integrate",
    "known_solution",
    "conserved_drift",
    "local_taylor",
    "trajectory_spec",
    "random_initial_data",
    "KNOWN_CASES",
]

KNOWN_CASES = ("gaussian", "cylinder", "sphere")


@dataclass(frozen=True)
class SolitonState:
    s: float
    f: float
    fp: float
    h: tuple[float, ...]
    hp: tuple[float, ...]

    def __post_init__(self) -> None:
        h = tuple(float(v) for v in np.atleast_1d(self.h))
        hp = tuple(float(v) for v in np.atleast_1d(self.hp))
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "hp", hp)
        for name in ("s", "f", "fp"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if len(h) != len(hp) or not h:
            raise InvalidStateError("need matching, nonempty h and hp")
        values = np.array([self.s, self.f, self.fp, *h, *hp])
        if not np.all(np.isfinite(values)):
            raise InvalidStateError("state has non-finite entries")
        if min(h) <= 0:
            raise InvalidStateError(f"warps must be positive, got h = {h}")

    @property
    def k(self) -> int:
        return len(self.h)

    def vector(self) -> np.ndarray:
        return np.array([self.f, self.fp, *self.h, *self.hp])

    @classmethod
    def from_vector(cls, s: float, y: Sequence[float]) -> "SolitonState":
        y = np.asarray(y, dtype=float)
        k = (y.size - 2) // 2
        return cls(s, y[0], y[1], tuple(y[2 : 2 + k]), tuple(y[2 + k :]))


def _derivative(y: Sequence, dims: Sequence[float], kappas: Sequence[float], lam: float) -> list:
    """Right-hand side on a flat list ``[f, f', h..., h'...]`` of floats or jets."""
    k = len(dims)
    fp = y[1]
    h = y[2 : 2 + k]
    hp = y[2 + k :]
    xi = [hp[i] / h[i] for i in range(k)]
    total = sum(dims[l] * xi[l] for l in range(k))
    hpp = []
    for i in range(k):
        others = total - dims[i] * xi[i]
        bracket = kappas[i] / (h[i] * h[i]) - (dims[i] - 1) * xi[i] * xi[i] - xi[i] * others - lam + fp * xi[i]
        hpp.append(h[i] * bracket)
    fpp = lam + sum(dims[i] * hpp[i] / h[i] for i in range(k))
    return [fp, fpp, *hp, *hpp]


def rhs(state: SolitonState, fibers: Sequence[FiberSpec], lam: float) -> np.ndarray:
    """Derivative of ``[f, f', h, h']`` with respect to ``s``."""
    if len(fibers) != state.k:
        raise InvalidStateError("state and fiber list have different lengths")
    dims = [f.dim for f in fibers]
    kappas = [f.einstein_const for f in fibers]
    return np.array(_derivative(list(state.vector()), dims, kappas, lam), dtype=float)


@dataclass(frozen=True)
class IntegrationControl:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    max_step: float = 0.05
    min_step: float = 1e-10
    eps_h: float = 1e-8
    eps_f: float = 1e-8
    grid_points: int = 401
    adaptive: bool = True
    max_abs: float = math.inf  # stop once any state component exceeds this

    def __post_init__(self) -> None:
        for name in ("rel_tol", "abs_tol", "max_step", "min_step", "eps_h", "eps_f", "max_abs"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.grid_points < 2:
            raise ValueError("grid_points must be >= 2")


@dataclass(frozen=True)
class Event:
    kind: str  # warp_collapse | critical_point | non_finite | step_underflow | bound_exceeded
    s: float
    detail: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "s", float(self.s))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "s": self.s, "detail": self.detail}


def _rk4(fun, s: float, y: np.ndarray, h: float) -> np.ndarray:
    k1 = fun(y)
    k2 = fun(y + 0.5 * h * k1)
    k3 = fun(y + 0.5 * h * k2)
    k4 = fun(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Solution on the output grid up to the first event.

    ``s`` holds the grid points actually reached, ``y`` the matching state
    vectors ``[f, f', h..., h'...]``.  ``stats`` are deterministic counters.
    """

    fibers: tuple[FiberSpec, ...]
    lam: float
    s: np.ndarray
    y: np.ndarray
    events: tuple[Event, ...]
    s_span: tuple[float, float]
    stats: dict
    _taylor_cache: dict = field(default_factory=dict, repr=False)

    @property
    def k(self) -> int:
        return len(self.fibers)

    @property
    def complete(self) -> bool:
        return not self.events

    @property
    def states(self) -> list[SolitonState]:
        return [SolitonState.from_vector(s, y) for s, y in zip(self.s, self.y)]

    def _fun(self, y: np.ndarray) -> np.ndarray:
        dims = [f.dim for f in self.fibers]
        kappas = [f.einstein_const for f in self.fibers]
        return np.array(_derivative(list(y), dims, kappas, self.lam))

    def vector_at(self, s: float, substep: float = 1e-3) -> np.ndarray:
        """State vector at ``s`` by fixed-step RK4 from the nearest grid node."""
        s = float(s)
        if not self.s[0] - 1e-12 <= s <= self.s[-1] + 1e-12:
            raise ValueError(f"s = {s} outside the integrated range [{self.s[0]}, {self.s[-1]}]")
        j = int(np.argmin(np.abs(self.s - s)))
        y = self.y[j].copy()
        gap = s - self.s[j]
        m = int(math.ceil(abs(gap) / substep))
        if m:
            h = gap / m
            for i in range(m):
                y = _rk4(self._fun, self.s[j] + i * h, y, h)
        return y

    def state_at(self, s: float) -> SolitonState:
        return SolitonState.from_vector(s, self.vector_at(s))

    def taylor_at(self, s: float, order: int) -> np.ndarray:
        key = (float(s), order)
        if key not in self._taylor_cache:
            self._taylor_cache[key] = local_taylor(self.fibers, self.lam, self.vector_at(s), s, order)
        return self._taylor_cache[key]

    def samples(self):
        from .spectrum import trajectory_samples

        return trajectory_samples(self)

    def to_dict(self) -> dict:
        return {
            "s_span": list(self.s_span),
            "reached": float(self.s[-1]),
            "grid_points": int(self.s.size),
            "events": [e.to_dict() for e in self.events],
            "stats": dict(self.stats),
        }


def integrate(state0: SolitonState, fibers: Sequence[FiberSpec], lam: float,
              s_span: tuple[float, float], ctrl: IntegrationControl | None = None) -> Trajectory:
    """Integrate from ``state0`` (which must sit at ``s_span[0]``) forward to ``s_span[1]``.

    Steps are clipped so the output grid is hit exactly.  Events end the run and
    are returned on the trajectory rather than raised.
    """
    with np.errstate(all="ignore"):
        return _integrate(state0, tuple(fibers), float(lam), s_span, ctrl or IntegrationControl())


def _integrate(state0, fibers, lam, s_span, ctrl) -> Trajectory:
    a, b = float(s_span[0]), float(s_span[1])
    if not b > a:
        raise ValueError("s_span must be increasing")
    if abs(state0.s - a) > 1e-12:
        raise InvalidStateError(f"initial state sits at s = {state0.s}, span starts at {a}")
    if len(fibers) != state0.k:
        raise InvalidStateError("state and fiber list have different lengths")
    k = state0.k
    dims = [f.dim for f in fibers]
    kappas = [f.einstein_const for f in fibers]

    def fun(y):
        return np.array(_derivative(list(y), dims, kappas, lam))

    grid = np.linspace(a, b, ctrl.grid_points)
    out_s = [a]
    out_y = [state0.vector()]
    events: list[Event] = []
    accepted = rejected = 0
    s, y = a, state0.vector()
    step = ctrl.max_step
    target = 1

    def bad(v):
        return not np.all(np.isfinite(v)) or np.any(v[2 : 2 + k] <= 0)

    while target < grid.size and not events:
        dist = grid[target] - s
        h = min(step, ctrl.max_step, dist)
        if ctrl.adaptive:
            full = _rk4(fun, s, y, h)
            half = _rk4(fun, s, y, 0.5 * h)
            new = _rk4(fun, s + 0.5 * h, half, 0.5 * h)
            if bad(full) or bad(new):
                err = math.inf
            else:
                scale = ctrl.abs_tol + ctrl.rel_tol * np.abs(y)
                err = float(np.max(np.abs(new - full) / 15.0 / scale))
            if err > 1.0:
                rejected += 1
                step = h * (0.2 if not math.isfinite(err) else max(0.2, 0.9 * err ** -0.2))
                if step < ctrl.min_step:
                    if np.min(y[2 : 2 + k]) < math.sqrt(ctrl.eps_h):
                        kind = "warp_collapse"
                    elif not np.all(np.isfinite(new)):
                        kind = "non_finite"
                    else:
                        kind = "step_underflow"
                    events.append(Event(kind, s, f"step fell below {ctrl.min_step:g} at s = {s:.12g}"))
                continue
            growth = 4.0 if err == 0 else min(4.0, 0.9 * err ** -0.2)
            if h == dist:
                step = max(step, h * growth)
            else:
                step = h * growth
        else:
            new = _rk4(fun, s, y, h)
        accepted += 1
        prev = y
        s = grid[target] if h == dist else s + h
        y = new
        if not np.all(np.isfinite(y)):
            events.append(Event("non_finite", s, "non-finite state"))
            break
        if np.max(np.abs(y)) > ctrl.max_abs:
            events.append(Event("bound_exceeded", s, f"max |y| = {np.max(np.abs(y)):.3e} > {ctrl.max_abs:g}"))
            break
        hmin = float(np.min(y[2 : 2 + k]))
        if hmin < ctrl.eps_h:
            events.append(Event("warp_collapse", s, f"min h = {hmin:.3e} < {ctrl.eps_h:g}"))
            break
        # Below sqrt(eps_h) the kappa/h^2 terms cancel catastrophically, so a warp
        # still heading to zero is reported with its linearly extrapolated zero.
        sinking = (y[2 : 2 + k] < math.sqrt(ctrl.eps_h)) & (y[2 + k :] < 0)
        if np.any(sinking):
            i = int(np.argmax(sinking))
            zero = s - y[2 + i] / y[2 + k + i]
            events.append(Event("warp_collapse", s, f"h_{i + 1} = {y[2 + i]:.3e} decreasing, zero near s = {zero:.10g}"))
            break
        if abs(y[1]) < ctrl.eps_f <= abs(prev[1]):
            events.append(Event("critical_point", s, f"|f'| = {abs(y[1]):.3e} < {ctrl.eps_f:g}"))
            break
        if h == dist:
            out_s.append(s)
            out_y.append(y.copy())
            target += 1

    stats = {"accepted_steps": accepted, "rejected_steps": rejected}
    return Trajectory(fibers, float(lam), np.array(out_s), np.array(out_y), tuple(events), (a, b), stats)


def local_taylor(fibers: Sequence[FiberSpec], lam: float, y0: Sequence[float], s0: float, order: int) -> np.ndarray:
    """Derivatives ``d^m y / ds^m`` at ``s0`` for ``m = 0..order`` by Picard iteration on jets.

    Each pass fixes one more Taylor coefficient, so ``order + 1`` passes give the
    exact truncated expansion of the solution through ``y0``.
    """
    dims = [f.dim for f in fibers]
    kappas = [f.einstein_const for f in fibers]
    (t,) = Jet.variables([float(s0)], order)
    base = [Jet.constant(t.space, float(v), order) for v in y0]
    y = list(base)
    for _ in range(order + 1):
        d = _derivative(y, dims, kappas, lam)
        y = [base[i] + d[i].antiderivative() for i in range(len(y))]
    return np.array([[yi.derivative((m,)) for m in range(order + 1)] for yi in y], dtype=float)


class TrajectoryFunction:
    """Component of a trajectory as a function of ``s`` (jet-aware via :func:`local_taylor`)."""

    def __init__(self, traj: Trajectory, index: int) -> None:
        self.traj = traj
        self.index = index

    def __call__(self, s):
        if isinstance(s, Jet):
            derivs = self.traj.taylor_at(float(s.value), s.order)
            return apply_taylor(derivs[self.index], s)
        return float(self.traj.vector_at(float(s))[self.index])


def trajectory_spec(traj: Trajectory, name: str = "trajectory") -> WarpedSpec:
    """Warped-product spec whose warps and potential are the trajectory itself."""
    k = traj.k
    warps = tuple(TrajectoryFunction(traj, 2 + i) for i in range(k))
    return WarpedSpec((float(traj.s[0]), float(traj.s[-1])), traj.fibers, warps,
                      TrajectoryFunction(traj, 0), traj.lam, name)


def known_solution(name: str, n: int, lam: float, s0: float | None = None) -> tuple[WarpedSpec, SolitonState]:
    """Closed-form fixtures over one fiber of dimension ``n - 1``.

    gaussian: flat space in polar form, ``h = s``, ``f = lam s^2 / 2``;
    cylinder: ``h = 1`` over a sphere with ``Ric = lam g``, ``f = lam s^2 / 2``;
    sphere: ``h = sin s`` over the unit sphere, ``f = 0``, ``lam = n - 1``.
    """
    if n < 4:
        raise ValueError("known solutions need n >= 4")
    r = n - 1
    lam = float(lam)
    if name == "gaussian":
        fiber = FiberSpec(r, float(r - 1), "sphere")
        warp, interval, anchor = ClosedForm.make("linear"), (0.01, 50.0), 1.0
        potential = ClosedForm.make("quadratic", a=lam / 2)
    elif name == "cylinder":
        if lam <= 0:
            raise ValueError("the round cylinder is a shrinker: lambda must be positive")
        fiber = FiberSpec(r, lam, "sphere")
        warp, interval, anchor = ClosedForm.make("const"), (-50.0, 50.0), 1.0
        potential = ClosedForm.make("quadratic", a=lam / 2)
    elif name == "sphere":
        if abs(lam - (n - 1)) > 1e-12:
            raise ValueError(f"the unit sphere needs lambda = n - 1 = {n - 1}, got {lam}")
        fiber = FiberSpec(r, float(r - 1), "sphere")
        warp, interval, anchor = ClosedForm.make("sin"), (0.01, math.pi - 0.01), math.pi / 2
        potential = ClosedForm.make("zero")
    else:
        raise ValueError(f"unknown known solution '{name}' (choose from {KNOWN_CASES})")
    s0 = anchor if s0 is None else float(s0)
    spec = WarpedSpec(interval, (fiber,), (warp,), potential, lam, name)
    spec.check(s0)
    (t,) = Jet.variables([s0], 1)
    h = warp(t)
    f = potential(t)
    state = SolitonState(s0, float(f.value), f.derivative((1,)), (float(h.value),), (h.derivative((1,)),))
    return spec, state


def conserved_drift(traj: Trajectory, lam: float | None = None) -> float:
    """``max |Q(s) - Q(s_0)|`` for ``Q = R + f'^2 - 2 lam f`` along the trajectory."""
    lam = traj.lam if lam is None else float(lam)
    dims = [f.dim for f in traj.fibers]
    kappas = [f.einstein_const for f in traj.fibers]
    k = traj.k
    q = []
    for y in traj.y:
        d = _derivative(list(y), dims, kappas, traj.lam)
        base, fib = ricci_terms(y[2 : 2 + k], y[2 + k :], d[2 + k :], dims, kappas)
        scalar = base + sum(r * v for r, v in zip(dims, fib))
        q.append(scalar + y[1] ** 2 - 2 * lam * y[0])
    q = np.array(q)
    return float(np.max(np.abs(q - q[0])))


def random_initial_data(rng: np.random.Generator, n: int, k: int, lam: float | None = None, s0: float = 0.0,
                        span: float = 1.0, ctrl: IntegrationControl | None = None, max_tries: int = 200,
                        bound: float = 10.0):
    """Seeded harmonic-Weyl soliton initial data with ``k`` fibers in total dimension ``n``.

    One fiber: ``h in [0.5, 2]``, ``xi in [-1, 1]``, ``f' in [0.5, 2]`` and a
    random Einstein constant; every such trajectory has harmonic Weyl tensor.
    Two fibers: the harmonic-Weyl condition is not preserved by the flow for
    generic data, so the draw picks one of the two-fiber families that satisfy
    it: proportional warps (split of a one-fiber solution) or, for
    ``lam > 0``, a flat factor ``h_1 = a s + b`` times an Einstein factor with
    constant ``h_2``.  ``lam`` is drawn from {-1, 0, 1} unless given.
    Draws that hit an event within ``span``, let ``|f'|`` drop below 0.1 or
    let any state component exceed ``bound`` (finite-time blow-up) are rejected.
    Returns ``(fibers, state, lam)``.
    """
    ctrl = replace(ctrl or IntegrationControl(), max_abs=bound)
    if k not in (1, 2):
        raise ValueError("random data are provided for one or two fibers")
    if n < 4:
        raise ValueError("n must be >= 4")
    for _ in range(max_tries):
        lam_i = float(rng.choice([-1.0, 0.0, 1.0])) if lam is None else float(lam)
        if k == 1:
            fibers, state = _draw_one_fiber(rng, n, lam_i, s0)
        elif lam_i <= 0 or rng.random() < 0.5:
            fibers, state = _draw_proportional(rng, n, lam_i, s0)
        else:
            fibers, state = _draw_flat_times_einstein(rng, n, lam_i, s0)
        traj = integrate(state, fibers, lam_i, (s0, s0 + span), ctrl)
        if traj.complete and np.min(np.abs(traj.y[:, 1])) > 0.1:
            return fibers, state, lam_i
    raise RuntimeError("no admissible initial data found; widen the sampling ranges")


def _model(r: int, kappa: float) -> FiberSpec:
    if r == 1 or kappa == 0.0:
        return FiberSpec(r, 0.0, "flat")
    return FiberSpec(r, kappa, "sphere" if kappa > 0 else "hyperbolic")


def _draw_one_fiber(rng, n, lam, s0):
    r = n - 1
    h = rng.uniform(0.5, 2.0)
    xi = rng.uniform(-1.0, 1.0)
    fp = rng.uniform(0.5, 2.0)
    kappa = float(rng.uniform(-1.0, 1.0) * (r - 1))
    return (_model(r, kappa),), SolitonState(s0, 0.0, fp, (h,), (xi * h,))


def _draw_proportional(rng, n, lam, s0):
    # N_1 x N_2 with metric g_1 + c^2 g_2 is Einstein with constant kappa when
    # kappa_2 = kappa c^2, so h_2 = c h_1 reproduces a one-fiber solution.
    r = n - 1
    r1 = int(rng.integers(1, r))
    r2 = r - r1
    (fiber,), state = _draw_one_fiber(rng, n, lam, s0)
    kappa = 0.0 if min(r1, r2) == 1 else fiber.einstein_const
    c = rng.uniform(0.5, 2.0)
    h1, hp1 = state.h[0], state.hp[0]
    fibers = (_model(r1, kappa), _model(r2, kappa * c * c))
    return fibers, SolitonState(s0, 0.0, state.fp, (h1, c * h1), (hp1, c * hp1))


def _draw_flat_times_einstein(rng, n, lam, s0):
    r = n - 1
    r2 = int(rng.integers(2, r))  # Einstein factor needs dimension >= 2
    r1 = r - r2
    fp = rng.uniform(0.5, 2.0)
    h1 = rng.uniform(0.5, 2.0)
    h2 = rng.uniform(0.5, 2.0)
    xi1 = lam / fp
    a = xi1 * h1
    fibers = (_model(r1, (r1 - 1) * a * a), _model(r2, lam * h2 * h2))
    return fibers, SolitonState(s0, 0.0, fp, (h1, h2), (a, 0.0))
