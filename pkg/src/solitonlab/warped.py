"""Multiply warped products ``I x_{h_1} N_1^{r_1} x ... x_{h_k} N_k^{r_k}`` over a line.

Closed-form connection and Ricci data for the metric ``ds^2 + sum_i h_i(s)^2 g_{N_i}``
with Einstein fibers ``Ric_{N_i} = kappa_i g_{N_i}``, and its realisation as an
explicit :class:`~solitonlab.oracle.MetricChart` for independent cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from . import charts
from .errors import DimensionError, DomainError
from .jets import Jet, apply_taylor, univariate_derivatives
from .oracle import MetricChart, PointGeometry

__all__ = [
    "ClosedForm",
    "SampledFunction",
    "FiberSpec",
    "WarpedSpec",
    "RicciSpectrum",
    "connection_summary",
    "ricci_closed_form",
    "scalar_closed_form",
    "to_chart",
    "fiber_count",
    "along_s",
    "ricci_terms",
    "rescale_fiber",
]

FIBER_MODELS = ("sphere", "flat", "hyperbolic", "custom")


def _const(s, c=1.0):
    return c * (s * 0.0 + 1.0) if isinstance(s, Jet) else float(c)


_CLOSED_FORMS: dict[str, Callable] = {
    "const": _const,
    "zero": lambda s: _const(s, 0.0),
    "linear": lambda s, a=1.0, b=0.0: a * s + b,
    "quadratic": lambda s, a=1.0, b=0.0, c=0.0: a * s * s + b * s + c,
    "cubic": lambda s, a=1.0: a * s * s * s,
    "sin": lambda s, a=1.0, w=1.0, phase=0.0: a * np.sin(w * s + phase),
    "cos": lambda s, a=1.0, w=1.0, phase=0.0: a * np.cos(w * s + phase),
    "sinh": lambda s, a=1.0, w=1.0: a * np.sinh(w * s),
    "cosh": lambda s, a=1.0, w=1.0: a * np.cosh(w * s),
    "exp": lambda s, a=1.0, w=1.0: a * np.exp(w * s),
    "tanh": lambda s, a=1.0, w=1.0: a * np.tanh(w * s),
}


@dataclass(frozen=True)
class ClosedForm:
    """Named closed-form function of ``s``; serialisable and jet-compatible."""

    name: str
    params: tuple[tuple[str, float], ...] = ()

    def __post_init__(self) -> None:
        if self.name not in _CLOSED_FORMS:
            raise ValueError(f"unknown closed form '{self.name}' (known: {sorted(_CLOSED_FORMS)})")
        params = tuple(sorted((str(k), float(v)) for k, v in dict(self.params).items()))
        object.__setattr__(self, "params", params)
        self(1.0)  # reject bad parameter names early

    @classmethod
    def make(cls, name: str, **params: float) -> "ClosedForm":
        return cls(name, tuple(params.items()))

    def __call__(self, s):
        return _CLOSED_FORMS[self.name](s, **dict(self.params))

    def to_dict(self) -> dict:
        return {"kind": "closed_form", "name": self.name, "params": dict(self.params)}

    @staticmethod
    def names() -> list[str]:
        return sorted(_CLOSED_FORMS)


class SampledFunction:
    """Cubic-spline function of ``s`` built from samples.

    Derivatives are those of the spline: O(ds^2) accurate for the second
    derivative and piecewise constant for the third, so sampled warps are
    unsuitable for tight-tolerance curvature checks.
    """

    def __init__(self, s: Sequence[float], values: Sequence[float]) -> None:
        s = np.asarray(s, dtype=float)
        values = np.asarray(values, dtype=float)
        if s.ndim != 1 or s.shape != values.shape or s.size < 4:
            raise ValueError("sampled function needs matching 1-d arrays with at least 4 points")
        if np.any(np.diff(s) <= 0):
            raise ValueError("sample abscissae must be strictly increasing")
        self.s = s
        self.values = values
        self._spline = CubicSpline(s, values)

    def __call__(self, s):
        if isinstance(s, Jet):
            s0 = float(s.value)
            derivs = [float(self._spline(s0, nu=k)) for k in range(min(s.order, 3) + 1)]
            return apply_taylor(derivs, s)
        return float(self._spline(float(s)))

    def to_dict(self) -> dict:
        return {"kind": "samples", "s": self.s.tolist(), "values": self.values.tolist()}


@dataclass(frozen=True)
class FiberSpec:
    """Einstein fiber ``N^r`` with ``Ric_N = einstein_const * g_N``.

    ``model`` selects the chart used by :func:`to_chart`: a round sphere or a
    hyperbolic ball of the radius matching ``einstein_const``, flat space, or a
    user-supplied ``chart`` (``model="custom"``).
    """

    dim: int
    einstein_const: float = 0.0
    model: str = "flat"
    chart: MetricChart | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise DimensionError("fiber dimension must be >= 1")
        if self.model not in FIBER_MODELS:
            raise ValueError(f"unknown fiber model '{self.model}'")
        kappa = float(self.einstein_const)
        object.__setattr__(self, "einstein_const", kappa)
        if self.dim == 1 and kappa != 0.0:
            raise ValueError("one-dimensional fibers have zero Einstein constant")
        if self.model == "sphere" and not kappa > 0:
            raise ValueError("sphere fiber needs a positive Einstein constant")
        if self.model == "hyperbolic" and not kappa < 0:
            raise ValueError("hyperbolic fiber needs a negative Einstein constant")
        if self.model == "flat" and kappa != 0.0:
            raise ValueError("flat fiber needs zero Einstein constant")
        if self.model == "custom":
            if self.chart is None:
                raise ValueError("custom fiber model needs a chart")
            if self.chart.dim != self.dim:
                raise DimensionError("custom fiber chart dimension does not match fiber dimension")

    @property
    def mu(self) -> float:
        """Normalised constant with ``Ric_N = (r - 1) mu g_N`` (0 for r = 1)."""
        return self.einstein_const / (self.dim - 1) if self.dim > 1 else 0.0

    def fiber_chart(self) -> MetricChart:
        r, kappa = self.dim, self.einstein_const
        if self.model == "sphere":
            return charts.sphere_stereographic(r, math.sqrt((r - 1) / kappa))
        if self.model == "hyperbolic":
            return charts.hyperbolic_ball(r, math.sqrt(-(r - 1) / kappa))
        if self.model == "flat":
            return MetricChart(r, [-1.0] * r, [1.0] * r, charts._conformally_flat(r, lambda y: 1.0),
                               name=f"flat{r}")
        return self.chart

    def einstein_defect(self, x=None) -> float:
        """Max |Ric_N - kappa g_N| of the model chart at ``x`` (chart centre by default)."""
        chart = self.fiber_chart()
        if self.dim == 1:
            return 0.0
        geo = PointGeometry(chart, chart.center if x is None else x, depth=2)
        return float(np.max(np.abs(geo.ric.value - self.einstein_const * geo.g.value)))

    def to_dict(self) -> dict:
        return {"dim": self.dim, "einstein_const": self.einstein_const, "model": self.model}


def _zero_potential(s):
    return _const(s, 0.0)


@dataclass(frozen=True)
class WarpedSpec:
    """Base interval, Einstein fibers, warping functions, potential and soliton constant."""

    interval: tuple[float, float]
    fibers: tuple[FiberSpec, ...]
    warps: tuple[Callable, ...]
    potential: Callable = _zero_potential
    lam: float = 0.0
    name: str = "warped"

    def __post_init__(self) -> None:
        a, b = (float(v) for v in self.interval)
        if not a < b:
            raise ValueError("interval must satisfy s_min < s_max")
        object.__setattr__(self, "interval", (a, b))
        object.__setattr__(self, "fibers", tuple(self.fibers))
        object.__setattr__(self, "warps", tuple(self.warps))
        if len(self.fibers) != len(self.warps):
            raise DimensionError("one warping function per fiber is required")
        if not self.fibers:
            raise DimensionError("at least one fiber is required")
        if self.n < 4:
            raise DimensionError(f"total dimension n = {self.n} must be >= 4")
        for i, w in enumerate(self.warps):
            vals = np.array([float(w(s)) for s in np.linspace(a, b, 33)])
            if not np.all(vals > 0):
                raise ValueError(f"warp {i} is not positive on the interval")

    @property
    def n(self) -> int:
        return 1 + sum(f.dim for f in self.fibers)

    @property
    def k(self) -> int:
        return len(self.fibers)

    @property
    def dims(self) -> np.ndarray:
        return np.array([f.dim for f in self.fibers], dtype=float)

    @property
    def kappas(self) -> np.ndarray:
        return np.array([f.einstein_const for f in self.fibers], dtype=float)

    def check(self, s: float) -> float:
        s = float(s)
        a, b = self.interval
        if not a <= s <= b:
            raise DomainError(f"s = {s} outside interval [{a}, {b}]")
        return s


@dataclass(frozen=True)
class RicciSpectrum:
    base: float
    fibers: tuple[float, ...]
    multiplicities: tuple[int, ...]

    def eigenvalues(self) -> list[float]:
        """Full multiset: the base eigenvalue once, each fiber value with multiplicity."""
        out = [self.base]
        for lam_i, r in zip(self.fibers, self.multiplicities):
            out.extend([lam_i] * r)
        return out


def warp_derivatives(spec: WarpedSpec, s: float, order: int = 2) -> np.ndarray:
    """``out[i, m] = h_i^(m)(s)`` by forward-mode differentiation of each warp."""
    return np.array([univariate_derivatives(w, s, order) for w in spec.warps])


def ricci_terms(h, hp, hpp, dims, kappas):
    """Base and fiber Ricci eigenvalues from warp values; floats or jets.

    ``lambda_base = -sum r_i h_i''/h_i``;
    ``lambda_i = kappa_i/h_i^2 - h_i''/h_i - (r_i - 1) xi_i^2 - xi_i sum_{l != i} r_l xi_l``.
    """
    k = len(h)
    xi = [hp[i] / h[i] for i in range(k)]
    acc = [hpp[i] / h[i] for i in range(k)]
    base = -sum(dims[i] * acc[i] for i in range(k))
    fib = []
    for i in range(k):
        cross = sum(dims[l] * xi[l] for l in range(k) if l != i)
        fib.append(kappas[i] / (h[i] * h[i]) - acc[i] - (dims[i] - 1) * xi[i] * xi[i] - xi[i] * cross)
    return base, fib


def connection_summary(spec: WarpedSpec, s: float) -> np.ndarray:
    """Logarithmic derivatives ``xi_i = h_i'/h_i``; they fix every mixed connection term."""
    d = warp_derivatives(spec, spec.check(s), 1)
    return d[:, 1] / d[:, 0]


def ricci_closed_form(spec: WarpedSpec, s: float) -> RicciSpectrum:
    d = warp_derivatives(spec, spec.check(s), 2)
    base, fib = ricci_terms(d[:, 0], d[:, 1], d[:, 2], spec.dims, spec.kappas)
    return RicciSpectrum(float(base), tuple(float(v) for v in fib), tuple(f.dim for f in spec.fibers))


def scalar_closed_form(spec: WarpedSpec, s: float) -> float:
    """``R = lambda_base + sum_i r_i lambda_i``."""
    spec_r = ricci_closed_form(spec, s)
    return spec_r.base + sum(r * v for r, v in zip(spec_r.multiplicities, spec_r.fibers))


def along_s(spec: WarpedSpec, s: float, order: int) -> dict:
    """Univariate jets in ``s`` of warps, potential and curvature.

    Returns jets for ``h``, ``hp``, ``hpp`` (lists), ``f``, ``fp``, ``fpp``,
    ``lambda1``, ``lambda_fib`` (list) and ``R``; a jet built from an order-``m``
    input retains ``m - (number of derivatives taken)`` orders.
    """
    (t,) = Jet.variables([spec.check(s)], order)
    h = [w(t) for w in spec.warps]
    h = [x if isinstance(x, Jet) else Jet.constant(t.space, x, order) for x in h]
    hp = [x.partial(0) for x in h]
    hpp = [x.partial(0) for x in hp]
    f = spec.potential(t)
    f = f if isinstance(f, Jet) else Jet.constant(t.space, f, order)
    fp = f.partial(0)
    base, fib = ricci_terms(h, hp, hpp, spec.dims, spec.kappas)
    R = base + sum(r * v for r, v in zip(spec.dims, fib))
    return {"h": h, "hp": hp, "hpp": hpp, "f": f, "fp": fp, "fpp": fp.partial(0),
            "lambda1": base, "lambda_fib": fib, "R": R}


def to_chart(spec: WarpedSpec) -> MetricChart:
    """Explicit chart ``(s, y_1, ..., y_k)`` with metric ``ds^2 + sum h_i(s)^2 g_{N_i}(y_i)``."""
    fiber_charts = [f.fiber_chart() for f in spec.fibers]
    n = spec.n
    offsets = np.cumsum([1] + [c.dim for c in fiber_charts])
    warps = spec.warps

    def metric(x):
        s = x[0]
        g = [[0.0] * n for _ in range(n)]
        g[0][0] = 1.0
        for i, fc in enumerate(fiber_charts):
            o = offsets[i]
            h = warps[i](s)
            hh = h * h
            gn = fc.metric_fn(x[o : o + fc.dim])
            for a in range(fc.dim):
                for b in range(fc.dim):
                    if isinstance(gn[a][b], Jet) or gn[a][b] != 0.0:
                        g[o + a][o + b] = hh * gn[a][b]
        return g

    def potential(x):
        return spec.potential(x[0])

    lower = np.concatenate([[spec.interval[0]]] + [c.lower for c in fiber_charts])
    upper = np.concatenate([[spec.interval[1]]] + [c.upper for c in fiber_charts])
    return MetricChart(n, lower, upper, metric, potential, name=f"{spec.name}-chart")


def fiber_count(spec: WarpedSpec, tol: float = 1e-6, samples: int = 64) -> int:
    """Number of fibers after absorbing constant warps and identifying proportional ones."""
    if samples < 16:
        raise ValueError("fiber_count needs at least 16 samples")
    a, b = spec.interval
    grid = np.linspace(a, b, samples + 2)[1:-1]
    logs = [np.log([float(w(s)) for s in grid]) for w in spec.warps]
    classes: list[np.ndarray] = []
    for lh in logs:
        if np.ptp(lh) < tol:
            continue
        if any(np.ptp(lh - rep) < tol for rep in classes):
            continue
        classes.append(lh)
    return len(classes)


def rescale_fiber(spec: WarpedSpec, i: int, c: float) -> WarpedSpec:
    """Replace ``h_i`` by ``c h_i`` and ``g_{N_i}`` by ``g_{N_i} / c^2`` (same metric)."""
    if c <= 0:
        raise ValueError("scale factor must be positive")
    old = spec.fibers[i]
    fib = FiberSpec(old.dim, old.einstein_const * c * c, old.model, old.chart)
    w = spec.warps[i]
    fibers = spec.fibers[:i] + (fib,) + spec.fibers[i + 1 :]
    warps = spec.warps[:i] + ((lambda s, w=w: c * w(s)),) + spec.warps[i + 1 :]
    return WarpedSpec(spec.interval, fibers, warps, spec.potential, spec.lam, spec.name)
