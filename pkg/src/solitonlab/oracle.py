"""Ground-truth curvature from raw metric components on a coordinate chart.

Everything here starts from ``metric_fn`` (and optionally ``potential_fn``) and
never looks at closed-form warped-product formulas.  Derivatives come from a
:class:`DualEngine` (forward-mode Taylor jets, exact to rounding) or from a
:class:`FiniteDifferenceEngine` (central differences, optionally Richardson
refined).  Both engines produce a Taylor jet of the metric, and one shared
pipeline turns that jet into Christoffel symbols, curvature and covariant
derivatives.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import (
    DegenerateGradientError,
    DimensionError,
    DomainError,
    MissingPotentialError,
    SingularMetricError,
)
from .jets import Jet, JetSpace, jet_einsum, jet_inverse, stack
from .tensors import CurvTensor4, SymTensor2, Tensor3, norm_squared, weyl_components

__all__ = [
    "MetricChart",
    "DualEngine",
    "FiniteDifferenceEngine",
    "PointGeometry",
    "CurvaturePack",
    "christoffel",
    "riemann",
    "curvature_pack",
    "hessian",
    "soliton_residual",
    "bari_residual",
    "scalar_laplacian",
    "sectional_curvature",
    "GRADIENT_FLOOR",
]

GRADIENT_FLOOR = 1e-8


@dataclass(frozen=True)
class MetricChart:
    """A metric (and optional potential) given by component functions on a box.

    ``metric_fn`` maps a list of ``dim`` coordinates to an ``dim x dim`` nested
    sequence.  It must be written with numpy/arithmetic operations only, so that it
    accepts floats as well as :class:`~solitonlab.jets.Jet` coordinates.
    """

    dim: int
    lower: np.ndarray
    upper: np.ndarray
    metric_fn: Callable
    potential_fn: Callable | None = None
    name: str = "chart"

    def __post_init__(self) -> None:
        lo = np.asarray(self.lower, dtype=float).reshape(-1)
        hi = np.asarray(self.upper, dtype=float).reshape(-1)
        if lo.size != self.dim or hi.size != self.dim:
            raise DimensionError("domain box does not match chart dimension")
        if np.any(lo >= hi):
            raise ValueError("chart domain box is empty")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def metric(self, x: Sequence[float]) -> np.ndarray:
        return np.asarray(self.metric_fn(list(np.asarray(x, dtype=float))), dtype=float)

    def with_potential(self, potential_fn: Callable | None) -> "MetricChart":
        return MetricChart(self.dim, self.lower, self.upper, self.metric_fn, potential_fn, self.name)


def _check_inside(chart: MetricChart, x: np.ndarray, margin: float) -> None:
    if x.shape != (chart.dim,):
        raise DimensionError(f"point has shape {x.shape}, chart dimension is {chart.dim}")
    if np.any(x - chart.lower <= margin) or np.any(chart.upper - x <= margin):
        raise DomainError(
            f"point {x.tolist()} is within {margin:g} of the boundary of chart '{chart.name}'"
        )


@dataclass(frozen=True)
class DualEngine:
    """Forward-mode derivatives via truncated Taylor jets (machine precision)."""

    mode: str = field(default="dual", init=False)
    max_order: int = 4

    def margin(self) -> float:
        return 0.0

    def taylor(self, fn: Callable, x: np.ndarray, order: int) -> Jet:
        if order > self.max_order:
            raise ValueError(f"derivative depth {order} exceeds engine limit {self.max_order}")
        seeds = Jet.variables(x, order)
        out = fn(seeds)
        if isinstance(out, Jet):
            return out
        arr = np.asarray(out, dtype=object)
        if arr.ndim == 0:
            return Jet.constant(seeds[0].space, float(out), order)
        return stack(arr, like=seeds[0])


# one-dimensional central stencils of second-order accuracy, keyed by derivative order
_STENCILS = {
    0: {0: 1.0},
    1: {-1: -0.5, 1: 0.5},
    2: {-1: 1.0, 0: -2.0, 1: 1.0},
    3: {-2: -0.5, -1: 1.0, 1: -1.0, 2: 0.5},
    4: {-2: 1.0, -1: -4.0, 0: 6.0, 1: -4.0, 2: 1.0},
}


@dataclass(frozen=True)
class FiniteDifferenceEngine:
    """Central-difference Taylor coefficients, O(step^2) (O(step^4) with Richardson)."""

    step: float = 1e-3
    richardson: bool = False
    mode: str = field(default="fd", init=False)
    max_order: int = 4

    def margin(self) -> float:
        # stencils reach two steps out; keep four steps of clearance
        return 4.0 * self.step

    def _coefficients(self, fn: Callable, x: np.ndarray, order: int, h: float, space: JetSpace):
        cache: dict[tuple[int, ...], np.ndarray] = {}

        def value(offset: tuple[int, ...]) -> np.ndarray:
            if offset not in cache:
                cache[offset] = np.asarray(fn(list(x + h * np.asarray(offset))), dtype=float)
            return cache[offset]

        coeffs = []
        for k, m in enumerate(space.monomials[: space.sizes[order]]):
            axes = [v for v in range(len(m)) if m[v] > 0]
            stencils = [_STENCILS[m[v]] for v in axes]
            total = 0.0
            for combo in itertools.product(*(s.items() for s in stencils)):
                offset = [0] * len(m)
                weight = 1.0
                for v, (off, w) in zip(axes, combo):
                    offset[v] = off
                    weight *= w
                total = total + weight * value(tuple(offset))
            coeffs.append(total / h ** sum(m) / space.factorials[k])
        return np.stack([np.asarray(c, dtype=float) for c in coeffs], axis=-1)

    def taylor(self, fn: Callable, x: np.ndarray, order: int) -> Jet:
        if order > self.max_order:
            raise ValueError(f"derivative depth {order} exceeds engine limit {self.max_order}")
        space = Jet.variables(x, order)[0].space
        c = self._coefficients(fn, x, order, self.step, space)
        if self.richardson:
            fine = self._coefficients(fn, x, order, 0.5 * self.step, space)
            c = (4.0 * fine - c) / 3.0
        return Jet(space, c, order)


DEFAULT_ENGINE = DualEngine()


@dataclass(frozen=True)
class CurvaturePack:
    rm: CurvTensor4
    ric: SymTensor2
    scalar: float
    weyl: CurvTensor4 | None
    cotton: Tensor3 | None
    weyl_divergence: np.ndarray | None = None


class PointGeometry:
    """Lazily evaluated curvature quantities of a chart at one point.

    ``depth`` is the number of metric derivatives carried; quantities that need
    more raise ``ValueError``.  Jets lose one order per differentiation, so
    Christoffel symbols need depth 1, curvature 2, Cotton 3 and ``Delta R`` 4.
    """

    def __init__(self, chart: MetricChart, x, engine=None, depth: int = 3) -> None:
        self.chart = chart
        self.engine = engine or DEFAULT_ENGINE
        self.x = np.asarray(x, dtype=float).reshape(-1)
        self.depth = depth
        self.n = chart.dim
        _check_inside(chart, self.x, self.engine.margin())
        self.g = self.engine.taylor(chart.metric_fn, self.x, depth)
        g0 = self.g.value
        if not np.all(np.isfinite(g0)):
            raise SingularMetricError(f"non-finite metric at {self.x.tolist()}")
        w = np.linalg.eigvalsh(0.5 * (g0 + g0.T))
        if w[0] <= 1e-12 * max(1.0, abs(w[-1])):
            raise SingularMetricError(f"metric is singular or indefinite at {self.x.tolist()}")

    def _need(self, depth: int, what: str) -> None:
        if self.depth < depth:
            raise ValueError(f"{what} needs derivative depth {depth}, geometry built with {self.depth}")

    @cached_property
    def ginv(self) -> Jet:
        return jet_inverse(self.g)

    @cached_property
    def gamma(self) -> Jet:
        """Christoffel symbols ``gamma[k, i, j]`` (upper index first)."""
        self._need(1, "Christoffel symbols")
        dg = self.g.gradient()  # dg[i, j, a] = d_a g_ij
        lowered = (dg.transpose(2, 0, 1) + dg.transpose(0, 2, 1) - dg) * 0.5
        # lowered[i, j, l] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij)
        return jet_einsum("kl,ijl->kij", self.ginv, lowered)

    @cached_property
    def rm(self) -> Jet:
        self._need(2, "Riemann tensor")
        gam = self.gamma
        dgam = gam.gradient()  # dgam[l, i, k, a] = d_a Gamma^l_ik
        quad = jet_einsum("lim,mjk->lijk", gam, gam)  # Gamma^l_im Gamma^m_jk
        # R^l_{kij} = d_i G^l_jk - d_j G^l_ik + G^l_im G^m_jk - G^l_jm G^m_ik
        up = (
            jet_einsum("ljki->lkij", dgam)
            - jet_einsum("likj->lkij", dgam)
            + jet_einsum("lijk->lkij", quad)
            - jet_einsum("ljik->lkij", quad)
        )
        return jet_einsum("kp,plij->ijkl", self.g, up)

    @cached_property
    def ric(self) -> Jet:
        return jet_einsum("ik,ijkl->jl", self.ginv, self.rm)

    @cached_property
    def scalar(self) -> Jet:
        return jet_einsum("jl,jl->", self.ginv, self.ric)

    @cached_property
    def weyl(self) -> Jet:
        if self.n < 4:
            raise DimensionError("Weyl tensor requires n >= 4")
        return weyl_components(self.rm, self.ric, self.scalar, self.g, jet_einsum)

    def covariant_derivative(self, t: Jet) -> Jet:
        """``(nabla t)[a, i1, ..., ir]`` for a covariant tensor jet ``t``."""
        k = t.ndim
        dt = t.gradient()
        out = dt.transpose(k, *range(k))
        gam = self.gamma
        letters = "ijklpq"[:k]
        for slot in range(k):
            src = letters[:slot] + "m" + letters[slot + 1 :]
            out = out - jet_einsum(f"ma{letters[slot]},{src}->a{letters}", gam, t)
        return out

    @cached_property
    def nabla_ric(self) -> Jet:
        self._need(3, "covariant derivative of Ricci")
        return self.covariant_derivative(self.ric)

    @cached_property
    def cotton(self) -> Jet:
        """``C[a, b, c] = (nabla_a Ric)_bc - (nabla_b Ric)_ac - (a_R g_bc - b_R g_ac) / (2(n-1))``."""
        self._need(3, "Cotton tensor")
        nr = self.nabla_ric
        dR = self.scalar.gradient()
        g = self.g.truncate(nr.order)
        term = jet_einsum("a,bc->abc", dR, g)
        return nr - nr.transpose(1, 0, 2) - (term - term.transpose(1, 0, 2)) * (1.0 / (2 * (self.n - 1)))

    @cached_property
    def weyl_divergence(self) -> Jet:
        """``(div W)[j, k, l] = g^{ai} (nabla_a W)_{ijkl}``."""
        self._need(3, "divergence of Weyl")
        nw = self.covariant_derivative(self.weyl)
        return jet_einsum("ai,aijkl->jkl", self.ginv, nw)

    @cached_property
    def metric_compatibility(self) -> np.ndarray:
        """Components of ``nabla g``; vanish for the Levi-Civita connection."""
        return self.covariant_derivative(self.g).value

    # -- potential -----------------------------------------------------------------

    @cached_property
    def f(self) -> Jet:
        if self.chart.potential_fn is None:
            raise MissingPotentialError(f"chart '{self.chart.name}' has no potential")
        return self.engine.taylor(self.chart.potential_fn, self.x, self.depth)

    def hessian_of(self, u: Jet) -> Jet:
        du = u.gradient()
        ddu = du.gradient()
        return ddu - jet_einsum("kij,k->ij", self.gamma, du)

    @cached_property
    def hess_f(self) -> Jet:
        self._need(2, "Hessian")
        return self.hessian_of(self.f)

    @cached_property
    def grad_f(self) -> np.ndarray:
        """Contravariant gradient ``g^{ij} d_j f`` at the point."""
        return self.ginv.value @ self.f.gradient().value

    @cached_property
    def laplacian_scalar_curvature(self) -> float:
        self._need(4, "Laplacian of scalar curvature")
        return float(jet_einsum("ij,ij->", self.ginv, self.hessian_of(self.scalar)).value)


def christoffel(chart: MetricChart, x, engine=None) -> np.ndarray:
    """Christoffel symbols ``Gamma[k, i, j]`` of the Levi-Civita connection at ``x``."""
    return PointGeometry(chart, x, engine, depth=1).gamma.value


def riemann(chart: MetricChart, x, engine=None) -> CurvTensor4:
    """Fully covariant curvature tensor at ``x`` (sphere-positive sign)."""
    return CurvTensor4(PointGeometry(chart, x, engine, depth=2).rm.value)


def sectional_curvature(rm, g, u, v) -> float:
    rm, g = np.asarray(rm), np.asarray(g)
    num = np.einsum("ijkl,i,j,k,l->", rm, u, v, u, v)
    area = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    return float(num / area)


def curvature_pack(chart: MetricChart, x, engine=None, with_divergence: bool = False) -> CurvaturePack:
    """Riemann, Ricci, scalar, Weyl and Cotton tensors at ``x``.

    Weyl and Cotton are returned as ``None`` for ``n = 3``.  The Cotton tensor
    needs third metric derivatives; the finite-difference engine obtains them
    from five-point stencils, so expect O(step^2) errors there.
    """
    geo = PointGeometry(chart, x, engine, depth=3 if chart.dim >= 4 else 2)
    rm = CurvTensor4(geo.rm.value)
    ric = SymTensor2(geo.ric.value)
    scalar = float(geo.scalar.value)
    if chart.dim < 4:
        return CurvaturePack(rm, ric, scalar, None, None)
    div = geo.weyl_divergence.value if with_divergence else None
    return CurvaturePack(rm, ric, scalar, CurvTensor4(geo.weyl.value), Tensor3(geo.cotton.value), div)


def hessian(chart: MetricChart, x, engine=None) -> SymTensor2:
    """Covariant Hessian ``d_i d_j f - Gamma^k_ij d_k f`` of the chart potential."""
    if chart.potential_fn is None:
        raise MissingPotentialError(f"chart '{chart.name}' has no potential")
    return SymTensor2(PointGeometry(chart, x, engine, depth=2).hess_f.value)


def soliton_residual(chart: MetricChart, lam: float, x, engine=None) -> SymTensor2:
    """``Ric + Hess f - lam g``; vanishes on gradient Ricci soliton data."""
    if chart.potential_fn is None:
        raise MissingPotentialError(f"chart '{chart.name}' has no potential")
    geo = PointGeometry(chart, x, engine, depth=2)
    return SymTensor2(geo.ric.value + geo.hess_f.value - lam * geo.g.value)


def bari_tensor(geo: PointGeometry) -> np.ndarray:
    """``Rm(grad f, X, Y, Z) - (Ric(grad f, Y) g(X, Z) - Ric(grad f, Z) g(X, Y)) / (n - 1)``."""
    grad = geo.grad_f
    g = geo.g.value
    rm = geo.rm.value
    ric_f = geo.ric.value @ grad
    lhs = np.einsum("p,pabc->abc", grad, rm)
    rhs = (np.einsum("b,ac->abc", ric_f, g) - np.einsum("c,ab->abc", ric_f, g)) / (geo.n - 1)
    return lhs - rhs


def bari_residual(chart: MetricChart, x, engine=None, floor: float = GRADIENT_FLOOR) -> float:
    """Max component of the gradient-curvature identity that characterises zero Cotton.

    On a gradient Ricci soliton the Cotton tensor vanishes exactly when
    ``Rm(grad f, X, Y, Z) = (Ric(grad f, Y) g(X, Z) - Ric(grad f, Z) g(X, Y)) / (n-1)``
    for all coordinate vectors.  Points with ``|grad f| < floor`` are refused with
    :class:`DegenerateGradientError`, since the identity is vacuous there.
    """
    if chart.potential_fn is None:
        raise MissingPotentialError(f"chart '{chart.name}' has no potential")
    geo = PointGeometry(chart, x, engine, depth=2)
    grad = geo.grad_f
    norm = math.sqrt(max(0.0, float(grad @ geo.g.value @ grad)))
    if norm < floor:
        raise DegenerateGradientError(f"|grad f| = {norm:.3e} below {floor:g} at {geo.x.tolist()}")
    return float(np.max(np.abs(bari_tensor(geo))))


def scalar_laplacian(chart: MetricChart, x, engine=None) -> float:
    """``Delta R = g^{ij} (nabla^2 R)_ij`` (needs fourth metric derivatives)."""
    return PointGeometry(chart, x, engine, depth=4).laplacian_scalar_curvature


def invariants(chart: MetricChart, x, engine=None) -> dict[str, float]:
    """Coordinate-independent scalars: R, |Ric|^2, |W|^2, and the Ricci spectrum."""
    from .tensors import generalized_eigenvalues

    geo = PointGeometry(chart, x, engine, depth=2)
    g = geo.g.value
    out = {
        "scalar": float(geo.scalar.value),
        "ricci_norm2": norm_squared(geo.ric.value, g),
        "ricci_spectrum": generalized_eigenvalues(geo.ric.value, g),
    }
    if chart.dim >= 4:
        out["weyl_norm2"] = norm_squared(geo.weyl.value, g)
    return out
