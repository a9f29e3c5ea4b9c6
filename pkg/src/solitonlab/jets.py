"""Truncated multivariate Taylor arithmetic (forward-mode automatic differentiation).

A :class:`Jet` stores the Taylor coefficients of a tensor-valued function around a
point, up to total degree ``order`` in ``nvars`` variables.  Products are truncated,
so every operation is exact to machine precision for the retained coefficients.
Differentiating a jet lowers its order by one; the geometry code relies on this to
carry metric derivatives through Christoffel symbols, curvature and their covariant
derivatives without any hand-written product rules.

Elementary functions are reached through numpy ufuncs (``np.sin(jet)``), so chart
metrics written with numpy work on plain floats and on jets alike.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Jet",
    "JetSpace",
    "apply_taylor",
    "as_jet",
    "jet_einsum",
    "jet_inverse",
    "stack",
    "univariate_derivatives",
]


class JetSpace:
    """Monomial bookkeeping for jets in ``nvars`` variables up to ``max_order``."""

    def __init__(self, nvars: int, max_order: int) -> None:
        if nvars < 1 or max_order < 0:
            raise ValueError("JetSpace needs nvars >= 1 and max_order >= 0")
        self.nvars = nvars
        self.max_order = max_order
        monos: list[tuple[int, ...]] = []
        for deg in range(max_order + 1):
            # graded order: all degree-d monomials before degree d+1
            for combo in itertools.combinations_with_replacement(range(nvars), deg):
                m = [0] * nvars
                for v in combo:
                    m[v] += 1
                monos.append(tuple(m))
        monos_sorted: list[tuple[int, ...]] = []
        for deg in range(max_order + 1):
            monos_sorted.extend(sorted((m for m in monos if sum(m) == deg), reverse=True))
        self.monomials = monos_sorted
        self.index = {m: i for i, m in enumerate(self.monomials)}
        self.degree = np.array([sum(m) for m in self.monomials])
        self.sizes = [int(np.sum(self.degree <= o)) for o in range(max_order + 1)]
        self.factorials = np.array(
            [math.prod(math.factorial(k) for k in m) for m in self.monomials], dtype=float
        )
        self._mul = [self._product_table(o) for o in range(max_order + 1)]
        self._deriv = [
            [self._derivative_table(v, o) for o in range(max_order + 1)] for v in range(nvars)
        ]

    def _product_table(self, order: int):
        ia, ib, out = [], [], []
        size = self.sizes[order]
        for a in range(size):
            ma = self.monomials[a]
            for b in range(size):
                mb = self.monomials[b]
                if self.degree[a] + self.degree[b] > order:
                    continue
                ia.append(a)
                ib.append(b)
                out.append(self.index[tuple(x + y for x, y in zip(ma, mb))])
        perm = np.argsort(out, kind="stable")
        ia = np.asarray(ia)[perm]
        ib = np.asarray(ib)[perm]
        out = np.asarray(out)[perm]
        starts = np.flatnonzero(np.r_[True, out[1:] != out[:-1]])
        return ia, ib, starts

    def _derivative_table(self, var: int, order: int):
        if order == 0:
            return np.zeros(0, dtype=int), np.zeros(0)
        src, fac = [], []
        for m in self.monomials[: self.sizes[order - 1]]:
            up = list(m)
            up[var] += 1
            src.append(self.index[tuple(up)])
            fac.append(float(up[var]))
        return np.asarray(src), np.asarray(fac)


@lru_cache(maxsize=None)
def _space(nvars: int, max_order: int) -> JetSpace:
    return JetSpace(nvars, max_order)


class Jet:
    """Tensor-valued truncated Taylor polynomial.

    ``coeffs`` has shape ``tensor_shape + (space.sizes[order],)``.  Coefficients
    are Taylor coefficients (derivative divided by the multi-index factorial).
    """

    __slots__ = ("space", "order", "coeffs")
    __array_priority__ = 1000

    def __init__(self, space: JetSpace, coeffs: np.ndarray, order: int) -> None:
        if coeffs.shape[-1] != space.sizes[order]:
            raise ValueError("coefficient axis does not match jet order")
        self.space = space
        self.order = order
        self.coeffs = coeffs

    # -- construction -------------------------------------------------------------

    @classmethod
    def variables(cls, point: Sequence[float], order: int) -> list["Jet"]:
        """Seed jets ``x_i = point_i + dx_i`` for every coordinate."""
        point = np.asarray(point, dtype=float)
        space = _space(point.size, order)
        seeds = []
        for i, x in enumerate(point):
            c = np.zeros(space.sizes[order])
            c[0] = x
            if order >= 1:
                unit = [0] * point.size
                unit[i] = 1
                c[space.index[tuple(unit)]] = 1.0
            seeds.append(cls(space, c, order))
        return seeds

    @classmethod
    def constant(cls, space: JetSpace, value, order: int) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (space.sizes[order],))
        c[..., 0] = value
        return cls(space, c, order)

    @classmethod
    def from_derivatives(cls, space: JetSpace, derivs: dict, shape=(), order: int | None = None):
        """Build a jet from a mapping ``multi-index -> derivative value``."""
        order = space.max_order if order is None else order
        c = np.zeros(tuple(shape) + (space.sizes[order],))
        for m, d in derivs.items():
            k = space.index[tuple(m)]
            if k < c.shape[-1]:
                c[..., k] = np.asarray(d, dtype=float) / space.factorials[k]
        return cls(space, c, order)

    # -- basic views ----------------------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[:-1]

    @property
    def ndim(self) -> int:
        return self.coeffs.ndim - 1

    @property
    def value(self):
        v = self.coeffs[..., 0]
        return float(v) if v.ndim == 0 else v.copy()

    def __float__(self) -> float:
        return float(self.coeffs[..., 0])

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order}, value={self.value!r})"

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError("cannot raise the order of a jet")
        if order == self.order:
            return self
        return Jet(self.space, self.coeffs[..., : self.space.sizes[order]], order)

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        if any(i is Ellipsis for i in idx):
            raise IndexError("Ellipsis indexing is not supported on jets")
        return Jet(self.space, self.coeffs[idx + (slice(None),)], self.order)

    def __len__(self) -> int:
        return self.shape[0]

    def transpose(self, *axes: int) -> "Jet":
        return Jet(self.space, np.transpose(self.coeffs, tuple(axes) + (self.ndim,)), self.order)

    def reshape(self, *shape: int) -> "Jet":
        return Jet(self.space, self.coeffs.reshape(tuple(shape) + (self.coeffs.shape[-1],)), self.order)

    def derivative(self, multi_index: Sequence[int]):
        """Value of the partial derivative ``d^alpha`` at the expansion point."""
        m = tuple(multi_index)
        k = self.space.index[m]
        if sum(m) > self.order:
            raise ValueError(f"derivative of degree {sum(m)} exceeds jet order {self.order}")
        return self.coeffs[..., k] * self.space.factorials[k]

    # -- calculus -------------------------------------------------------------------

    def partial(self, var: int) -> "Jet":
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = self.space._deriv[var][self.order]
        return Jet(self.space, self.coeffs[..., src] * fac, self.order - 1)

    def gradient(self) -> "Jet":
        """Jet of all first partials; the derivative index is appended last."""
        parts = [self.partial(v).coeffs for v in range(self.space.nvars)]
        return Jet(self.space, np.stack(parts, axis=-2), self.order - 1)

    def antiderivative(self) -> "Jet":
        """Integral from the expansion point (single-variable jets only); order kept."""
        if self.space.nvars != 1:
            raise ValueError("antiderivative is only defined for univariate jets")
        c = np.zeros_like(self.coeffs)
        k = np.arange(1, self.coeffs.shape[-1])
        c[..., 1:] = self.coeffs[..., :-1] / k
        return Jet(self.space, c, self.order)

    # -- arithmetic -----------------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space is not self.space:
                raise ValueError("jets live in different spaces")
            order = min(self.order, other.order)
            return self.truncate(order), other.truncate(order)
        return self, Jet.constant(self.space, other, self.order)

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a.space, a.coeffs + b.coeffs, a.order)

    __radd__ = __add__

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a.space, a.coeffs - b.coeffs, a.order)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(a.space, b.coeffs - a.coeffs, a.order)

    def __neg__(self):
        return Jet(self.space, -self.coeffs, self.order)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self.space, self.coeffs * other[..., None], self.order)
        a, b = self._coerce(other)
        ia, ib, starts = a.space._mul[a.order]
        prod = a.coeffs[..., ia] * b.coeffs[..., ib]
        return Jet(a.space, np.add.reduceat(prod, starts, axis=-1), a.order)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            other = np.asarray(other, dtype=float)
            return Jet(self.space, self.coeffs / other[..., None], self.order)
        return self * other._power(-1.0)

    def __rtruediv__(self, other):
        return self._power(-1.0) * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            return np.exp(np.log(self) * p)
        p = float(p)
        if p == int(p) and 0 <= p <= 4:
            out = Jet.constant(self.space, np.ones(self.shape), self.order)
            for _ in range(int(p)):
                out = out * self
            return out
        return self._power(p)

    def _nilpotent(self) -> "Jet":
        c = self.coeffs.copy()
        c[..., 0] = 0.0
        return Jet(self.space, c, self.order)

    def compose(self, derivs: Sequence) -> "Jet":
        """Evaluate ``phi(self)`` given ``derivs[k] = phi^(k)(self.value)``."""
        delta = self._nilpotent()
        out = Jet.constant(self.space, np.asarray(derivs[0], dtype=float) * np.ones(self.shape), self.order)
        power = None
        for k in range(1, self.order + 1):
            power = delta if power is None else power * delta
            if k >= len(derivs):
                break
            out = out + power * (np.asarray(derivs[k], dtype=float) / math.factorial(k))
        return out

    def _power(self, p: float) -> "Jet":
        x0 = self.coeffs[..., 0]
        if np.any(x0 <= 0) and p != int(p):
            raise ValueError("non-integer power of a jet with non-positive value")
        derivs, coef = [], 1.0
        for k in range(self.order + 1):
            derivs.append(coef * x0 ** (p - k))
            coef *= p - k
        return self.compose(derivs)

    # -- numpy protocol -------------------------------------------------------------

    def __array_ufunc__(self, ufunc, method, *inputs, **kwargs):
        if method != "__call__" or kwargs.get("out") is not None:
            return NotImplemented
        if ufunc in _BINARY:
            a, b = inputs
            if not isinstance(a, Jet):
                return _BINARY_REFLECTED[ufunc](b, a)
            return _BINARY[ufunc](a, b)
        if ufunc in _UNARY and len(inputs) == 1:
            return _UNARY[ufunc](inputs[0])
        return NotImplemented


def _derivs_cycle(vals: list, order: int) -> list:
    return [vals[k % len(vals)] for k in range(order + 1)]


def _sin(x: Jet) -> Jet:
    v = x.coeffs[..., 0]
    return x.compose(_derivs_cycle([np.sin(v), np.cos(v), -np.sin(v), -np.cos(v)], x.order))


def _cos(x: Jet) -> Jet:
    v = x.coeffs[..., 0]
    return x.compose(_derivs_cycle([np.cos(v), -np.sin(v), -np.cos(v), np.sin(v)], x.order))


def _exp(x: Jet) -> Jet:
    e = np.exp(x.coeffs[..., 0])
    return x.compose([e] * (x.order + 1))


def _sinh(x: Jet) -> Jet:
    v = x.coeffs[..., 0]
    return x.compose(_derivs_cycle([np.sinh(v), np.cosh(v)], x.order))


def _cosh(x: Jet) -> Jet:
    v = x.coeffs[..., 0]
    return x.compose(_derivs_cycle([np.cosh(v), np.sinh(v)], x.order))


def _log(x: Jet) -> Jet:
    v = x.coeffs[..., 0]
    if np.any(v <= 0):
        raise ValueError("log of a jet with non-positive value")
    derivs = [np.log(v)]
    for k in range(1, x.order + 1):
        derivs.append((-1.0) ** (k - 1) * math.factorial(k - 1) / v**k)
    return x.compose(derivs)


_UNARY: dict = {
    np.sin: _sin,
    np.cos: _cos,
    np.tan: lambda x: _sin(x) / _cos(x),
    np.exp: _exp,
    np.log: _log,
    np.sinh: _sinh,
    np.cosh: _cosh,
    np.tanh: lambda x: _sinh(x) / _cosh(x),
    np.sqrt: lambda x: x._power(0.5),
    np.square: lambda x: x * x,
    np.negative: lambda x: -x,
    np.positive: lambda x: x,
    np.reciprocal: lambda x: x._power(-1.0),
}

_BINARY: dict = {
    np.add: lambda a, b: a + b,
    np.subtract: lambda a, b: a - b,
    np.multiply: lambda a, b: a * b,
    np.true_divide: lambda a, b: a / b,
    np.power: lambda a, b: a**b,
}

_BINARY_REFLECTED: dict = {
    np.add: lambda b, a: b + a,
    np.subtract: lambda b, a: b.__rsub__(a),
    np.multiply: lambda b, a: b * a,
    np.true_divide: lambda b, a: b.__rtruediv__(a),
    np.power: lambda b, a: np.exp(b * np.log(np.asarray(a, dtype=float))),
}


# -- tensor helpers ----------------------------------------------------------------


def as_jet(x, like: Jet) -> Jet:
    if isinstance(x, Jet):
        return x
    return Jet.constant(like.space, x, like.order)


def stack(entries, like: Jet | None = None) -> Jet:
    """Turn a nested list / object array of jets and floats into one tensor jet."""
    arr = np.asarray(entries, dtype=object)
    flat = arr.ravel()
    if like is None:
        like = next((e for e in flat if isinstance(e, Jet)), None)
        if like is None:
            raise ValueError("stack needs at least one jet entry or a template")
    order = min([e.order for e in flat if isinstance(e, Jet)] + [like.order])
    rows = []
    for e in flat:
        if isinstance(e, Jet):
            if e.shape != ():
                raise ValueError("stack expects scalar jets")
            rows.append(e.truncate(order).coeffs)
        else:
            c = np.zeros(like.space.sizes[order])
            c[0] = float(e)
            rows.append(c)
    coeffs = np.stack(rows).reshape(arr.shape + (like.space.sizes[order],))
    return Jet(like.space, coeffs, order)


def jet_einsum(spec: str, a, b=None):
    """``np.einsum`` for one or two operands where either may be a jet."""
    if b is None:
        if not isinstance(a, Jet):
            return np.einsum(spec, a)
        ins, out = spec.split("->")
        return Jet(a.space, np.einsum(f"{ins}Z->{out}Z", a.coeffs), a.order)
    (sa, sb), out = spec.split("->")[0].split(","), spec.split("->")[1]
    if isinstance(a, Jet) and isinstance(b, Jet):
        a, b = a._coerce(b)
        ia, ib, starts = a.space._mul[a.order]
        prod = np.einsum(f"{sa}Z,{sb}Z->{out}Z", a.coeffs[..., ia], b.coeffs[..., ib], optimize=True)
        return Jet(a.space, np.add.reduceat(prod, starts, axis=-1), a.order)
    if isinstance(a, Jet):
        return Jet(a.space, np.einsum(f"{sa}Z,{sb}->{out}Z", a.coeffs, np.asarray(b, dtype=float)), a.order)
    if isinstance(b, Jet):
        return Jet(b.space, np.einsum(f"{sa},{sb}Z->{out}Z", np.asarray(a, dtype=float), b.coeffs), b.order)
    return np.einsum(spec, a, b)


def jet_inverse(g: Jet) -> Jet:
    """Inverse of a square-matrix jet via the truncated Neumann series."""
    g0 = g.coeffs[..., 0]
    g0inv = np.linalg.inv(g0)
    step = -jet_einsum("ij,jk->ik", g0inv, g._nilpotent())
    term = Jet.constant(g.space, g0inv, g.order)
    total = term
    for _ in range(g.order):
        term = jet_einsum("ij,jk->ik", step, term)
        total = total + term
    return total


def apply_taylor(derivs: Sequence[float], x):
    """Evaluate a function known only through its derivatives at ``x.value``.

    For a float argument this returns ``derivs[0]``; for a jet it composes the
    truncated Taylor series with the jet's nilpotent part.
    """
    if isinstance(x, Jet):
        return x.compose(list(derivs))
    return float(derivs[0])


def univariate_derivatives(fn: Callable, s: float, order: int) -> np.ndarray:
    """Derivatives ``fn^(k)(s)`` for ``k = 0..order`` by forward-mode jets."""
    (t,) = Jet.variables([s], order)
    y = fn(t)
    if not isinstance(y, Jet):
        out = np.zeros(order + 1)
        out[0] = float(y)
        return out
    return np.array([y.derivative((k,)) for k in range(order + 1)], dtype=float)
