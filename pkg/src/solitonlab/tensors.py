"""Pointwise multilinear algebra: symmetric 2-tensors, algebraic curvature tensors.

Curvature convention used throughout the package: ``Rm[i, j, i, j]`` is the
sectional curvature of the ``(e_i, e_j)`` plane times its squared area, so the
unit sphere has ``Rm = 1/2 (g KN g)`` and ``Ric[j, l] = g^{ik} Rm[i, j, k, l]``.
With this sign the Kulkarni-Nomizu product below gives a trace-free Weyl tensor.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg

from .errors import DimensionError, NotPositiveDefiniteError

__all__ = [
    "SymTensor2",
    "CurvTensor4",
    "Tensor3",
    "kulkarni_nomizu",
    "weyl_from",
    "schouten",
    "generalized_eigenvalues",
    "distinct_count",
    "trace_pair",
    "norm_squared",
]

MIN_DIM = 3
MAX_DIM = 12


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _check_dim(n: int) -> None:
    if not MIN_DIM <= n <= MAX_DIM:
        raise DimensionError(f"dimension {n} outside supported range [{MIN_DIM}, {MAX_DIM}]")


@dataclass(frozen=True)
class SymTensor2:
    """Symmetric covariant 2-tensor at a point (metric, Ricci, Hessian, Schouten)."""

    comps: np.ndarray

    def __post_init__(self) -> None:
        c = _frozen(self.comps)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise DimensionError(f"SymTensor2 needs a square matrix, got shape {c.shape}")
        _check_dim(c.shape[0])
        scale = max(1.0, float(np.max(np.abs(c))))
        if np.max(np.abs(c - c.T)) > 1e-8 * scale:
            raise ValueError("SymTensor2 components are not symmetric")
        object.__setattr__(self, "comps", c)

    @property
    def dim(self) -> int:
        return self.comps.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.comps, dtype=dtype)


@dataclass(frozen=True)
class CurvTensor4:
    """Rank-4 tensor with the algebraic symmetries of a curvature tensor."""

    comps: np.ndarray

    def __post_init__(self) -> None:
        c = _frozen(self.comps)
        if c.ndim != 4 or len(set(c.shape)) != 1:
            raise DimensionError(f"CurvTensor4 needs an n^4 array, got shape {c.shape}")
        _check_dim(c.shape[0])
        object.__setattr__(self, "comps", c)

    @property
    def dim(self) -> int:
        return self.comps.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.comps, dtype=dtype)

    def symmetry_defect(self) -> float:
        """Largest violation among the antisymmetries, pair symmetry and first Bianchi."""
        t = self.comps
        defects = [
            t + t.transpose(1, 0, 2, 3),
            t + t.transpose(0, 1, 3, 2),
            t - t.transpose(2, 3, 0, 1),
            t + t.transpose(1, 2, 0, 3) + t.transpose(2, 0, 1, 3),
        ]
        return float(max(np.max(np.abs(d)) for d in defects))


@dataclass(frozen=True)
class Tensor3:
    """Rank-3 tensor; used for the Cotton tensor, antisymmetric in its first two slots."""

    comps: np.ndarray

    def __post_init__(self) -> None:
        c = _frozen(self.comps)
        if c.ndim != 3 or len(set(c.shape)) != 1:
            raise DimensionError(f"Tensor3 needs an n^3 array, got shape {c.shape}")
        object.__setattr__(self, "comps", c)

    @property
    def dim(self) -> int:
        return self.comps.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.comps, dtype=dtype)


def _arr(t) -> np.ndarray:
    return np.asarray(t.comps if hasattr(t, "comps") else t, dtype=float)


def _kn(a, b, einsum: Callable = np.einsum):
    # Besse convention: (a KN b)_{ijkl} = a_ik b_jl + a_jl b_ik - a_il b_jk - a_jk b_il
    return (
        einsum("ik,jl->ijkl", a, b)
        + einsum("jl,ik->ijkl", a, b)
        - einsum("il,jk->ijkl", a, b)
        - einsum("jk,il->ijkl", a, b)
    )


def kulkarni_nomizu(a: SymTensor2 | np.ndarray, b: SymTensor2 | np.ndarray) -> CurvTensor4:
    """Kulkarni-Nomizu product of two symmetric 2-tensors.

    Parameters
    ----------
    a, b
        Symmetric tensors of the same dimension.

    Returns
    -------
    CurvTensor4
        ``a_ik b_jl + a_jl b_ik - a_il b_jk - a_jk b_il``.  The result has every
        algebraic curvature symmetry exactly, including the first Bianchi identity.
    """
    a, b = _arr(a), _arr(b)
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return CurvTensor4(_kn(a, b))


def weyl_components(rm, ric, scalar, g, einsum: Callable = np.einsum):
    """Weyl tensor components; works on float arrays or jets given a matching einsum."""
    n = g.shape[0]
    trace_free = ric - g * (scalar / n)
    return (
        rm
        - _kn(trace_free, g, einsum) * (1.0 / (n - 2))
        - _kn(g, g, einsum) * (scalar / (2.0 * n * (n - 1)))
    )


def weyl_from(rm, ric, scalar: float, g) -> CurvTensor4:
    """Weyl part of a curvature tensor, for ``n >= 4``."""
    rm, ric, g = _arr(rm), _arr(ric), _arr(g)
    n = g.shape[0]
    if n < 4:
        raise DimensionError("Weyl tensor requires n >= 4 (it vanishes identically for n = 3)")
    if rm.shape != (n,) * 4 or ric.shape != (n, n):
        raise DimensionError("inconsistent tensor shapes for weyl_from")
    return CurvTensor4(weyl_components(rm, ric, float(scalar), g))


def schouten(ric, scalar: float, g) -> SymTensor2:
    """Schouten tensor ``Ric - R / (2(n-1)) g``."""
    ric, g = _arr(ric), _arr(g)
    if ric.shape != g.shape:
        raise DimensionError(f"dimension mismatch: {ric.shape} vs {g.shape}")
    n = g.shape[0]
    return SymTensor2(ric - float(scalar) / (2.0 * (n - 1)) * g)


def trace_pair(t, g, first: int, second: int) -> np.ndarray:
    """Contract slots ``first`` and ``second`` of ``t`` with the inverse metric."""
    t, g = _arr(t), _arr(g)
    ginv = np.linalg.inv(g)
    return np.tensordot(t, ginv, axes=([first, second], [0, 1]))


def norm_squared(t, g) -> float:
    """Full contraction ``|t|^2`` of a covariant tensor with the inverse metric."""
    t, g = _arr(t), _arr(g)
    ginv = np.linalg.inv(g)
    raised = t
    for axis in range(t.ndim):
        raised = np.moveaxis(np.tensordot(ginv, raised, axes=([1], [axis])), 0, axis)
    return float(np.sum(raised * t))


def generalized_eigenvalues(a, g) -> np.ndarray:
    """Eigenvalues of ``a`` relative to the metric ``g`` (``a v = mu g v``), ascending."""
    a, g = _arr(a), _arr(g)
    if a.shape != g.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {g.shape}")
    try:
        scipy.linalg.cholesky(g, lower=True)
    except np.linalg.LinAlgError as exc:
        w = np.linalg.eigvalsh(0.5 * (g + g.T))
        raise NotPositiveDefiniteError(
            f"metric is not positive definite (smallest eigenvalue {w[0]:.3e})"
        ) from exc
    a = 0.5 * (a + a.T)
    return np.sort(scipy.linalg.eigh(a, g, eigvals_only=True))


def distinct_count(values: Sequence[float], tol: float) -> int:
    """Number of clusters under single linkage with gap threshold ``tol``.

    Sorted neighbours closer than or equal to ``tol`` share a cluster.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    v = np.sort(np.asarray(list(values), dtype=float))
    if v.size == 0:
        raise ValueError("distinct_count needs at least one value")
    return int(1 + np.count_nonzero(np.diff(v) > tol))
