"""Ricci spectrum, the coefficients B and C, and identity residuals along ``s``.

On a gradient soliton with harmonic Weyl tensor written as a warped product
over a line, every quantity here depends on ``s`` alone.  The residuals are
signed (``lhs - rhs``) and named:

``xi_consistency_i``  ``xi_i - (lambda - lambda_i)/f'``
``riccati_i``         ``xi_i' + xi_i^2 + R'/(2(n-1)f')``
``base_curvature_i``  ``lambda_1 + (n-1)(xi_i' + xi_i^2)``
``fiber_soliton_i``   ``(lambda - f' xi_i) - (kappa_i/h_i^2 - xi_i' - xi_i sum_l r_l xi_l)``
``quadratic_bc_i``    ``xi_i^2 - B xi_i - C + kappa_i/h_i^2``
``root_polynomial_i`` ``B xi_i^2 + (B' + 2 lambda) xi_i + (C - lambda) B + C'``
``base_soliton``      ``lambda_1 - (lambda - f'')``

Residuals that divide by ``f'`` are missing (``None``) at singular samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import SingularPointError
from .ode import _rk4
from .oracle import DualEngine, FiniteDifferenceEngine, scalar_laplacian
from .tensors import distinct_count
from .warped import FiberSpec, WarpedSpec, along_s, ricci_terms, to_chart

__all__ = [
    "SpectrumSample",
    "spectrum_at",
    "trajectory_samples",
    "coeffs_BC",
    "identity_residuals",
    "poly_residual",
    "laplacian_checks",
    "count_distinct_eigenvalues",
    "DistinctCount",
    "LaplacianCheck",
    "PER_FIBER_RESIDUALS",
    "residual_names",
    "csv_header",
    "EPS_F",
]

EPS_F = 1e-8
PER_FIBER_RESIDUALS = (
    "xi_consistency",
    "riccati",
    "base_curvature",
    "fiber_soliton",
    "quadratic_bc",
    "root_polynomial",
)


def residual_names(k: int) -> list[str]:
    """Fixed residual order: per-fiber families in declaration order, then ``base_soliton``."""
    names = [f"{fam}_{i + 1}" for fam in PER_FIBER_RESIDUALS for i in range(k)]
    return names + ["base_soliton"]


def _opt(x) -> float | None:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


@dataclass(frozen=True)
class SpectrumSample:
    s: float
    n: int
    lam: float
    f: float
    fp: float
    fpp: float
    h: tuple[float, ...]
    hp: tuple[float, ...]
    xi: tuple[float, ...]
    xi_prime: tuple[float, ...]
    lambda1: float
    fiber_eigs: tuple[float, ...]
    multiplicities: tuple[int, ...]
    kappas: tuple[float, ...]
    R: float
    R_prime: float | None
    xi_from_spectrum: tuple[float, ...] | None
    coeffB: float | None
    coeffC: float | None
    coeffB_prime: float | None
    coeffC_prime: float | None
    singular: bool
    residuals: dict = field(default_factory=dict)

    @property
    def k(self) -> int:
        return len(self.h)

    def eigenvalues(self) -> list[float]:
        out = [self.lambda1]
        for v, r in zip(self.fiber_eigs, self.multiplicities):
            out.extend([v] * r)
        return out

    def ricci_norm2(self) -> float:
        """``|Ric|^2 = lambda_1^2 + sum r_l lambda_l^2``."""
        return self.lambda1**2 + sum(r * v * v for r, v in zip(self.multiplicities, self.fiber_eigs))

    def row(self) -> list[float | None]:
        """Values in :func:`csv_header` order."""
        out: list[float | None] = [self.s, self.f, self.fp]
        for h, hp in zip(self.h, self.hp):
            out += [h, hp]
        out.append(self.lambda1)
        out += list(self.fiber_eigs)
        out += list(self.xi)
        out += [self.coeffB, self.coeffC]
        out += [self.residuals.get(name) for name in residual_names(self.k)]
        return out


def csv_header(k: int) -> list[str]:
    cols = ["s", "f", "fp"]
    for i in range(1, k + 1):
        cols += [f"h_{i}", f"hp_{i}"]
    cols.append("lambda1")
    cols += [f"lambda_fiber_{i}" for i in range(1, k + 1)]
    cols += [f"xi_{i}" for i in range(1, k + 1)]
    cols += ["B", "C"]
    return cols + residual_names(k)


def identity_residuals(sample: SpectrumSample, fibers: Sequence[FiberSpec] | None = None,
                       lam: float | None = None) -> dict[str, float | None]:
    """Signed residuals of the soliton identities at one sample (see module docstring)."""
    kappas = sample.kappas if fibers is None else tuple(f.einstein_const for f in fibers)
    lam = sample.lam if lam is None else float(lam)
    n, k = sample.n, sample.k
    dims = sample.multiplicities
    total = sum(r * x for r, x in zip(dims, sample.xi))
    out: dict[str, float | None] = {}
    for i in range(k):
        xi, dxi, h = sample.xi[i], sample.xi_prime[i], sample.h[i]
        riccati = dxi + xi * xi
        curv = kappas[i] / (h * h)
        j = i + 1
        out[f"base_curvature_{j}"] = _opt(sample.lambda1 + (n - 1) * riccati)
        out[f"fiber_soliton_{j}"] = _opt((lam - sample.fp * xi) - (curv - dxi - xi * total))
        if sample.singular:
            for fam in ("xi_consistency", "riccati", "quadratic_bc", "root_polynomial"):
                out[f"{fam}_{j}"] = None
            continue
        out[f"xi_consistency_{j}"] = _opt(xi - (lam - sample.fiber_eigs[i]) / sample.fp)
        out[f"riccati_{j}"] = (_opt(riccati + sample.R_prime / (2 * (n - 1) * sample.fp))
                               if sample.R_prime is not None else None)
        B, C = sample.coeffB, sample.coeffC
        out[f"quadratic_bc_{j}"] = _opt(xi * xi - B * xi - C + curv) if None not in (B, C) else None
        out[f"root_polynomial_{j}"] = _root_polynomial(sample, xi, lam)
    out["base_soliton"] = _opt(sample.lambda1 - (lam - sample.fpp))
    return {name: out.get(name) for name in residual_names(k)}


def _root_polynomial(sample: SpectrumSample, xi: float, lam: float) -> float | None:
    B, C, dB, dC = sample.coeffB, sample.coeffC, sample.coeffB_prime, sample.coeffC_prime
    if None in (B, C, dB, dC):
        return None
    return _opt(B * xi * xi + (dB + 2 * lam) * xi + (C - lam) * B + dC)


def poly_residual(sample: SpectrumSample) -> tuple[float, ...]:
    """Quadratic ``B x^2 + (B' + 2 lam) x + (C - lam) B + C'`` evaluated at each ``xi_i``."""
    if sample.singular or None in (sample.coeffB, sample.coeffC, sample.coeffB_prime, sample.coeffC_prime):
        raise SingularPointError(f"B, C or their derivatives undefined at s = {sample.s} (|f'| <= eps_f)")
    return tuple(_root_polynomial(sample, x, sample.lam) for x in sample.xi)


def _build(s, n, lam, dims, kappas, f, fp, fpp, h, hp, xi_prime, lambda1, fib, R,
           R_prime, B, C, B_prime, C_prime, eps_f) -> SpectrumSample:
    singular = not abs(fp) > eps_f
    xi = tuple(float(b / a) for a, b in zip(h, hp))
    spec_xi = None if singular else tuple(float((lam - v) / fp) for v in fib)
    if singular:
        R_prime = B = C = B_prime = C_prime = None
    sample = SpectrumSample(
        s=float(s), n=int(n), lam=float(lam), f=float(f), fp=float(fp), fpp=float(fpp),
        h=tuple(float(v) for v in h), hp=tuple(float(v) for v in hp), xi=xi,
        xi_prime=tuple(float(v) for v in xi_prime), lambda1=float(lambda1),
        fiber_eigs=tuple(float(v) for v in fib), multiplicities=tuple(int(r) for r in dims),
        kappas=tuple(float(v) for v in kappas), R=float(R), R_prime=_opt(R_prime),
        xi_from_spectrum=spec_xi, coeffB=_opt(B), coeffC=_opt(C), coeffB_prime=_opt(B_prime),
        coeffC_prime=_opt(C_prime), singular=singular,
    )
    sample.residuals.update(identity_residuals(sample))
    return sample


def _bc_jets(jets: dict, n: int, lam: float):
    fp, R, lam1 = jets["fp"], jets["R"], jets["lambda1"]
    Rp = R.partial(0)
    B = ((n - 1) * lam - R + lam1 - fp * fp) / fp
    C = lam - Rp / (2 * (n - 1) * fp)
    return B, C


def spectrum_at(spec: WarpedSpec, s: float, eps_f: float = EPS_F) -> SpectrumSample:
    """Spectrum, ``xi``, ``B``, ``C`` and residuals from closed-form warps (jets in ``s``)."""
    jets = along_s(spec, s, 4)
    n, lam = spec.n, spec.lam
    fp = float(jets["fp"].value)
    h = [float(x.value) for x in jets["h"]]
    hp = [float(x.value) for x in jets["hp"]]
    hpp = [float(x.value) for x in jets["hpp"]]
    xi_prime = [b / a - (c / a) ** 2 for a, c, b in zip(h, hp, hpp)]
    R = jets["R"]
    B = C = Bp = Cp = Rp = None
    if abs(fp) > eps_f:
        Bj, Cj = _bc_jets(jets, n, lam)
        B, C = float(Bj.value), float(Cj.value)
        Bp, Cp = Bj.derivative((1,)), Cj.derivative((1,))
        Rp = R.derivative((1,))
    return _build(s, n, lam, spec.dims, spec.kappas, jets["f"].value, fp, jets["fpp"].value, h, hp,
                  xi_prime, jets["lambda1"].value, [x.value for x in jets["lambda_fib"]], R.value,
                  Rp, B, C, Bp, Cp, eps_f)


def coeffs_BC(spec: WarpedSpec, s: float, engine=None, eps_f: float = EPS_F) -> dict[str, float]:
    """``B``, ``C`` and their ``s``-derivatives.

    With the default jet engine derivatives are exact to rounding; a
    :class:`FiniteDifferenceEngine` differentiates the closed-form ``B(s)``,
    ``C(s)`` with central differences of its step (Richardson if configured).
    """
    engine = engine or DualEngine()
    n, lam = spec.n, spec.lam

    def values(t: float):
        jets = along_s(spec, t, 4)
        if not abs(float(jets["fp"].value)) > eps_f:
            raise SingularPointError(f"f' vanishes at s = {t}; B and C are undefined at critical points")
        return _bc_jets(jets, n, lam)

    B, C = values(s)
    out = {"B": float(B.value), "C": float(C.value)}
    if isinstance(engine, FiniteDifferenceEngine):
        def central(step):
            lo, hi = values(s - step), values(s + step)
            return [(float(b.value) - float(a.value)) / (2 * step) for a, b in zip(lo, hi)]

        d = central(engine.step)
        if engine.richardson:
            d2 = central(engine.step / 2)
            d = [(4 * y - x) / 3 for x, y in zip(d, d2)]
        out["B_prime"], out["C_prime"] = d
    else:
        out["B_prime"], out["C_prime"] = B.derivative((1,)), C.derivative((1,))
    return out


def _d1(v: np.ndarray, ds: float) -> np.ndarray:
    """Fourth-order first derivative on a uniform grid (one-sided five-point stencils at the ends)."""
    if v.size < 5:
        raise ValueError("five-point differences need at least 5 grid points")
    out = np.empty_like(v)
    out[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * ds)
    out[0] = (-25 * v[0] + 48 * v[1] - 36 * v[2] + 16 * v[3] - 3 * v[4]) / (12 * ds)
    out[1] = (-3 * v[0] - 10 * v[1] + 18 * v[2] - 6 * v[3] + v[4]) / (12 * ds)
    out[-1] = (25 * v[-1] - 48 * v[-2] + 36 * v[-3] - 16 * v[-4] + 3 * v[-5]) / (12 * ds)
    out[-2] = (3 * v[-1] + 10 * v[-2] - 18 * v[-3] + 6 * v[-4] - v[-5]) / (12 * ds)
    return out


def _pad(traj, m: int, substep: float = 1e-3):
    """Grid and states extended by up to ``m`` grid steps beyond each end.

    The extension integrates the same equations backward from the first node
    and (when no event stopped the run) forward from the last node, so every
    retained sample can use central differences.  Extension points that are
    non-finite or have a nonpositive warp are dropped.
    """
    s = np.asarray(traj.s, dtype=float)
    y = np.asarray(traj.y, dtype=float)
    k = traj.k
    ds = (s[-1] - s[0]) / (s.size - 1)
    sub = max(1, int(math.ceil(ds / substep)))

    def extend(y0, direction, count):
        out, cur = [], y0.copy()
        with np.errstate(all="ignore"):
            for _ in range(count):
                for _ in range(sub):
                    cur = _rk4(traj._fun, 0.0, cur, direction * ds / sub)
                if not np.all(np.isfinite(cur)) or np.any(cur[2 : 2 + k] <= 0):
                    break
                out.append(cur.copy())
        return out

    before = extend(y[0], -1.0, m)[::-1]
    after = extend(y[-1], 1.0, m) if traj.complete else []
    ys = np.vstack([*before, y, *after]) if before or after else y
    ss = s[0] + ds * np.arange(-len(before), s.size + len(after))
    return ss, ys, len(before), ds


def trajectory_samples(traj, eps_f: float = EPS_F) -> list[SpectrumSample]:
    """Samples at every grid point of a trajectory.

    Second derivatives and the ``s``-derivatives of ``xi``, ``R``, ``B`` and
    ``C`` come from five-point differences of the stored states, not from the
    right-hand side, so the residuals test the trajectory itself.  The grid is
    padded past both ends (see :func:`_pad`) so the nested differences stay
    central wherever the solution extends.
    """
    s, y, lead, ds = _pad(traj, 6)
    k = traj.k
    dims = np.array([f.dim for f in traj.fibers], dtype=float)
    kappas = np.array([f.einstein_const for f in traj.fibers], dtype=float)
    n = 1 + int(dims.sum())
    lam = traj.lam
    f, fp = y[:, 0], y[:, 1]
    h, hp = y[:, 2 : 2 + k], y[:, 2 + k :]
    fpp = _d1(fp, ds)
    hpp = np.column_stack([_d1(hp[:, i], ds) for i in range(k)])
    xi = hp / h
    xi_prime = np.column_stack([_d1(xi[:, i], ds) for i in range(k)])
    lam1, fib = ricci_terms(h.T, hp.T, hpp.T, dims, kappas)
    fib = np.array(fib).T
    R = lam1 + fib @ dims
    with np.errstate(all="ignore"):
        regular = np.abs(fp) > eps_f
        safe_fp = np.where(regular, fp, np.nan)
        Rp = _d1(R, ds)
        B = ((n - 1) * lam - R + lam1 - fp * fp) / safe_fp
        C = lam - Rp / (2 * (n - 1) * safe_fp)
        Bp = _d1(B, ds)
        Cp = _d1(C, ds)
    return [
        _build(traj.s[j - lead], n, lam, dims, kappas, f[j], fp[j], fpp[j], h[j], hp[j], xi_prime[j],
               lam1[j], fib[j], R[j], Rp[j], B[j], C[j], Bp[j], Cp[j], eps_f)
        for j in range(lead, lead + len(traj.s))
    ]


@dataclass(frozen=True)
class LaplacianCheck:
    s: float
    pairs: dict  # name -> (lhs, rhs)

    @property
    def max_imbalance(self) -> float:
        return max((abs(a - b) for a, b in self.pairs.values()), default=0.0)


def laplacian_checks(spec: WarpedSpec, s: float, oracle: bool = False, engine=None,
                     eps_f: float = EPS_F) -> LaplacianCheck:
    """Both sides of the two scalar-curvature Laplacian identities at ``s``.

    ``radial_laplacian``: ``R'' + R' sum r_l xi_l`` (Laplacian of a function of
    ``s`` on the warped product) against ``R'' + R'((n-1)lam - R + lambda_1)/f'``;
    regular points only.  ``weighted_laplacian``: ``DR/2 - f'R'/2`` against
    ``lam R - |Ric|^2`` with ``|Ric|^2 = lambda_1^2 + sum r_l lambda_l^2``.
    With ``oracle=True`` the chart oracle's Laplacian on :func:`to_chart` is
    compared with the value used above (``oracle_laplacian``).
    """
    jets = along_s(spec, s, 4)
    n, lam = spec.n, spec.lam
    R = jets["R"]
    R0, R1, R2 = float(R.value), R.derivative((1,)), R.derivative((2,))
    fp = float(jets["fp"].value)
    lam1 = float(jets["lambda1"].value)
    fib = [float(x.value) for x in jets["lambda_fib"]]
    xi = [float(b.value) / float(a.value) for a, b in zip(jets["h"], jets["hp"])]
    radial = R2 + R1 * float(np.dot(spec.dims, xi))
    pairs: dict[str, tuple[float, float]] = {}
    laplacian = radial
    if abs(fp) > eps_f:
        laplacian = R2 + R1 * ((n - 1) * lam - R0 + lam1) / fp
        pairs["radial_laplacian"] = (radial, laplacian)
    ric2 = lam1 * lam1 + float(np.dot(spec.dims, np.square(fib)))
    pairs["weighted_laplacian"] = (0.5 * laplacian - 0.5 * fp * R1, lam * R0 - ric2)
    if oracle:
        chart = to_chart(spec)
        x = chart.center.copy()
        x[0] = s
        pairs["oracle_laplacian"] = (scalar_laplacian(chart, x, engine), laplacian)
    return LaplacianCheck(float(s), pairs)


@dataclass(frozen=True)
class DistinctCount:
    max_count: int
    counts: tuple[int, ...]
    s: tuple[float, ...]


def count_distinct_eigenvalues(samples, tol: float | None = None) -> DistinctCount:
    """Distinct Ricci eigenvalues (with multiplicity grouping) at each sample.

    ``samples`` is a trajectory or a sequence of :class:`SpectrumSample`.  The
    default tolerance at each sample is ``1e-6 * max(1, max |eigenvalue|)``.
    """
    if hasattr(samples, "samples"):
        samples = samples.samples()
    counts = []
    for smp in samples:
        eig = smp.eigenvalues()
        t = tol if tol is not None else 1e-6 * max(1.0, float(np.max(np.abs(eig))))
        counts.append(distinct_count(eig, t))
    if not counts:
        raise ValueError("no samples")
    return DistinctCount(max(counts), tuple(counts), tuple(smp.s for smp in samples))
