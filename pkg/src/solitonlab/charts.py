"""Coordinate charts for model geometries used as oracle fixtures and fiber charts."""

from __future__ import annotations

from typing import Callable

import numpy as np

from .oracle import MetricChart


def _zeros(n: int) -> list[list]:
    return [[0.0] * n for _ in range(n)]


def _conformally_flat(n: int, factor: Callable) -> Callable:
    def metric(x):
        c = factor(x)
        g = _zeros(n)
        for i in range(n):
            g[i][i] = c
        return g

    return metric


def euclidean(n: int, half_width: float = 2.0, potential: Callable | None = None) -> MetricChart:
    """Cartesian coordinates on a cube in R^n."""
    return MetricChart(n, [-half_width] * n, [half_width] * n, _conformally_flat(n, lambda x: 1.0),
                       potential, name=f"euclidean{n}")


def polar_plane(potential: Callable | None = None) -> MetricChart:
    """``ds^2 + s^2 dtheta^2`` on ``s in (0.05, 5)``."""

    def metric(x):
        s = x[0]
        return [[1.0, 0.0], [0.0, s * s]]

    return MetricChart(2, [0.05, -3.0], [5.0, 3.0], metric, potential, name="polar")


def sphere_angular(n: int, radius: float = 1.0) -> MetricChart:
    """Hyperspherical angles: ``dth1^2 + sin^2 th1 (dth2^2 + sin^2 th2 (...))``."""

    def metric(x):
        g = _zeros(n)
        weight = radius * radius
        for i in range(n):
            g[i][i] = weight
            weight = weight * np.sin(x[i]) ** 2
        return g

    lower = [0.1] * (n - 1) + [-3.0]
    upper = [np.pi - 0.1] * (n - 1) + [3.0]
    return MetricChart(n, lower, upper, metric, name=f"sphere{n}-angular")


def sphere_stereographic(n: int, radius: float = 1.0) -> MetricChart:
    """Stereographic chart ``4 radius^2 / (1 + |y|^2)^2 dy^2`` of the round sphere."""

    def factor(y):
        q = sum(t * t for t in y)
        return 4.0 * radius * radius / (1.0 + q) ** 2

    return MetricChart(n, [-1.0] * n, [1.0] * n, _conformally_flat(n, factor), name=f"sphere{n}-stereo")


def hyperbolic_ball(n: int, radius: float = 1.0) -> MetricChart:
    """Poincare ball ``4 radius^2 / (1 - |y|^2)^2 dy^2``, restricted to a cube inside."""

    def factor(y):
        q = sum(t * t for t in y)
        return 4.0 * radius * radius / (1.0 - q) ** 2

    half = 0.9 / np.sqrt(n)
    return MetricChart(n, [-half] * n, [half] * n, _conformally_flat(n, factor), name=f"hyperbolic{n}")


def product(a: MetricChart, b: MetricChart, potential: Callable | None = None) -> MetricChart:
    """Riemannian product of two charts (coordinates of ``a`` first)."""
    n = a.dim + b.dim

    def metric(x):
        ga = a.metric_fn(x[: a.dim])
        gb = b.metric_fn(x[a.dim :])
        g = _zeros(n)
        for i in range(a.dim):
            for j in range(a.dim):
                g[i][j] = ga[i][j]
        for i in range(b.dim):
            for j in range(b.dim):
                g[a.dim + i][a.dim + j] = gb[i][j]
        return g

    return MetricChart(n, np.r_[a.lower, b.lower], np.r_[a.upper, b.upper], metric, potential,
                       name=f"{a.name}x{b.name}")


def interval(lo: float, hi: float) -> MetricChart:
    return MetricChart(1, [lo], [hi], lambda x: [[1.0]], name="line")


def perturbed(chart: MetricChart, eps: float, center=None, width: float = 0.5, seed: int = 0) -> MetricChart:
    """Add ``eps * bump(x) * S`` to the metric for a fixed random symmetric ``S``.

    The bump is a Gaussian of the given width; the perturbation keeps the chart's
    potential.  Used as a generic (non-soliton, non-harmonic-Weyl) control.
    """
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(chart.dim, chart.dim))
    sym = 0.5 * (m + m.T)
    c = chart.center if center is None else np.asarray(center, dtype=float)

    def metric(x):
        g = chart.metric_fn(x)
        q = sum((x[i] - c[i]) ** 2 for i in range(chart.dim))
        bump = np.exp(-q / (width * width)) * eps
        return [[g[i][j] + bump * sym[i, j] for j in range(chart.dim)] for i in range(chart.dim)]

    return MetricChart(chart.dim, chart.lower, chart.upper, metric, chart.potential_fn,
                       name=f"{chart.name}-perturbed")
