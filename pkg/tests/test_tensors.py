from __future__ import annotations

import itertools

import numpy as np
import pytest

from solitonlab.errors import DimensionError, NotPositiveDefiniteError
from solitonlab.tensors import (CurvTensor4, SymTensor2, distinct_count, generalized_eigenvalues, kulkarni_nomizu,
                                norm_squared, schouten, trace_pair, weyl_from)


def _kn_loop(a, b):
    n = a.shape[0]
    out = np.zeros((n,) * 4)
    for i, j, k, l in itertools.product(range(n), repeat=4):
        out[i, j, k, l] = a[i, k] * b[j, l] + a[j, l] * b[i, k] - a[i, l] * b[j, k] - a[j, k] * b[i, l]
    return out


def test_kulkarni_nomizu_examples():
    g = np.eye(4)
    assert kulkarni_nomizu(g, g).comps[0, 1, 0, 1] == 2.0
    assert np.all(kulkarni_nomizu(g, np.zeros((4, 4))).comps == 0)
    a = np.diag([1.0, 2.0, 3.0, 4.0])
    assert kulkarni_nomizu(a, g).comps[0, 1, 0, 1] == 3.0


def test_kulkarni_nomizu_matches_loop_and_symmetries():
    rng = np.random.default_rng(1)
    m1, m2 = rng.normal(size=(2, 5, 5))
    a, b = m1 + m1.T, m2 + m2.T
    kn = kulkarni_nomizu(a, b)
    assert np.allclose(kn.comps, _kn_loop(a, b))
    assert kn.symmetry_defect() < 1e-12
    assert np.allclose(kn.comps, kulkarni_nomizu(b, a).comps)


def test_kulkarni_nomizu_dimension_mismatch():
    with pytest.raises(DimensionError):
        kulkarni_nomizu(np.eye(4), np.eye(5))


def test_weyl_of_constant_curvature_vanishes():
    g = np.diag([1.0, 2.0, 3.0, 4.0])
    rm = 0.5 * kulkarni_nomizu(g, g).comps  # sectional curvature 1
    ric = trace_pair(rm, g, 0, 2)
    assert np.allclose(ric, 3 * g)
    w = weyl_from(rm, ric, 12.0, g)
    assert np.max(np.abs(w.comps)) < 1e-12
    assert np.max(np.abs(weyl_from(np.zeros((4,) * 4), np.zeros((4, 4)), 0.0, np.eye(4)).comps)) == 0


def test_weyl_is_trace_free():
    rng = np.random.default_rng(2)
    m = rng.normal(size=(4, 4))
    h = m + m.T
    g = np.eye(4)
    rm = kulkarni_nomizu(h, g).comps + 0.3 * kulkarni_nomizu(h, h).comps
    ric = trace_pair(rm, g, 0, 2)
    w = weyl_from(rm, ric, float(np.trace(ric)), g)
    assert np.max(np.abs(trace_pair(w.comps, g, 0, 2))) < 1e-12


def test_weyl_requires_dimension_four():
    with pytest.raises(DimensionError):
        weyl_from(np.zeros((3,) * 4), np.zeros((3, 3)), 0.0, np.eye(3))


def test_schouten_examples():
    g = np.eye(4)
    assert np.allclose(schouten(3 * g, 12.0, g).comps, g)
    assert np.all(schouten(np.zeros((4, 4)), 0.0, g).comps == 0)
    cyl = schouten(np.diag([0.0, 2, 2, 2]), 6.0, g)
    assert np.allclose(cyl.comps, np.diag([-1.0, 1, 1, 1]))


def test_generalized_eigenvalues():
    g = np.diag([1.0, 2.0, 0.5, 3.0])
    assert np.allclose(generalized_eigenvalues(g, g), 1.0)
    assert np.allclose(generalized_eigenvalues(np.zeros((4, 4)), g), 0.0)
    assert np.allclose(generalized_eigenvalues(np.diag([0.0, 4.0, 1.0, 6.0]), g), [0, 2, 2, 2])


def test_generalized_eigenvalues_rejects_indefinite_metric():
    with pytest.raises(NotPositiveDefiniteError):
        generalized_eigenvalues(np.eye(4), np.diag([1.0, -1.0, 1.0, 1.0]))


def test_distinct_count_examples():
    assert distinct_count([0, 2, 2, 2], 1e-6) == 2
    assert distinct_count([3, 3, 3, 3], 1e-6) == 1
    assert distinct_count([0, 1, 2, 3], 0.5) == 4
    with pytest.raises(ValueError):
        distinct_count([1.0], 0.0)


def test_norm_squared_uses_inverse_metric():
    g = np.diag([2.0, 2.0, 2.0])
    assert norm_squared(g, g) == pytest.approx(3.0)


def test_containers_validate():
    with pytest.raises(ValueError):
        SymTensor2(np.array([[1.0, 2.0, 0], [0, 1, 0], [0, 0, 1]]))
    with pytest.raises(DimensionError):
        SymTensor2(np.eye(2))
    with pytest.raises(DimensionError):
        CurvTensor4(np.zeros((3, 3, 3)))
    t = SymTensor2(np.eye(3))
    with pytest.raises(ValueError):
        t.comps[0, 0] = 5.0
