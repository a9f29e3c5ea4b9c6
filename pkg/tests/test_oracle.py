from __future__ import annotations

import math

import numpy as np
import pytest

from solitonlab import charts
from solitonlab.errors import DegenerateGradientError, DomainError, MissingPotentialError
from solitonlab.ode import known_solution
from solitonlab.oracle import (FiniteDifferenceEngine, PointGeometry, bari_residual, christoffel, curvature_pack,
                               hessian, riemann, scalar_laplacian, sectional_curvature, soliton_residual)
from solitonlab.tensors import generalized_eigenvalues, trace_pair
from solitonlab.warped import to_chart


def _cylinder_chart():
    spec, _ = known_solution("cylinder", 4, 2.0)
    return to_chart(spec)


def _cylinder_point(s=1.0):
    x = _cylinder_chart().center.copy()
    x[0] = s
    return x


def _sectional_extremes(chart, x):
    rm = riemann(chart, x).comps
    g = chart.metric(x)
    n = chart.dim
    eye = np.eye(n)
    return [sectional_curvature(rm, g, eye[i], eye[j]) for i in range(n) for j in range(i + 1, n)]


def test_christoffel_examples():
    assert np.all(christoffel(charts.euclidean(4), [0.1, 0.2, -0.3, 0.4]) == 0)
    gam = christoffel(charts.polar_plane(), [2.0, 0.3])
    assert gam[0, 1, 1] == pytest.approx(-2.0)
    assert gam[1, 0, 1] == pytest.approx(0.5)
    assert gam[1, 1, 0] == pytest.approx(0.5)
    s2 = charts.sphere_angular(2)
    assert christoffel(s2, [math.pi / 3, 0.0])[0, 1, 1] == pytest.approx(-math.sin(math.pi / 3) * math.cos(math.pi / 3))


def test_riemann_model_spaces():
    assert np.all(riemann(charts.euclidean(4), [0.1, 0.2, 0.3, 0.4]).comps == 0)
    for k in _sectional_extremes(charts.sphere_angular(4), [1.0, 1.2, 0.8, 0.1]):
        assert k == pytest.approx(1.0, abs=1e-6)
    for k in _sectional_extremes(charts.hyperbolic_ball(4), [0.1, -0.2, 0.05, 0.15]):
        assert k == pytest.approx(-1.0, abs=1e-6)
    assert riemann(charts.sphere_stereographic(4), [0.1, 0.2, 0.3, 0.4]).symmetry_defect() < 1e-12


def test_curvature_pack_sphere_and_cylinder():
    sphere = curvature_pack(charts.sphere_stereographic(4), [0.1, -0.2, 0.3, 0.05])
    assert np.max(np.abs(sphere.weyl.comps)) < 1e-6
    assert np.max(np.abs(sphere.cotton.comps)) < 1e-5
    assert sphere.scalar == pytest.approx(12.0)
    chart = _cylinder_chart()
    x = _cylinder_point()
    cyl = curvature_pack(chart, x)
    assert np.max(np.abs(cyl.cotton.comps)) < 1e-5
    # R x S^3 is conformally flat
    assert np.max(np.abs(cyl.weyl.comps)) < 1e-12
    assert np.allclose(generalized_eigenvalues(cyl.ric.comps, chart.metric(x)), [0, 2, 2, 2])


def test_product_of_plane_and_sphere_has_weyl_but_no_cotton():
    chart = charts.product(charts.euclidean(2), charts.sphere_angular(2))
    x = [0.2, -0.1, 1.1, 0.4]
    pack = curvature_pack(chart, x)
    assert np.max(np.abs(pack.cotton.comps)) < 1e-10
    assert np.max(np.abs(pack.weyl.comps)) > 0.1
    assert np.max(np.abs(trace_pair(pack.weyl.comps, chart.metric(x), 0, 2))) < 1e-12


def test_weyl_divergence_matches_cotton_on_perturbed_metric():
    chart = charts.perturbed(charts.sphere_stereographic(4), 0.2, seed=5)
    pack = curvature_pack(chart, [0.1, 0.05, -0.1, 0.2], with_divergence=True)
    assert np.max(np.abs(pack.cotton.comps)) > 1e-3
    # div W = (n - 3)/(n - 2) C in dimension n = 4, with the slots cycled
    assert np.allclose(pack.weyl_divergence, 0.5 * pack.cotton.comps.transpose(2, 0, 1), atol=1e-10)


def test_perturbed_metric_has_nonzero_cotton():
    # off the bump centre, where odd derivatives of the bump do not vanish
    x = _cylinder_point()
    chart = charts.perturbed(_cylinder_chart(), 0.1, center=x + 0.2, seed=3)
    assert np.max(np.abs(curvature_pack(chart, x).cotton.comps)) > 1e-4


def test_hessian_examples():
    e = charts.euclidean(4, potential=lambda x: 0.5 * sum(t * t for t in x))
    assert np.allclose(hessian(e, [0.3, 0.1, -0.2, 0.5]).comps, np.eye(4))
    lin = charts.euclidean(4, potential=lambda x: 2 * x[0] - x[3])
    assert np.allclose(hessian(lin, [0.3, 0.1, -0.2, 0.5]).comps, 0.0)
    polar = charts.polar_plane(potential=lambda x: 0.5 * x[0] * x[0])
    geo = PointGeometry(polar, [1.7, 0.2], depth=2)
    assert np.allclose(geo.hess_f.value, np.diag([1.0, 1.7 ** 2]))


@pytest.mark.parametrize("lam", [-1.0, 0.5, 2.0])
def test_gaussian_soliton_residual_vanishes(lam):
    e = charts.euclidean(4, potential=lambda x: 0.5 * lam * sum(t * t for t in x))
    assert np.max(np.abs(soliton_residual(e, lam, [0.3, 0.1, -0.2, 0.5]).comps)) < 1e-12


def test_soliton_residual_fixtures():
    chart = _cylinder_chart()
    assert np.max(np.abs(soliton_residual(chart, 2.0, _cylinder_point(0.7)).comps)) < 1e-6
    s4 = charts.sphere_angular(4).with_potential(lambda x: 0.0 * x[0])
    assert np.max(np.abs(soliton_residual(s4, 3.0, [1.1, 0.9, 1.3, 0.2]).comps)) < 1e-6


def test_bari_residual_examples():
    gauss = charts.euclidean(4, potential=lambda x: 0.5 * sum(t * t for t in x))
    assert bari_residual(gauss, [0.3, 0.1, -0.2, 0.5]) < 1e-6
    chart, x = _cylinder_chart(), _cylinder_point()
    assert bari_residual(chart, x) < 1e-5
    bumped = charts.perturbed(chart, 0.1, center=x + 0.2, seed=3)
    assert bari_residual(bumped, x) > 1e-4


def test_bari_refuses_vanishing_gradient():
    gauss = charts.euclidean(4, potential=lambda x: 0.5 * sum(t * t for t in x))
    with pytest.raises(DegenerateGradientError):
        bari_residual(gauss, [0.0, 0.0, 0.0, 0.0])


def test_missing_potential_and_domain_errors():
    e = charts.euclidean(4)
    with pytest.raises(MissingPotentialError):
        hessian(e, [0.0] * 4)
    with pytest.raises(DomainError):
        riemann(e, [5.0, 0, 0, 0])


def test_finite_difference_engine_agrees_with_jets():
    chart = charts.sphere_stereographic(4)
    x = [0.1, -0.2, 0.3, 0.05]
    exact = riemann(chart, x).comps
    coarse = np.max(np.abs(riemann(chart, x, FiniteDifferenceEngine(1e-2)).comps - exact))
    fine = np.max(np.abs(riemann(chart, x, FiniteDifferenceEngine(5e-3)).comps - exact))
    rich = np.max(np.abs(riemann(chart, x, FiniteDifferenceEngine(1e-2, richardson=True)).comps - exact))
    assert fine < coarse and 3.0 < coarse / fine < 5.0
    assert rich < fine


def test_scalar_laplacian_of_einstein_metric_is_zero():
    assert abs(scalar_laplacian(charts.sphere_stereographic(4), [0.1, 0.2, -0.1, 0.3])) < 1e-9


def test_depth_is_enforced():
    geo = PointGeometry(charts.euclidean(4), [0.0] * 4, depth=1)
    with pytest.raises(ValueError):
        geo.rm
