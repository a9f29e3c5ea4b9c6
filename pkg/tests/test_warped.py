from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solitonlab.errors import DimensionError, DomainError
from solitonlab.ode import known_solution
from solitonlab.oracle import PointGeometry
from solitonlab.tensors import generalized_eigenvalues
from solitonlab.warped import (ClosedForm, FiberSpec, SampledFunction, WarpedSpec, along_s, connection_summary,
                               fiber_count, ricci_closed_form, rescale_fiber, scalar_closed_form, to_chart)

S3 = FiberSpec(3, 2.0, "sphere")


def _spec(warp, fibers=(S3,), interval=(0.1, 3.0), **kw):
    warps = warp if isinstance(warp, tuple) else (warp,)
    return WarpedSpec(interval, fibers, warps, **kw)


def _oracle_spectrum(spec, s):
    chart = to_chart(spec)
    x = chart.center.copy()
    x[0] = s
    geo = PointGeometry(chart, x, depth=2)
    return generalized_eigenvalues(geo.ric.value, geo.g.value), float(geo.scalar.value)


def test_connection_summary_examples():
    assert connection_summary(_spec(ClosedForm.make("linear", a=1.0)), 2.0)[0] == pytest.approx(0.5)
    assert connection_summary(_spec(ClosedForm.make("const", c=1.5)), 2.0)[0] == 0.0
    sin = ClosedForm.make("sin", a=1.0, w=1.0)
    assert connection_summary(_spec(sin), math.pi / 4)[0] == pytest.approx(1.0)


@pytest.mark.parametrize("case,lam,base,fiber,scalar", [
    ("gaussian", 1.0, 0.0, 0.0, 0.0),
    ("cylinder", 2.0, 0.0, 2.0, 6.0),
    ("sphere", 3.0, 3.0, 3.0, 12.0),
])
def test_closed_form_fixtures(case, lam, base, fiber, scalar):
    spec, state = known_solution(case, 4, lam)
    s = state.s + 0.3
    rs = ricci_closed_form(spec, s)
    assert rs.base == pytest.approx(base, abs=1e-12)
    assert rs.fibers[0] == pytest.approx(fiber, abs=1e-12)
    assert rs.multiplicities == (3,)
    assert scalar_closed_form(spec, s) == pytest.approx(scalar, abs=1e-12)
    eig, oracle_scalar = _oracle_spectrum(spec, s)
    assert np.allclose(eig, sorted(rs.eigenvalues()), atol=1e-6)
    assert oracle_scalar == pytest.approx(scalar, abs=1e-5)


def test_two_fiber_closed_form_matches_oracle():
    fibers = (FiberSpec(2, 1.0, "sphere"), FiberSpec(2, -0.5, "hyperbolic"))
    warps = (ClosedForm.make("cosh", a=1.0, w=0.7), ClosedForm.make("exp", a=0.8, w=-0.3))
    spec = WarpedSpec((0.0, 2.0), fibers, warps, ClosedForm.make("cubic", a=0.2), lam=0.5)
    for s in (0.3, 1.1, 1.8):
        eig, scal = _oracle_spectrum(spec, s)
        assert np.allclose(eig, sorted(ricci_closed_form(spec, s).eigenvalues()), atol=1e-10)
        assert scal == pytest.approx(scalar_closed_form(spec, s), abs=1e-10)


_WARPS = st.sampled_from([("cosh", {"a": 1.0, "w": 0.5}), ("exp", {"a": 1.2, "w": 0.4}),
                          ("linear", {"a": 0.7, "b": 1.0}), ("quadratic", {"a": 0.3, "b": 0.1, "c": 1.0})])


@settings(max_examples=15, deadline=None)
@given(w1=_WARPS, w2=_WARPS, k1=st.floats(-1.5, 1.5), s=st.floats(0.1, 0.9), r1=st.integers(2, 3))
def test_closed_form_agrees_with_oracle_property(w1, w2, k1, s, r1):
    k1 = 0.0 if abs(k1) < 1e-3 else k1
    model = "sphere" if k1 > 0 else ("hyperbolic" if k1 < 0 else "flat")
    fibers = (FiberSpec(r1, k1, model), FiberSpec(1, 0.0, "flat"))
    spec = WarpedSpec((0.0, 1.0), fibers, (ClosedForm.make(w1[0], **w1[1]), ClosedForm.make(w2[0], **w2[1])))
    eig, scal = _oracle_spectrum(spec, s)
    assert np.allclose(eig, sorted(ricci_closed_form(spec, s).eigenvalues()), atol=1e-9)
    assert scal == pytest.approx(scalar_closed_form(spec, s), abs=1e-9)


def test_along_s_matches_pointwise_values():
    spec, _ = known_solution("sphere", 5, 4.0)
    jets = along_s(spec, 1.0, 3)
    assert float(jets["R"].value) == pytest.approx(20.0)
    assert float(jets["h"][0].derivative((2,))) == pytest.approx(-math.sin(1.0))
    assert float(jets["lambda_fib"][0].value) == pytest.approx(4.0)


def test_fiber_count_examples():
    f2 = (FiberSpec(2, 1.0, "sphere"), FiberSpec(2, 1.0, "sphere"))
    lin = ClosedForm.make("linear", a=1.0)
    assert fiber_count(WarpedSpec((0.1, 1.0), f2, (lin, ClosedForm.make("linear", a=2.0)))) == 1
    assert fiber_count(WarpedSpec((0.1, 1.0), f2, (ClosedForm.make("const", c=1.0), lin))) == 1
    assert fiber_count(WarpedSpec((0.1, 1.0), f2, (lin, ClosedForm.make("sin", a=1.0, w=1.0)))) == 2


def test_rescale_fiber_preserves_geometry():
    spec = _spec(ClosedForm.make("sin", a=1.0, w=1.0))
    scaled = rescale_fiber(spec, 0, 2.5)
    assert scaled.fibers[0].einstein_const == pytest.approx(2.0 * 2.5 ** 2)
    a, b = ricci_closed_form(spec, 1.2), ricci_closed_form(scaled, 1.2)
    assert a.base == pytest.approx(b.base) and a.fibers[0] == pytest.approx(b.fibers[0])


def test_sampled_function_tracks_closed_form():
    s = np.linspace(0.0, 2.0, 201)
    f = SampledFunction(s, np.cosh(s))
    assert float(f(1.3)) == pytest.approx(math.cosh(1.3), abs=1e-8)
    spec = WarpedSpec((0.0, 2.0), (S3,), (f,))
    assert connection_summary(spec, 1.3)[0] == pytest.approx(math.tanh(1.3), abs=1e-6)


def test_fiber_spec_validation_and_model_charts():
    with pytest.raises(ValueError):
        FiberSpec(3, -1.0, "sphere")
    with pytest.raises(ValueError):
        FiberSpec(1, 1.0, "flat")
    with pytest.raises(ValueError):
        FiberSpec(3, 1.0, "flat")
    assert FiberSpec(3, 2.0, "sphere").einstein_defect() < 1e-10
    assert FiberSpec(3, -4.0, "hyperbolic").einstein_defect() < 1e-10
    assert FiberSpec(4, 3.0, "sphere").mu == pytest.approx(1.0)


def test_warped_spec_validation():
    lin = ClosedForm.make("linear", a=1.0)
    with pytest.raises(DimensionError):
        WarpedSpec((0.1, 1.0), (FiberSpec(2, 1.0, "sphere"),), (lin,))
    with pytest.raises(ValueError):
        _spec(ClosedForm.make("linear", a=1.0, b=-1.0))
    with pytest.raises(DimensionError):
        WarpedSpec((0.1, 1.0), (S3, S3), (lin,))
    with pytest.raises(DomainError):
        ricci_closed_form(_spec(lin), 5.0)


def test_closed_form_registry_round_trip():
    cf = ClosedForm.make("tanh", a=2.0, w=0.5)
    assert cf.to_dict() == {"kind": "closed_form", "name": "tanh", "params": {"a": 2.0, "w": 0.5}}
    assert "sinh" in ClosedForm.names()
    with pytest.raises(ValueError):
        ClosedForm.make("bessel")
