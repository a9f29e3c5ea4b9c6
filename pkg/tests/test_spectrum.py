from __future__ import annotations

import math

import numpy as np
import pytest

from solitonlab.errors import SingularPointError
from solitonlab.ode import integrate, known_solution, random_initial_data, trajectory_spec
from solitonlab.oracle import FiniteDifferenceEngine
from solitonlab.spectrum import (coeffs_BC, count_distinct_eigenvalues, csv_header, identity_residuals,
                                 laplacian_checks, poly_residual, residual_names, spectrum_at, trajectory_samples)
from solitonlab.warped import ClosedForm, FiberSpec, WarpedSpec, along_s

S3 = FiberSpec(3, 2.0, "sphere")


def _fixture(case, lam):
    return known_solution(case, 4, lam)[0]


def test_spectrum_at_examples():
    g = spectrum_at(_fixture("gaussian", 1.0), 2.0)
    assert (g.lambda1, g.fiber_eigs[0]) == pytest.approx((0.0, 0.0), abs=1e-14)
    assert g.xi[0] == pytest.approx(0.5) and g.xi_from_spectrum[0] == pytest.approx(0.5)
    c = spectrum_at(_fixture("cylinder", 2.0), 1.0)
    assert (c.lambda1, c.fiber_eigs[0]) == pytest.approx((0.0, 2.0), abs=1e-14)
    assert c.xi[0] == 0.0 and c.xi_from_spectrum[0] == pytest.approx(0.0, abs=1e-14)
    sp = spectrum_at(_fixture("sphere", 3.0), 1.0)
    assert sp.singular and sp.xi_from_spectrum is None
    assert sp.xi[0] == pytest.approx(1.0 / math.tan(1.0))
    assert sp.eigenvalues() == pytest.approx([3.0] * 4)


def test_coeffs_bc_examples():
    g = coeffs_BC(_fixture("gaussian", 1.0), 1.0)
    assert (g["B"], g["C"]) == pytest.approx((2.0, 1.0))
    # on the cylinder B(s) = -4 s^2 / (2 s) = -2 s
    c = coeffs_BC(_fixture("cylinder", 2.0), 1.0)
    assert (c["B"], c["C"], c["B_prime"], c["C_prime"]) == pytest.approx((-2.0, 2.0, -2.0, 0.0), abs=1e-12)
    with pytest.raises(SingularPointError):
        coeffs_BC(_fixture("sphere", 3.0), 1.0)


def test_coeffs_bc_finite_difference_engine_agrees():
    spec = _fixture("gaussian", 1.0)
    exact = coeffs_BC(spec, 1.3)
    fd = coeffs_BC(spec, 1.3, FiniteDifferenceEngine(1e-3, richardson=True))
    # B = 3/s - s, so B' = -3/s^2 - 1
    assert exact["B_prime"] == pytest.approx(-3 / 1.3 ** 2 - 1)
    for key in exact:
        assert fd[key] == pytest.approx(exact[key], abs=1e-6)


@pytest.mark.parametrize("case,lam", [("gaussian", 1.0), ("cylinder", 2.0)])
def test_identities_vanish_on_fixtures(case, lam):
    spec = _fixture(case, lam)
    for s in (1.0, 1.7, 2.4):
        res = identity_residuals(spectrum_at(spec, s))
        assert set(res) == set(residual_names(1))
        assert max(abs(v) for v in res.values()) < 1e-12
        assert max(abs(v) for v in poly_residual(spectrum_at(spec, s))) < 1e-12


def test_gaussian_quadratic_by_hand():
    s = 1.6
    sample = spectrum_at(_fixture("gaussian", 1.0), s)
    xi, B, C = 1 / s, 3 / s - s, 1.0
    assert (sample.coeffB, sample.coeffC) == pytest.approx((B, C))
    assert xi * xi - B * xi - C == pytest.approx(-2 / s ** 2)


def test_non_soliton_negative_control():
    spec = WarpedSpec((0.5, 1.5), (S3,), (ClosedForm.make("linear", a=1.0),), ClosedForm.make("cubic", a=1.0),
                      lam=1.0)
    res = identity_residuals(spectrum_at(spec, 1.0))
    assert abs(res["quadratic_bc_1"]) > 0.1


def test_mismatched_einstein_constant_breaks_root_polynomial():
    spec = _fixture("gaussian", 1.0)
    wrong = WarpedSpec(spec.interval, (FiberSpec(3, 2.2, "sphere"),), spec.warps, spec.potential, spec.lam)
    assert abs(poly_residual(spectrum_at(wrong, 1.5))[0]) > 1e-2


def test_singular_samples_leave_residuals_undefined():
    sample = spectrum_at(_fixture("sphere", 3.0), 1.0)
    res = identity_residuals(sample)
    assert res["quadratic_bc_1"] is None and res["riccati_1"] is None
    assert res["base_curvature_1"] == pytest.approx(0.0, abs=1e-12)
    assert res["base_soliton"] == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(SingularPointError):
        poly_residual(sample)


@pytest.mark.parametrize("case,lam", [("gaussian", 1.0), ("cylinder", 2.0), ("sphere", 3.0)])
def test_laplacian_checks_fixtures(case, lam):
    spec = _fixture(case, lam)
    chk = laplacian_checks(spec, 1.2, oracle=True)
    assert chk.max_imbalance < 1e-9
    assert ("radial_laplacian" in chk.pairs) == (case != "sphere")
    if case == "cylinder":
        assert chk.pairs["weighted_laplacian"] == pytest.approx((0.0, 0.0), abs=1e-12)
    if case == "sphere":
        assert chk.pairs["weighted_laplacian"][1] == pytest.approx(0.0, abs=1e-12)


def test_radial_laplacian_sign_on_nontrivial_trajectory():
    rng = np.random.default_rng(3)
    fibers, state, lam = random_initial_data(rng, 4, 1, lam=1.0)
    traj = integrate(state, fibers, lam, (state.s, state.s + 1.0))
    spec = trajectory_spec(traj)
    s = 0.5 * (traj.s[0] + traj.s[-1])
    chk = laplacian_checks(spec, s, oracle=True)
    assert chk.max_imbalance < 1e-8
    oracle, used = chk.pairs["oracle_laplacian"]
    R = along_s(spec, s, 4)["R"]
    assert abs(R.derivative((1,))) > 1e-2
    # negating the first-order term moves the prediction well away from the oracle
    assert abs(oracle - (2 * R.derivative((2,)) - used)) > 1e-2


def test_count_distinct_eigenvalues():
    for case, lam, expected in (("cylinder", 2.0, 2), ("gaussian", 1.0, 1)):
        spec, state = known_solution(case, 4, lam)
        traj = integrate(state, spec.fibers, lam, (state.s, state.s + 1.0))
        assert count_distinct_eigenvalues(traj).max_count == expected
    rng = np.random.default_rng(21)
    for _ in range(3):
        fibers, state, lam = random_initial_data(rng, 6, 2)
        traj = integrate(state, fibers, lam, (state.s, state.s + 1.0))
        assert count_distinct_eigenvalues(traj).max_count <= 3


def test_trajectory_samples_satisfy_identities():
    rng = np.random.default_rng(5)
    fibers, state, lam = random_initial_data(rng, 5, 2)
    traj = integrate(state, fibers, lam, (state.s, state.s + 1.0))
    samples = trajectory_samples(traj)
    assert len(samples) == len(traj.s)
    worst = max(abs(v) for smp in samples for v in smp.residuals.values() if v is not None)
    assert worst < 1e-4


def test_csv_header_layout():
    assert csv_header(2)[:7] == ["s", "f", "fp", "h_1", "hp_1", "h_2", "hp_2"]
    assert csv_header(1)[-1] == "base_soliton"
    assert csv_header(2)[-len(residual_names(2)):] == residual_names(2)
