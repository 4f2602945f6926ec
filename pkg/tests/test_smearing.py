"""Double-integral verification of the smeared scalar correlation."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from fieldcorr.errors import QuadratureConvergenceError
from fieldcorr.kernels import eval_scalar
from fieldcorr.smearing import (SmearingPoint, SmearingSpec,
                                lorentzian, lorentzian_derivative,
                                smeared_correlation_quadrature, tail_bound,
                                verify_closed_form)


def test_lorentzian_peak_value():
    assert lorentzian(0.0) == pytest.approx(1.0 / math.pi, rel=1e-15)


def test_lorentzian_normalization():
    value, _ = quad(lorentzian, -np.inf, np.inf)
    assert value == pytest.approx(1.0, abs=1e-10)


def test_derivative_closed_form_value():
    assert lorentzian_derivative(1.0) == pytest.approx(-1.0 / (2.0 * math.pi),
                                                       rel=1e-15)
    assert lorentzian_derivative(0.0) == 0.0


def test_derivative_matches_finite_difference():
    t, h = 0.7, 1e-6
    numeric = (lorentzian(t + h) - lorentzian(t - h)) / (2.0 * h)
    assert lorentzian_derivative(t) == pytest.approx(numeric, abs=1e-8)


def test_derivative_is_odd():
    t = np.linspace(0.1, 5.0, 20)
    np.testing.assert_allclose(lorentzian_derivative(-t),
                               -lorentzian_derivative(t), rtol=0.0, atol=0.0)


def test_spec_validation():
    with pytest.raises(ValueError):
        SmearingSpec(alpha=0.0)
    with pytest.raises(ValueError):
        SmearingSpec(truncation_T=10.0)
    with pytest.raises(ValueError):
        SmearingSpec(tau=2.0)
    with pytest.raises(ValueError):
        SmearingSpec(abs_tol=0.0)


def test_tail_bound_positive_and_shrinking():
    near = tail_bound(SmearingSpec(truncation_T=100.0))
    far = tail_bound(SmearingSpec(truncation_T=400.0))
    assert near > 0.0
    assert far < near


def test_quadrature_matches_closed_form_at_zero():
    value, bound = smeared_correlation_quadrature(0.0, SmearingSpec())
    assert bound < 1e-6
    assert value == pytest.approx(eval_scalar(0.0), abs=1e-6)


def test_quadrature_matches_closed_form_off_zero():
    value, bound = smeared_correlation_quadrature(1.0, SmearingSpec())
    assert bound < 1e-6
    assert value == pytest.approx(eval_scalar(1.0), abs=1e-6)


def test_alpha_independence():
    t0 = 1.0
    values = [smeared_correlation_quadrature(t0, SmearingSpec(alpha=a))[0]
              for a in (0.5, 2.0)]
    assert abs(values[0] - values[1]) < 1e-8


def test_symmetry_under_sign_of_separation():
    plus, _ = smeared_correlation_quadrature(1.5, SmearingSpec())
    minus, _ = smeared_correlation_quadrature(-1.5, SmearingSpec())
    assert plus == pytest.approx(minus, abs=1e-7)
    assert plus == pytest.approx(eval_scalar(1.5), abs=1e-6)


def test_tighter_tolerance_does_not_worsen_agreement():
    t0 = 0.5
    loose, _ = smeared_correlation_quadrature(t0, SmearingSpec(abs_tol=1e-5))
    tight, _ = smeared_correlation_quadrature(t0, SmearingSpec(abs_tol=5e-6))
    dev_loose = abs(loose - eval_scalar(t0))
    dev_tight = abs(tight - eval_scalar(t0))
    assert dev_tight <= dev_loose + 1e-7


def test_unattainable_tolerance_raises():
    with pytest.raises(QuadratureConvergenceError) as err:
        smeared_correlation_quadrature(2.0, SmearingSpec(abs_tol=1e-30))
    assert err.value.achieved_bound > 1e-30


def test_verify_closed_form_report():
    rep = verify_closed_form([0.0, 2.0], SmearingSpec())
    assert len(rep.points) == 2
    assert rep.all_converged
    assert rep.passed
    assert rep.max_abs_dev < 1e-6
    point = rep.points[0]
    assert point.csv_values()[0] == point.t0
    assert len(point.csv_values()) == len(SmearingPoint.CSV_HEADER)


def test_verify_closed_form_captures_failures():
    rep = verify_closed_form([1.0], SmearingSpec(abs_tol=1e-30))
    assert not rep.all_converged
    assert not rep.passed


def test_verify_closed_form_rejects_bad_grid():
    with pytest.raises(ValueError):
        verify_closed_form([], SmearingSpec())
    with pytest.raises(ValueError):
        verify_closed_form([np.nan], SmearingSpec())
