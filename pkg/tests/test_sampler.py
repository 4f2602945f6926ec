"""Tests for the correlated samplers and the correlation sweep driver."""

import math

import numpy as np
import pytest

import fieldcorr as fc
from fieldcorr.calibration import exact_inversion, tan_fit_calibration
from fieldcorr.errors import NonStationaryChainError
from fieldcorr.sampler import (
    SamplerMode,
    ShiftChain,
    correlation_sweep,
    estimate_lag1,
    estimate_lag_covariance,
    first_draw_scale,
    innovation_scale,
    lag1_covariance_law,
    marginal_variance_law,
    mode_by_name,
)
from fieldcorr.streams import PURPOSE_GENERIC, derived_stream

SEED = 5

ALL_MODES = (SamplerMode.PAIR, SamplerMode.CHAIN_RAW, SamplerMode.CHAIN_NORMALIZED)


def _stream(index):
    return derived_stream(SEED, PURPOSE_GENERIC, index)


# ---------------------------------------------------------------------------
# mode helpers and scale laws
# ---------------------------------------------------------------------------


def test_mode_by_name():
    assert mode_by_name("pair") is SamplerMode.PAIR
    assert mode_by_name("chain-raw") is SamplerMode.CHAIN_RAW
    assert mode_by_name("chain-normalized") is SamplerMode.CHAIN_NORMALIZED
    with pytest.raises(ValueError):
        mode_by_name("loop")


def test_covariance_law_values():
    assert lag1_covariance_law(0.5, 1.0, SamplerMode.CHAIN_RAW) == pytest.approx(2.0 / 3.0)
    assert lag1_covariance_law(0.5, 1.0, SamplerMode.PAIR) == 0.5
    assert lag1_covariance_law(0.5, 2.0, SamplerMode.CHAIN_NORMALIZED) == 1.0
    assert lag1_covariance_law(0.0, 1.0, SamplerMode.CHAIN_RAW) == 0.0


def test_variance_law_values():
    assert marginal_variance_law(0.5, 1.0, SamplerMode.CHAIN_RAW) == pytest.approx(4.0 / 3.0)
    assert marginal_variance_law(0.9, 1.7, SamplerMode.PAIR) == 1.7
    assert marginal_variance_law(0.9, 1.7, SamplerMode.CHAIN_NORMALIZED) == 1.7


def test_scale_laws():
    assert innovation_scale(0.6, 1.0, SamplerMode.CHAIN_NORMALIZED) == pytest.approx(0.8)
    assert innovation_scale(0.6, 1.0, SamplerMode.CHAIN_RAW) == 1.0
    assert first_draw_scale(0.6, 1.0, SamplerMode.CHAIN_RAW) == pytest.approx(1.25)
    assert first_draw_scale(0.6, 1.0, SamplerMode.PAIR) == 1.0


# ---------------------------------------------------------------------------
# ShiftChain construction
# ---------------------------------------------------------------------------


def test_rejects_shift_out_of_range():
    with pytest.raises(ValueError):
        ShiftChain(1.2, 1.0, SamplerMode.PAIR, _stream(0))
    with pytest.raises(ValueError):
        ShiftChain(float("nan"), 1.0, SamplerMode.PAIR, _stream(0))


def test_rejects_bad_sigma2():
    with pytest.raises(ValueError):
        ShiftChain(0.5, 0.0, SamplerMode.PAIR, _stream(0))
    with pytest.raises(ValueError):
        ShiftChain(0.5, -1.0, SamplerMode.PAIR, _stream(0))


def test_raw_chain_rejects_unit_shift():
    with pytest.raises(NonStationaryChainError):
        ShiftChain(1.0, 1.0, SamplerMode.CHAIN_RAW, _stream(0))
    with pytest.raises(NonStationaryChainError):
        ShiftChain(-1.0, 1.0, SamplerMode.CHAIN_RAW, _stream(0))


def test_unit_shift_allowed_elsewhere():
    # A normalized chain at f = 1 degenerates to a frozen value and a
    # pair sampler simply doubles its second member; both are valid.
    ShiftChain(1.0, 1.0, SamplerMode.CHAIN_NORMALIZED, _stream(0))
    ShiftChain(1.0, 1.0, SamplerMode.PAIR, _stream(0))


def test_draw_rejects_nonpositive_count():
    chain = ShiftChain(0.5, 1.0, SamplerMode.PAIR, _stream(0))
    with pytest.raises(ValueError):
        chain.draw(0)


# ---------------------------------------------------------------------------
# draw semantics
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("mode", ALL_MODES, ids=lambda m: m.value)
def test_draw_matches_repeated_draw_next(mode):
    a = ShiftChain(0.37, 1.3, mode, _stream(1))
    b = ShiftChain(0.37, 1.3, mode, _stream(1))
    bulk = a.draw(101)
    single = np.array([b.draw_next() for _ in range(101)])
    np.testing.assert_array_equal(bulk, single)


@pytest.mark.parametrize("mode", ALL_MODES, ids=lambda m: m.value)
def test_draw_chunking_is_invisible(mode):
    # Odd chunk sizes exercise the pair-parity carry across calls.
    a = ShiftChain(0.37, 1.3, mode, _stream(1))
    b = ShiftChain(0.37, 1.3, mode, _stream(1))
    bulk = a.draw(101)
    chunked = np.concatenate([b.draw(7), b.draw(3), b.draw(91)])
    np.testing.assert_array_equal(bulk, chunked)


def test_zero_shift_is_iid():
    chain = ShiftChain(0.0, 4.0, SamplerMode.CHAIN_RAW, _stream(2))
    raw = _stream(2)
    np.testing.assert_allclose(chain.draw(64), 2.0 * raw.normals(64), rtol=1e-15)


def test_normalized_unit_shift_freezes():
    chain = ShiftChain(1.0, 1.0, SamplerMode.CHAIN_NORMALIZED, _stream(3))
    x = chain.draw(16)
    np.testing.assert_allclose(x, x[0], rtol=0.0, atol=0.0)


def test_pair_second_member_shifts():
    chain = ShiftChain(0.8, 1.0, SamplerMode.PAIR, _stream(4))
    x = chain.draw(10)
    z = _stream(4).normals(10)
    np.testing.assert_allclose(x[0::2], z[0::2], rtol=1e-15)
    np.testing.assert_allclose(x[1::2], z[1::2] + 0.8 * z[0::2], rtol=1e-14)


# ---------------------------------------------------------------------------
# covariance estimates against the laws
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("mode", ALL_MODES, ids=lambda m: m.value)
@pytest.mark.parametrize("f", [-0.6, -0.3, 0.3, 0.6])
def test_lag1_estimate_matches_law(mode, f):
    index = ALL_MODES.index(mode) * 4 + [-0.6, -0.3, 0.3, 0.6].index(f)
    est, stderr = estimate_lag1(f, 1.0, mode, 10**5, _stream(index))
    law = lag1_covariance_law(f, 1.0, mode)
    assert abs(est - law) < 5.0 * stderr
    assert stderr < 0.02


def test_raw_chain_lag2_estimate():
    est, stderr = estimate_lag_covariance(
        0.5, 1.0, SamplerMode.CHAIN_RAW, 10**5, _stream(100), lag=2
    )
    law = 0.25 / (1.0 - 0.25)
    assert abs(est - law) < 5.0 * stderr


@pytest.mark.parametrize("mode", ALL_MODES, ids=lambda m: m.value)
def test_marginal_variance_matches_law(mode):
    chain = ShiftChain(0.6, 1.0, mode, _stream(200 + ALL_MODES.index(mode)))
    x = chain.draw(10**5)
    if mode is SamplerMode.PAIR:
        # Pair marginals alternate between sigma2 and sigma2 (1 + f^2);
        # the pooled variance averages the two.
        law = 0.5 * (1.0 + (1.0 + 0.36))
    else:
        law = marginal_variance_law(0.6, 1.0, mode)
    assert np.var(x) == pytest.approx(law, rel=0.02)


def test_outcomes_stay_gaussian():
    chain = ShiftChain(0.3, 1.0, SamplerMode.CHAIN_NORMALIZED, _stream(300))
    x = chain.draw(10**6)
    standardized = x / np.std(x)
    assert np.mean(standardized**4) == pytest.approx(3.0, abs=0.1)


def test_estimate_validation():
    with pytest.raises(ValueError):
        estimate_lag_covariance(0.5, 1.0, SamplerMode.PAIR, 1, _stream(0))
    with pytest.raises(ValueError):
        estimate_lag_covariance(0.5, 1.0, SamplerMode.PAIR, 10**4, _stream(0), lag=2)
    with pytest.raises(ValueError):
        estimate_lag_covariance(0.5, 1.0, SamplerMode.CHAIN_RAW, 10**4, _stream(0), lag=0)
    with pytest.raises(ValueError):
        estimate_lag_covariance(0.5, 1.0, SamplerMode.CHAIN_RAW, 3, _stream(0), lag=3)


# ---------------------------------------------------------------------------
# correlation sweep
# ---------------------------------------------------------------------------


def _rows_equal(a, b):
    if a.feasible != b.feasible:
        return False
    if not a.feasible:
        return math.isnan(b.c_simulated) and math.isnan(b.stderr)
    return a.c_simulated == b.c_simulated and a.stderr == b.stderr


def test_sweep_grid_and_defaults():
    kernel = fc.unit_variance_quartic()
    res = correlation_sweep(
        kernel, exact_inversion(SamplerMode.CHAIN_RAW),
        n_points=9, t0_max=8.0, steps_per_point=500, seed=0,
    )
    assert res.sigma2 == kernel.variance
    assert len(res.rows) == 9
    t0 = [r.t0 for r in res.rows]
    np.testing.assert_allclose(t0, np.linspace(0.0, 8.0, 9), rtol=1e-15)
    for row in res.rows:
        assert row.c_analytic == pytest.approx(kernel.eval(row.t0), rel=1e-14)
        assert row.n_steps == 500


def test_sweep_reasonable_accuracy():
    res = correlation_sweep(
        fc.unit_variance_quartic(), exact_inversion(SamplerMode.PAIR),
        n_points=41, steps_per_point=20_000, seed=10,
    )
    assert res.n_infeasible == 0
    assert res.rms_deviation < 0.02
    assert res.max_abs_deviation < 0.06


def test_sweep_tanfit_runs():
    res = correlation_sweep(
        fc.squeezed_cosine(1.0), tan_fit_calibration(SamplerMode.CHAIN_RAW),
        n_points=17, steps_per_point=4000, seed=10,
    )
    assert res.n_infeasible == 0
    assert res.method_label == "tanfit"
    assert all(abs(r.f_shift) < 1.0 for r in res.rows)


def test_sweep_marks_infeasible_rows():
    # A pair sampler at sigma2 = 0.5 cannot reach |c| up to 1.
    res = correlation_sweep(
        fc.squeezed_cosine(1.0), exact_inversion(SamplerMode.PAIR),
        n_points=25, steps_per_point=2000, seed=4, sigma2=0.5,
    )
    assert 0 < res.n_infeasible < len(res.rows)
    for row in res.rows:
        if row.feasible:
            assert math.isfinite(row.c_simulated)
        else:
            assert abs(row.c_analytic) > 0.5
            assert math.isnan(row.f_shift)
            assert math.isnan(row.c_simulated)
            assert math.isnan(row.stderr)
    # Summary statistics skip the infeasible rows.
    assert math.isfinite(res.rms_deviation)
    assert math.isfinite(res.max_abs_deviation)


def test_sweep_is_reproducible():
    kwargs = dict(n_points=25, t0_max=8.0, steps_per_point=2000, seed=4, sigma2=0.5)
    kernel = fc.squeezed_cosine(1.0)
    a = correlation_sweep(kernel, exact_inversion(SamplerMode.PAIR), **kwargs)
    b = correlation_sweep(kernel, exact_inversion(SamplerMode.PAIR), **kwargs)
    assert all(_rows_equal(x, y) for x, y in zip(a.rows, b.rows))


def test_sweep_threads_do_not_change_values():
    kwargs = dict(n_points=25, t0_max=8.0, steps_per_point=2000, seed=4, sigma2=0.5)
    kernel = fc.squeezed_cosine(1.0)
    serial = correlation_sweep(kernel, exact_inversion(SamplerMode.PAIR), **kwargs)
    threaded = correlation_sweep(
        kernel, exact_inversion(SamplerMode.PAIR), threads=4, **kwargs
    )
    assert all(_rows_equal(x, y) for x, y in zip(serial.rows, threaded.rows))


def test_sweep_seed_changes_noise():
    kwargs = dict(n_points=9, steps_per_point=2000)
    kernel = fc.unit_variance_quartic()
    a = correlation_sweep(kernel, exact_inversion(SamplerMode.CHAIN_RAW), seed=0, **kwargs)
    b = correlation_sweep(kernel, exact_inversion(SamplerMode.CHAIN_RAW), seed=1, **kwargs)
    assert any(x.c_simulated != y.c_simulated for x, y in zip(a.rows, b.rows))


def test_sweep_validation():
    kernel = fc.unit_variance_quartic()
    calib = exact_inversion(SamplerMode.CHAIN_RAW)
    with pytest.raises(ValueError):
        correlation_sweep(kernel, calib, n_points=1)
    with pytest.raises(ValueError):
        correlation_sweep(kernel, calib, t0_max=0.0)
    with pytest.raises(ValueError):
        correlation_sweep(kernel, calib, steps_per_point=10)
