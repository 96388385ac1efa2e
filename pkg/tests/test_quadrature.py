import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ckls.errors import DivergentTail, NonFiniteEvaluation
from ckls.quadrature import integrate_below_log, integrate_finite, integrate_halfline_log


def test_linear_exact():
    res = integrate_finite(lambda x: x, 0.0, 1.0, 1e-12)
    assert abs(res.value - 0.5) < 1e-12
    assert res.converged


def test_sine():
    res = integrate_finite(np.sin, 0.0, math.pi, 1e-10)
    assert abs(res.value - 2.0) < 1e-10
    assert res.abs_error_estimate <= 1e-10


def test_nan_integrand():
    with pytest.raises(NonFiniteEvaluation):
        integrate_finite(lambda x: np.full_like(x, np.nan), 0.0, 1.0)


def test_reversed_and_empty_interval():
    assert integrate_finite(np.cos, 1.0, 0.0).value == pytest.approx(-math.sin(1.0), abs=1e-12)
    assert integrate_finite(np.cos, 2.0, 2.0).value == 0.0


def test_relative_tolerance_accepts_large_values():
    f = lambda x: 1e20 * np.exp(x)
    assert not integrate_finite(f, 0.0, 40.0, 1e-12, max_intervals=50).converged
    res = integrate_finite(f, 0.0, 40.0, 1e-12, rel_tol=1e-13)
    assert res.converged
    assert res.value == pytest.approx(1e20 * math.expm1(40.0), rel=1e-12)


def test_gamma_two():
    res = integrate_halfline_log(lambda r: np.log(r) - r, 1.0, 1e-12)
    assert abs(res.value - 1.0) < 1e-10


def test_lognormal_type_integrand():
    # int_0^inf exp(-(ln r)^2) dr = sqrt(pi) * exp(1/4)
    res = integrate_halfline_log(lambda r: -np.log(r) ** 2, 1.0, 1e-12)
    assert abs(res.value - math.sqrt(math.pi) * math.exp(0.25)) < 1e-8


def test_lognormal_over_r_is_sqrt_pi():
    res = integrate_halfline_log(lambda r: -np.log(r) ** 2 - np.log(r), 1.0, 1e-12)
    assert abs(res.value - math.sqrt(math.pi)) < 1e-8


def test_one_over_r_diverges():
    with pytest.raises(DivergentTail):
        integrate_halfline_log(lambda r: -np.log(r), 1.0)


def test_huge_negative_log_values_do_not_underflow():
    # Gamma(223, rate 1111): log of the normalizer is far below the double range
    shape, rate = 2000.0 / 9.0, 10000.0 / 9.0
    res = integrate_halfline_log(lambda r: (shape - 1) * np.log(r) - rate * r, 0.2, 1e-12)
    exact = math.lgamma(shape) - shape * math.log(rate)
    assert res.log_value == pytest.approx(exact, abs=1e-10)


def test_below_matches_gamma_cdf():
    from scipy.stats import gamma
    res = integrate_below_log(lambda r: np.log(r) - r, 1.5, 1e-12)
    assert res.value == pytest.approx(gamma.cdf(1.5, 2.0), rel=1e-10)


@settings(max_examples=25, deadline=None)
@given(st.floats(min_value=0.05, max_value=20.0), st.floats(min_value=0.5, max_value=5.0))
def test_scale_consistency(c, shape):
    # f(c r) c over the half-line integrates to the same value as f
    logf = lambda r: (shape - 1) * np.log(r) - r
    tol = 1e-12
    base = integrate_halfline_log(logf, 1.0, tol).value
    scaled = integrate_halfline_log(lambda r: logf(c * r) + math.log(c), 1.0, tol).value
    assert abs(scaled - base) <= 10 * tol * base + 1e-14


def test_tightening_tolerance_never_increases_error():
    f = lambda x: np.exp(-x) * np.cos(5 * x)
    errors = [integrate_finite(f, 0.0, 10.0, tol).abs_error_estimate for tol in (1e-4, 1e-8, 1e-12)]
    assert errors[0] >= errors[1] >= errors[2]


def test_deterministic():
    f = lambda r: 2.5 * np.log(r) - 3 * r
    assert integrate_halfline_log(f, 1.0) == integrate_halfline_log(f, 1.0)
