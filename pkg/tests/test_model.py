import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ckls.errors import AlphaOutOfRange, InvalidDynamics, NonPositiveParameter
from ckls.model import (
    CklsParams,
    PolyDynamics,
    ckls_as_poly,
    highest_degree,
    lowest_coeff,
    lowest_degree,
    make_ckls,
    polyval,
)

positive = st.floats(min_value=1e-4, max_value=10.0, allow_nan=False)
alphas = st.floats(min_value=0.5, max_value=1.0)


def test_table_block_is_valid():
    p = make_ckls(0.1, 0.5, 0.03, 0.5, 1.0)
    assert p.mu == pytest.approx(0.2)
    assert p.as_dict() == {"beta1": 0.1, "beta2": 0.5, "sigma": 0.03, "alpha": 0.5, "r0": 1.0}


def test_alpha_below_range():
    with pytest.raises(AlphaOutOfRange):
        make_ckls(0.1, 0.5, 0.03, 0.4, 1.0)


@pytest.mark.parametrize("bad", [
    (0.0, 0.5, 0.03, 0.5, 1.0),
    (0.1, -0.5, 0.03, 0.5, 1.0),
    (0.1, 0.5, 0.0, 0.5, 1.0),
    (0.1, 0.5, 0.03, 0.5, 0.0),
    (float("nan"), 0.5, 0.03, 0.5, 1.0),
])
def test_nonpositive_rejected(bad):
    with pytest.raises(NonPositiveParameter):
        make_ckls(*bad)


def test_validation_errors_are_value_errors():
    with pytest.raises(ValueError):
        make_ckls(0.1, 0.5, 0.03, 1.5, 1.0)


def test_replace_revalidates():
    p = make_ckls(0.1, 0.5, 0.03, 0.5, 1.0)
    assert p.replace(alpha=1.0).alpha == 1.0
    with pytest.raises(AlphaOutOfRange):
        p.replace(alpha=2.0)


def test_cir_poly_form():
    dyn = ckls_as_poly(make_ckls(0.1, 0.5, 0.03, 0.5, 1.0))
    assert dyn.drift_coeffs == (0.1, -0.5)
    assert dyn.c1 == pytest.approx(9e-4, rel=1e-14)
    assert dyn.k == 1.0
    assert dyn.s == 0 and dyn.c2 == 0.1


def test_alpha_one_poly_form():
    dyn = ckls_as_poly(make_ckls(0.2, 0.7, 0.05, 1.0, 0.5))
    assert dyn.drift_coeffs == (0.2, -0.7)
    assert dyn.k == 2.0
    x = np.array([0.3, 1.0, 4.0])
    np.testing.assert_allclose(np.exp(dyn.log_variance(x)), 0.05 ** 2 * x ** 2, rtol=1e-14)


@given(positive, positive, positive, alphas, positive)
def test_ckls_poly_invariants(b1, b2, sig, a, r0):
    p = make_ckls(b1, b2, sig, a, r0)
    dyn = ckls_as_poly(p)
    assert dyn.s == 0
    assert dyn.c2 == p.beta1 > 0
    assert dyn.b0 == 0.0
    x = np.array([0.01, 0.5, 3.0])
    np.testing.assert_allclose(dyn.diffusion(x), sig * x ** a, rtol=1e-12)


@given(positive, positive, positive, alphas, positive)
def test_construction_is_pure(b1, b2, sig, a, r0):
    assert make_ckls(b1, b2, sig, a, r0) == make_ckls(b1, b2, sig, a, r0)
    assert ckls_as_poly(make_ckls(b1, b2, sig, a, r0)) == ckls_as_poly(make_ckls(b1, b2, sig, a, r0))


def test_degree_helpers():
    c = (0.0, 0.0, 3.0, 0.0, -1.0, 0.0)
    assert lowest_degree(c) == 2
    assert lowest_coeff(c) == 3.0
    assert highest_degree(c) == 4
    with pytest.raises(InvalidDynamics):
        lowest_degree((0.0, 0.0))


def test_tiny_coefficient_is_not_zero():
    # no epsilon snapping: 1e-300 still counts as the lowest term
    assert lowest_degree((1e-300, 1.0)) == 0


def test_polyval_matches_numpy():
    c = [0.3, -1.2, 0.5, 2.0]
    x = np.linspace(-2, 2, 11)
    np.testing.assert_allclose(polyval(c, x), np.polynomial.polynomial.polyval(x, c), rtol=1e-14)


@pytest.mark.parametrize("diff", [(1.0, -1.0), (-1.0, 0.0, 1.0), (0.0, 0.0), (1.0, -3.0, 1.0)])
def test_diffusion_base_must_be_positive(diff):
    with pytest.raises(InvalidDynamics):
        PolyDynamics((0.1, -0.5), diff, 0.5)


def test_params_are_frozen():
    p = make_ckls(0.1, 0.5, 0.03, 0.5, 1.0)
    with pytest.raises(AttributeError):
        p.beta1 = 1.0
    assert isinstance(p, CklsParams)
    assert math.isclose(p.mu, 0.2)


def test_zero_drift_allowed():
    dyn = PolyDynamics((0.0,), (0.0, 1.0), 0.5)
    assert dyn.s == 0 and dyn.c2 == 0.0
