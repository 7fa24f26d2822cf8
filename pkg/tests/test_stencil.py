import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from zsnft.stencil import BoundaryDecayWarning, check_boundary, derivative, derivatives


def test_fourth_derivative_of_quartic():
    t = np.arange(-2, 3, dtype=float)
    assert derivative(t**4, 1.0, 4)[2] == 24


def test_second_and_first_of_square():
    tau = 1.0
    t = np.arange(-3, 4, dtype=float) * tau
    q = t**2
    assert np.isclose(derivative(q, tau, 2, 4)[3], 2, rtol=0, atol=1e-14)
    i = int(np.argmin(abs(t - 1)))
    assert np.isclose(derivative(q, tau, 1, 4)[i], 2, rtol=0, atol=1e-14)


def test_first_derivative_order():
    errs = []
    taus = [0.1, 0.05, 0.025, 0.0125]
    for tau in taus:
        t = tau * np.arange(-4, 5)
        errs.append(abs(derivative(np.sin(t), tau, 1, 4)[4] - 1))
    order = np.polyfit(np.log(taus), np.log(errs), 1)[0]
    assert order >= 3.9


@pytest.mark.parametrize("order,acc", [(1, 2), (1, 4), (2, 2), (2, 4), (3, 2), (4, 2)])
def test_polynomial_exactness(order, acc):
    # reproduces derivatives of polynomials up to degree order + acc - 1
    tau = 0.3
    t = tau * np.arange(-6, 7)
    rng = np.random.default_rng(order * 10 + acc)
    c = rng.normal(size=order + acc)
    p = np.polynomial.Polynomial(c)
    got = derivative(p(t), tau, order, acc)[2:-2]
    want = p.deriv(order)(t)[2:-2]
    assert np.allclose(got, want, rtol=1e-12, atol=1e-9 * np.abs(c).max() / tau**order * 1e-3)


def test_table_layout():
    q = np.exp(-np.linspace(-5, 5, 41) ** 2)
    tab = derivatives(q, 0.25)
    assert len(tab) == len(q)
    assert np.array_equal(tab[1], derivative(q, 0.25, 1, 4))
    assert np.array_equal(tab[3], derivative(q, 0.25, 3, 2))
    tab2 = derivatives(q, 0.25, accuracy=2)
    assert np.array_equal(tab2[2], derivative(q, 0.25, 2, 2))


def test_too_short():
    with pytest.raises(ValueError):
        derivative(np.ones(4), 1.0, 1)


def test_unknown_stencil():
    with pytest.raises(ValueError):
        derivative(np.ones(9), 1.0, 3, 4)


samples = arrays(complex, 12, elements=st.complex_numbers(max_magnitude=10, allow_nan=False))


@settings(max_examples=100)
@given(samples, samples, st.floats(-3, 3), st.floats(-3, 3))
def test_linearity(q1, q2, alpha, beta):
    tau = 0.5
    for k in range(1, 5):
        lhs = derivatives(alpha * q1 + beta * q2, tau)[k]
        rhs = alpha * derivatives(q1, tau)[k] + beta * derivatives(q2, tau)[k]
        scale = 1 + np.abs(q1).max() + np.abs(q2).max()
        assert np.allclose(lhs, rhs, rtol=0, atol=1e-12 * scale / tau**k)


def test_zero_extension_has_no_effect_inside():
    q = np.zeros(30, complex)
    q[4:-4] = np.random.default_rng(3).normal(size=22)
    padded = np.concatenate([np.zeros(10), q, np.zeros(10)])
    a = derivatives(q, 0.1)
    b = derivatives(padded, 0.1)
    for k in range(1, 5):
        assert np.array_equal(a[k], b[k][10:-10])


def test_boundary_warning():
    with pytest.warns(BoundaryDecayWarning):
        assert not check_boundary(np.ones(10))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert check_boundary(np.r_[0, np.ones(5), 1e-12])
