import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import smooth_potential
from zsnft.pauli import Mat2
from zsnft.zbuilder import (
    CAYLEY_K,
    PADE3_K,
    build_generic_z,
    build_z_cayley,
    build_z_exponential,
    build_z_first_order,
    k_from_a,
)

BUILDERS = {"exp": (build_z_exponential, PADE3_K), "cayley": (build_z_cayley, CAYLEY_K)}


def rel(a: Mat2, b: Mat2):
    return np.max(np.abs(a.to_array() - b.to_array())) / np.max(np.abs(b.to_array()))


def test_k_sets_from_generating_polynomial():
    assert np.allclose(k_from_a(1 / 10, 1 / 120), PADE3_K, atol=1e-16)
    assert np.allclose(k_from_a(0, 0), CAYLEY_K, atol=1e-16)


def test_generic_with_zero_k_and_constant_q_is_tau_q():
    n, tau, zeta = 11, 0.2, 0.7 + 0.1j
    q = np.full(n, 1.3 - 0.4j)
    Z = build_generic_z((0,) * 5, q, tau, zeta, node=5)
    want = Mat2.from_entries(-1j * tau * zeta, tau * q[5], -np.conj(tau * q[5]), 1j * tau * zeta)
    assert rel(Z, want) < 1e-15


@pytest.mark.parametrize("which", ["exp", "cayley"])
@pytest.mark.parametrize("seed", range(5))
def test_closed_form_matches_generic(which, seed):
    build, k = BUILDERS[which]
    rng = np.random.default_rng(seed)
    shape = (rng.uniform(0.5, 2), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-3, 3))
    tau = 0.05
    t = tau * (np.arange(301) - 150)
    q = smooth_potential(t, shape)
    sigma = int(rng.choice([1, -1]))
    zp = build(q, tau, sigma)
    for zeta in (rng.uniform(-20, 20), complex(rng.uniform(-5, 5), rng.uniform(0, 1))):
        ours = zp.evaluate(tau * zeta)
        generic = build_generic_z(k, q, tau, zeta, sigma)
        assert rel(ours, generic) <= 1e-12


def test_exponential_free():
    zp = build_z_exponential(np.zeros(9), 0.1).trimmed()
    z11, z12, z21 = zp.entries()
    assert np.all(z12 == 0) and np.all(z21 == 0)
    assert np.all(z11[:, 0] == 0) and np.all(z11[:, 1] == -1j)
    assert zp.degree == 1


def test_exponential_constant_q_is_tau_q():
    q = np.full(21, 0.8 + 0.6j)
    tau, zeta = 0.3, 1.7
    Z = build_z_exponential(q, tau)[10].evaluate(tau * zeta)
    want = Mat2.from_entries(-1j * tau * zeta, tau * q[0], -np.conj(tau * q[0]), 1j * tau * zeta)
    assert np.allclose(Z.to_array(), want.to_array(), rtol=0, atol=1e-16)


def test_cayley_free_series():
    zp = build_z_cayley(np.zeros(9), 0.1)
    z11 = zp.entries()[0][0]
    assert np.allclose(z11, [0, -1j, 0, -1j / 12, 0, -1j / 120], atol=1e-17)
    # inverse Cayley of exp(-iz) is -2i tan(z/2); compare the series
    z = sp.symbols("z")
    ser = sp.series(-2 * sp.I * sp.tan(z / 2), z, 0, 7).removeO()
    want = [complex(ser.coeff(z, k)) for k in range(6)]
    assert np.allclose(z11, want, atol=1e-17)


def _inverse_cayley_of_exp(tau, q, zeta):
    # 2 tanh(A/2) for traceless 2x2 A = tau*Q(zeta)
    A = Mat2.from_entries(-1j * tau * zeta, tau * q, -np.conj(tau * q), 1j * tau * zeta)
    lam = np.sqrt(complex(A.z1**2 + A.z2**2 + A.z3**2))
    return A.scale(2 * np.tanh(lam / 2) / lam)


def test_cayley_constant_q_residual_order():
    q, zeta = 1.1 - 0.3j, 0.9
    taus = [0.4, 0.2, 0.1, 0.05]
    res = []
    for tau in taus:
        Z = build_z_cayley(np.full(21, q), tau)[10].evaluate(tau * zeta)[0]
        res.append(rel(Z, _inverse_cayley_of_exp(tau, q, zeta)) * tau)
    slope = np.polyfit(np.log(taus), np.log(res), 1)[0]
    assert slope >= 6.8


@pytest.mark.parametrize("which", ["exp", "cayley"])
def test_skew_hermitian_on_real_axis(which):
    build = BUILDERS[which][0]
    tau = 0.1
    t = tau * (np.arange(201) - 100)
    zp = build(smooth_potential(t, (1.5, 0.3, 0.2, 2.0)), tau, 1)
    xi = np.linspace(-20, 20, 41)
    Z = zp.evaluate(tau * xi).to_array()
    assert np.max(np.abs(Z + np.conj(np.swapaxes(Z, -1, -2)))) <= 1e-13


@pytest.mark.parametrize("which", ["exp", "cayley"])
def test_parity_in_tau(which):
    build = BUILDERS[which][0]
    tau = 0.1
    t = tau * (np.arange(101) - 50)
    q = smooth_potential(t, (1.0, 0.5, 0.3, 1.0))
    zeta = 0.6 + 0.2j
    fwd = build(q, tau).evaluate(tau * zeta)
    back = build(q[::-1], -tau).evaluate(-tau * zeta)
    assert np.allclose(back.to_array()[::-1], -fwd.to_array(), rtol=0, atol=1e-14)


def test_degree_bounds():
    tau = 0.1
    t = tau * (np.arange(101) - 50)
    q = smooth_potential(t, (1.0, 0.5, 0.3, 1.0))
    z11, z12, z21 = build_z_exponential(q, tau).entries()
    assert z11.shape[1] - 1 <= 2 + 1  # stored to the common degree 3
    assert np.all(z11[:, 3] == 0)
    assert z12.shape[1] - 1 == 3
    c11, c12, c21 = build_z_cayley(q, tau).entries()
    assert c11.shape[1] - 1 == 5
    assert np.all(c12[:, 5] == 0) and np.all(c21[:, 5] == 0)
    assert np.any(c11[:, 5] != 0)


def test_first_order_is_tau_q():
    q = np.array([1, 2j, 3, 4, 5], complex)
    zp = build_z_first_order(q, 0.5, sigma=-1)
    Z = zp.evaluate(0.5 * 2.0)
    m11, m12, m21, _ = Z.entries()
    assert np.allclose(m11, -1j)
    assert np.allclose(m12, 0.5 * q)
    assert np.allclose(m21, 0.5 * np.conj(q))


def test_zpoly_indexing_and_derivative():
    tau = 0.2
    zp = build_z_cayley(np.linspace(0, 1, 9) + 0j, tau)
    assert len(zp) == 9 and len(zp[3]) == 1 and len(zp[-1]) == 1
    d = zp.derivative()
    z0, h = 0.3 + 0.1j, 1e-6
    fd = (zp.evaluate(z0 + h).to_array() - zp.evaluate(z0 - h).to_array()) / (2 * h)
    assert np.allclose(d.evaluate(z0).to_array(), fd, atol=1e-8)


@settings(max_examples=50, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-20, 20), st.sampled_from([1, -1]))
def test_evaluated_z_is_traceless(a, b, xi, sigma):
    tau = 0.1
    t = tau * (np.arange(41) - 20)
    q = smooth_potential(t, (a, b, 0.0, 1.0))
    for build in (build_z_exponential, build_z_cayley):
        Z = build(q, tau, sigma).evaluate(tau * xi)
        assert np.all(Z.z0 == 0)
        assert np.allclose(np.trace(Z.to_array(), axis1=-2, axis2=-1), 0)
