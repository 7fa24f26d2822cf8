"""One-step transition matrices ``T = c(l) s0 + s(l)/l Z`` for every scheme.

Rational schemes are handled as functions of ``mu = lambda**2``: each has a
numerator for ``c``, a numerator for ``s/lambda`` and a shared denominator,
all polynomials in ``mu`` (ascending coefficients).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .pauli import EvenOddCoeffs, Mat2, cosh_sinhc
from .zbuilder import ZPoly, build_z_cayley, build_z_exponential, build_z_first_order

POLE_GUARD = 1e-300


class PoleProximityError(ArithmeticError):
    """A rational coefficient was evaluated at (or next to) a pole."""


@dataclass(frozen=True)
class Rational:
    c_num: tuple
    s_num: tuple
    den: tuple
    F: tuple  # F(z) of the Cayley form F(z)/F(-z), ascending


CAYLEY = Rational((1, 1 / 4), (1,), (1, -1 / 4), (1, 1 / 2))
PADE3 = Rational(
    (1, 9 / 20, 11 / 600, 1 / 14400),
    (1, 7 / 60, 1 / 600),
    (1, -1 / 20, 1 / 600, -1 / 14400),
    (1, 1 / 2, 1 / 10, 1 / 120),
)
PADE4 = Rational(
    (1, 13 / 28, 289 / 11760, 19 / 70560, 1 / 2822400),
    (1, 11 / 84, 37 / 11760, 1 / 70560),
    (1, -1 / 28, 3 / 3920, -1 / 70560, 1 / 2822400),
    (1, 1 / 2, 3 / 28, 1 / 84, 1 / 1680),
)


class SchemeKind(enum.Enum):
    ES6 = "ES6"
    ES6_PADE3 = "ES6_Pade3"
    ES6_PADE4 = "ES6_Pade4"
    ES6_CAYLEY = "ES6_Cayley"
    BO2 = "BO2"
    CN2 = "CN2"

    @classmethod
    def parse(cls, name: str) -> "SchemeKind":
        for k in cls:
            if name.lower() in (k.value.lower(), k.name.lower()):
                return k
        raise ValueError(f"unknown scheme {name!r}")

    @property
    def rational(self):
        return {
            SchemeKind.ES6_PADE3: PADE3,
            SchemeKind.ES6_PADE4: PADE4,
            SchemeKind.ES6_CAYLEY: CAYLEY,
            SchemeKind.CN2: CAYLEY,
        }.get(self)

    @property
    def order(self) -> int:
        return 2 if self in (SchemeKind.BO2, SchemeKind.CN2) else 6

    def build_z(self, q, tau, sigma=1, table=None) -> ZPoly:
        if self in (SchemeKind.BO2, SchemeKind.CN2):
            return build_z_first_order(q, tau, sigma)
        if self is SchemeKind.ES6_CAYLEY:
            return build_z_cayley(q, tau, sigma, table)
        return build_z_exponential(q, tau, sigma, table)

    @cached_property
    def z_star(self) -> float:
        """Smallest root modulus of F(z); infinite for the exponential kinds."""
        rat = self.rational
        if rat is None:
            return np.inf
        return float(np.abs(np.roots(rat.F[::-1])).min())


def _polyval(coef, x):
    out = np.zeros_like(x) + coef[-1]
    for c in coef[-2::-1]:
        out = out * x + c
    return out


def _dpolyval(coef, x):
    return _polyval([k * c for k, c in enumerate(coef)][1:] or [0.0], x)


def _check_pole(den):
    if np.any(np.abs(den) < POLE_GUARD):
        raise PoleProximityError("rational coefficient denominator vanishes")


def coeffs_mu(kind: SchemeKind, mu) -> EvenOddCoeffs:
    """``(c, s/lambda)`` as functions of ``mu = lambda**2``."""
    mu = np.asarray(mu, dtype=complex)
    rat = kind.rational
    if rat is None:
        return EvenOddCoeffs(*cosh_sinhc(np.sqrt(mu)))
    den = _polyval(rat.den, mu)
    _check_pole(den)
    return EvenOddCoeffs(_polyval(rat.c_num, mu) / den, _polyval(rat.s_num, mu) / den)


def coeffs(kind: SchemeKind, lam) -> EvenOddCoeffs:
    lam = np.asarray(lam, dtype=complex)
    return coeffs_mu(kind, lam * lam)


def _sinhc_series_dmu(mu, terms=12):
    # d/dmu of sum mu^k/(2k+1)!
    out = np.zeros_like(mu)
    fact = 6.0
    for k in range(1, terms):
        out = out + k * mu ** (k - 1) / fact
        fact *= (2 * k + 2) * (2 * k + 3)
    return out


def coeff_derivatives_mu(kind: SchemeKind, mu):
    """``dc/dmu`` and ``d(s/lambda)/dmu``."""
    mu = np.asarray(mu, dtype=complex)
    rat = kind.rational
    if rat is None:
        lam = np.sqrt(mu)
        c, s = cosh_sinhc(lam)
        small = np.abs(mu) < 0.25
        safe = np.where(small, 1.0, mu)
        dc = s / 2
        ds = np.where(small, _sinhc_series_dmu(mu), (c - s) / (2 * safe))
        return dc, ds
    den = _polyval(rat.den, mu)
    _check_pole(den)
    dden = _dpolyval(rat.den, mu)
    cn, sn = _polyval(rat.c_num, mu), _polyval(rat.s_num, mu)
    dc = (_dpolyval(rat.c_num, mu) * den - cn * dden) / den**2
    ds = (_dpolyval(rat.s_num, mu) * den - sn * dden) / den**2
    return dc, ds


def transition_from_z(kind: SchemeKind, z: Mat2) -> Mat2:
    mu = z.z1**2 + z.z2**2 + z.z3**2
    co = coeffs_mu(kind, mu)
    s = co.s_over_lambda
    return Mat2(co.c, s * z.z1, s * z.z2, s * z.z3)


def transition(kind: SchemeKind, zpoly: ZPoly, zeta, tau: float) -> Mat2:
    """Transition matrices of every node in ``zpoly`` at spectral points ``zeta``."""
    return transition_from_z(kind, zpoly.evaluate(tau * np.asarray(zeta)))


def transition_with_derivative(kind: SchemeKind, zpoly: ZPoly, zeta, tau: float, dpoly=None):
    """``(T, dT/dzeta)`` at every node and spectral point."""
    z = tau * np.asarray(zeta, dtype=complex)
    Z = zpoly.evaluate(z)
    dZ = (dpoly if dpoly is not None else zpoly.derivative()).evaluate(z).scale(tau)
    mu = Z.z1**2 + Z.z2**2 + Z.z3**2
    dmu = 2 * (Z.z1 * dZ.z1 + Z.z2 * dZ.z2 + Z.z3 * dZ.z3)
    co = coeffs_mu(kind, mu)
    dc, ds = coeff_derivatives_mu(kind, mu)
    s = co.s_over_lambda
    T = Mat2(co.c, s * Z.z1, s * Z.z2, s * Z.z3)
    dT = Mat2(
        dc * dmu,
        ds * dmu * Z.z1 + s * dZ.z1,
        ds * dmu * Z.z2 + s * dZ.z2,
        ds * dmu * Z.z3 + s * dZ.z3,
    )
    return T, dT


def transition_derivative(kind: SchemeKind, zpoly: ZPoly, zeta, tau: float) -> Mat2:
    return transition_with_derivative(kind, zpoly, zeta, tau)[1]


def free_factor(kind: SchemeKind, zeta, tau: float, exact: bool = False):
    """One-step free propagation factor ``phi`` (``T11`` at q = 0) and ``dphi/dzeta``.

    With ``exact`` the continuous plane-wave factor ``exp(-i tau zeta)`` is
    used instead of the scheme's own.
    """
    zeta = np.asarray(zeta, dtype=complex)
    if exact:
        phi = np.exp(-1j * tau * zeta)
        return phi, -1j * tau * phi
    zp = kind.build_z(np.zeros(5), tau)[2].trimmed()
    T, dT = transition_with_derivative(kind, zp, zeta, tau)
    return T.z0[0] + T.z3[0], dT.z0[0] + dT.z3[0]


def free_inverse_factor(kind: SchemeKind, zeta, tau: float, exact: bool = False):
    """``T22`` at q = 0, i.e. ``1/phi`` as the scheme itself rounds it."""
    zeta = np.asarray(zeta, dtype=complex)
    if exact:
        return np.exp(1j * tau * zeta)
    zp = kind.build_z(np.zeros(5), tau)[2].trimmed()
    T = transition(kind, zp, zeta, tau)
    return T.z0[0] - T.z3[0]


def free_log_phase(kind: SchemeKind, zeta, tau: float, exact: bool = False):
    """``log phi`` continued from ``-i tau zeta`` (no branch cut is crossed)."""
    zeta = np.asarray(zeta, dtype=complex)
    phi, _ = free_factor(kind, zeta, tau, exact)
    z = tau * zeta
    return -1j * z + np.log(phi * np.exp(1j * z))


@dataclass(frozen=True)
class ApplicabilityReport:
    passed: bool
    worst_ratio: float
    max_lambda: float
    z_star: float


def applicability(kind: SchemeKind, zpoly: ZPoly, spectral_domain, tau: float,
                  chunk: int = 256) -> ApplicabilityReport:
    """Compare ``max |lambda|`` over nodes and sampled zeta with ``|z*|``."""
    zeta = np.ravel(np.asarray(spectral_domain, dtype=complex))
    lam_max = 0.0
    for i in range(0, len(zeta), chunk):
        Z = zpoly.evaluate(tau * zeta[i : i + chunk])
        mu = Z.z1**2 + Z.z2**2 + Z.z3**2
        lam_max = max(lam_max, float(np.sqrt(np.abs(mu)).max()))
    ratio = lam_max / kind.z_star
    return ApplicabilityReport(bool(ratio < 1), ratio, lam_max, kind.z_star)
