"""Per-node matrix Z as Pauli-coordinate polynomials in ``z = tau*zeta``.

All quantities here are dimensionless: with ``q^(k)`` the k-th time
derivative of the potential, the builders work with ``tau**(k+1) * q^(k)``.
The closed forms are the primary path; :func:`build_generic_z` assembles Z
from explicit commutators and is kept as an independent cross-check.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import Mat2
from .stencil import derivatives

# (k1, k2, k3, k4, k5) of the generic sixth-order Z
PADE3_K = (0.0, 1 / 720, 0.0, 1 / 720, 0.0)
CAYLEY_K = (-1 / 12, -1 / 480, -1 / 96, 1 / 120, 1 / 120)


def k_from_a(a2, a3, a4=0.0, a5=0.0):
    """k-coefficients of the generic Z for ``F(z) = 1 + z/2 + a2 z^2 + ...``."""
    k1 = a2 - 2 * a3 - 1 / 12
    k2 = (k1 + 1 / 30) / 24
    k3 = k1 / 8
    k4 = -(k1 - 1 / 60) / 12
    k5 = (
        1 / 120 - a2 / 4 + a3 / 2 + 2 * a2**2 - 10 * a2 * a3 + 12 * a3**2 + a4 - 2 * a5
    )
    return (k1, k2, k3, k4, k5)


@dataclass(frozen=True)
class ZPoly:
    """Coefficients (ascending powers of z) of z1, z2, z3 for every node.

    Each array has shape ``(n_nodes, degree + 1)``.
    """

    z1: np.ndarray
    z2: np.ndarray
    z3: np.ndarray

    @classmethod
    def from_entries(cls, z11, z12, z21) -> "ZPoly":
        z11, z12, z21 = (np.atleast_2d(np.asarray(p, dtype=complex)) for p in (z11, z12, z21))
        deg = max(p.shape[1] for p in (z11, z12, z21))
        z11, z12, z21 = (_pad(p, deg) for p in (z11, z12, z21))
        return cls(0.5 * (z12 + z21), 0.5j * (z12 - z21), z11)

    @property
    def degree(self) -> int:
        return self.z1.shape[1] - 1

    @property
    def n_nodes(self) -> int:
        return self.z1.shape[0]

    def __len__(self):
        return self.n_nodes

    def __getitem__(self, idx) -> "ZPoly":
        if isinstance(idx, (int, np.integer)):
            idx = slice(idx, idx + 1 if idx != -1 else None)
        return ZPoly(self.z1[idx], self.z2[idx], self.z3[idx])

    def entries(self):
        """Coefficient arrays of ``Z11, Z12, Z21``."""
        return self.z3, self.z1 - 1j * self.z2, self.z1 + 1j * self.z2

    def trimmed(self) -> "ZPoly":
        """Drop leading coefficients that vanish at every node."""
        coef = np.abs(np.stack([self.z1, self.z2, self.z3])).max(axis=(0, 1))
        nz = np.nonzero(coef)[0]
        n = nz[-1] + 1 if len(nz) else 1
        return ZPoly(self.z1[:, :n], self.z2[:, :n], self.z3[:, :n])

    def derivative(self) -> "ZPoly":
        """d/dz of every coordinate polynomial."""
        k = np.arange(1, self.degree + 1)
        if self.degree == 0:
            zero = np.zeros((self.n_nodes, 1), complex)
            return ZPoly(zero, zero, zero)
        return ZPoly(*(p[:, 1:] * k for p in (self.z1, self.z2, self.z3)))

    def evaluate(self, z) -> Mat2:
        """Z at dimensionless ``z``; coordinates have shape ``(n_nodes, *z.shape)``."""
        z = np.asarray(z, dtype=complex)
        return Mat2(0j, *(polyval_nodes(p, z) for p in (self.z1, self.z2, self.z3)))


def _pad(p, deg):
    if p.shape[1] == deg:
        return p
    out = np.zeros((p.shape[0], deg), complex)
    out[:, : p.shape[1]] = p
    return out


def polyval_nodes(coef, z):
    """Evaluate per-node polynomials ``coef[n, k] z**k`` for all n and z."""
    z = np.asarray(z)
    shape = (coef.shape[0],) + (1,) * z.ndim
    out = np.broadcast_to(coef[:, -1].reshape(shape), (coef.shape[0],) + z.shape).copy()
    for k in range(coef.shape[1] - 2, -1, -1):
        out *= z
        out += coef[:, k].reshape(shape)
    return out


def dimensionless_derivatives(q, tau, table=None):
    """Return ``[tau*q, tau**2 q', tau**3 q'', tau**4 q''', tau**5 q'''']``."""
    q = np.asarray(q, dtype=complex)
    if table is None:
        table = derivatives(q, tau)
    return [tau * q] + [tau ** (k + 1) * table[k] for k in range(1, 5)]


def _qr_lists(q, tau, sigma, table, r):
    qs = dimensionless_derivatives(q, tau, table)
    if r is None:
        rs = [-sigma * np.conj(x) for x in qs]
    else:
        rs = dimensionless_derivatives(r, tau)
    return qs, rs


def build_z_first_order(q, tau, sigma=1, r=None) -> ZPoly:
    """``Z = tau*Q``: the matrix used by the second-order baselines."""
    q = np.asarray(q, dtype=complex)
    qt = tau * q
    rt = -sigma * np.conj(qt) if r is None else tau * np.asarray(r, dtype=complex)
    n = len(q)
    zero = np.zeros(n, complex)
    z11 = np.stack([zero, np.full(n, -1j)], 1)
    return ZPoly.from_entries(z11, qt[:, None], rt[:, None])


def build_z_exponential(q, tau, sigma=1, table=None, r=None) -> ZPoly:
    """Closed-form Z of the sixth-order exponential scheme (degree 3 in z)."""
    (q0, q1, q2, q3, q4), (r0, r1, r2, r3, r4) = _qr_lists(q, tau, sigma, table, r)
    qr = q0 * r0
    w = r0 * q1 - q0 * r1
    z11 = [
        (15 - qr) * w / 180 + (r0 * q3 - q0 * r3 + q1 * r2 - r1 * q2) / 480,
        -1j * (1 - (r0 * q2 + q0 * r2) / 360 + q1 * r1 / 60),
        w / 180,
    ]
    z12 = [
        q0 + q0 * (r0 * q2 - q0 * r2) / 360 - w * q1 / 120 + q2 / 24 + q4 / 1920,
        1j * (q1 / 6 + q3 / 240 - qr * q1 / 90),
        -q2 / 180,
        1j * q1 / 90,
    ]
    z21 = [
        r0 + r0 * (q0 * r2 - r0 * q2) / 360 + w * r1 / 120 + r2 / 24 + r4 / 1920,
        -1j * (r1 / 6 + r3 / 240 - qr * r1 / 90),
        -r2 / 180,
        -1j * r1 / 90,
    ]
    return ZPoly.from_entries(*(_stack(p, len(q0)) for p in (z11, z12, z21)))


def build_z_cayley(q, tau, sigma=1, table=None, r=None) -> ZPoly:
    """Closed-form Z of the sixth-order canonical-Cayley scheme (degree 5 in z)."""
    (q0, q1, q2, q3, q4), (r0, r1, r2, r3, r4) = _qr_lists(q, tau, sigma, table, r)
    qr = q0 * r0
    n = len(q0)
    z11 = [
        (
            6 * q0 * qr * r1 - 6 * q1 * qr * r0 - 40 * q0 * r1 - r3 * q0
            + 40 * q1 * r0 + q1 * r2 - r1 * q2 + q3 * r0
        ) / 480,
        -1j / 480 * (4 * qr**2 - 40 * qr - 3 * q0 * r2 + 8 * q1 * r1 - 3 * r0 * q2 + 480),
        -(q0 * r1 - r0 * q1) / 80,
        1j * (qr - 5) / 60,
        np.zeros(n),
        np.full(n, -1j / 120),
    ]
    z12 = [
        -q1**2 * r0 / 120 + q1 * r1 * q0 / 120 - qr * q2 / 240 - q0 * qr / 12
        + q0 * qr**2 / 120 + q4 / 1920 + q2 / 24 + q0 - q0**2 * r2 / 160,
        1j * (q1 / 6 - qr * q1 / 40 + q3 / 240),
        q0 / 12 - q2 / 480 - q0 * qr / 60,
        1j * q1 / 40,
        q0 / 120,
    ]
    z21 = [
        -r1**2 * q0 / 120 + q1 * r1 * r0 / 120 - qr * r2 / 240 - r0 * qr / 12
        + r0 * qr**2 / 120 + r4 / 1920 + r2 / 24 + r0 - r0**2 * q2 / 160,
        -1j * (r1 / 6 - qr * r1 / 40 + r3 / 240),
        r0 / 12 - r2 / 480 - r0 * qr / 60,
        -1j * r1 / 40,
        r0 / 120,
    ]
    return ZPoly.from_entries(*(_stack(p, n) for p in (z11, z12, z21)))


def _stack(coefs, n):
    return np.stack([np.broadcast_to(np.asarray(c, dtype=complex), (n,)) for c in coefs], 1)


def build_generic_z(k_coeffs, q, tau, zeta, sigma=1, table=None, r=None, node=None) -> Mat2:
    """Z from the generic commutator expansion at spectral point ``zeta``.

    Independent of the closed forms; used to validate them.  Returns a
    batch over nodes (or the single ``node``).
    """
    k1, k2, k3, k4, k5 = k_coeffs
    qs, rs = _qr_lists(q, tau, sigma, table, r)
    if node is not None:
        qs = [x[node] for x in qs]
        rs = [x[node] for x in rs]
    z = tau * zeta

    def offdiag(a, b):
        return Mat2.from_entries(0 * a, a, b, 0 * a)

    Q = offdiag(qs[0], rs[0]) + Mat2(0j, 0j, 0j, -1j * z)
    Q1, Q2, Q3, Q4 = (offdiag(qs[k], rs[k]) for k in range(1, 5))

    def c(a, b):
        return a.commutator(b)

    Qcube = Q @ Q @ Q
    Z3 = Q2.scale(1 / 24) + c(Q1, Q).scale(1 / 12) + Qcube.scale(k1)
    Z5 = (
        Q4.scale(1 / 1920)
        + c(Q3, Q).scale(1 / 480)
        + c(Q1, Q2).scale(1 / 480)
        + c(c(Q, Q1), Q1).scale(1 / 240)
        + c(c(Q2, Q), Q).scale(k2)
        + (Q @ Q2 @ Q).scale(k3)
        + c(Qcube, Q1).scale(k4)
        + c(Q @ Q1 @ Q, Q).scale(1 / 240)
        + (Qcube @ Q @ Q).scale(k5)
    )
    return Q + Z3 + Z5
