"""Algebra of 2x2 complex matrices in the Pauli basis.

A matrix is stored as ``z0*s0 + z1*s1 + z2*s2 + z3*s3`` where ``s0`` is the
identity and ``s1, s2, s3`` are the Pauli matrices.  The coordinates may be
complex scalars or numpy arrays of a common broadcastable shape, so one
``Mat2`` can hold a whole batch of matrices (e.g. one per grid node and
spectral point).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

# |lambda| below which cosh and sinh(l)/l switch to Maclaurin series
SMALL_LAMBDA = 1e-4


@dataclass(frozen=True)
class Mat2:
    z0: Any
    z1: Any
    z2: Any
    z3: Any

    @classmethod
    def from_entries(cls, m11, m12, m21, m22) -> "Mat2":
        return cls(
            0.5 * (m11 + m22),
            0.5 * (m12 + m21),
            0.5j * (m12 - m21),
            0.5 * (m11 - m22),
        )

    @classmethod
    def identity(cls) -> "Mat2":
        return cls(1.0 + 0j, 0j, 0j, 0j)

    def entries(self):
        """Return ``(m11, m12, m21, m22)``."""
        return (
            self.z0 + self.z3,
            self.z1 - 1j * self.z2,
            self.z1 + 1j * self.z2,
            self.z0 - self.z3,
        )

    def to_array(self) -> np.ndarray:
        """Dense form with the two matrix axes last, shape ``(..., 2, 2)``."""
        m11, m12, m21, m22 = np.broadcast_arrays(*map(np.asarray, self.entries()))
        return np.stack([np.stack([m11, m12], -1), np.stack([m21, m22], -1)], -2)

    @property
    def shape(self):
        return np.broadcast_shapes(*(np.shape(c) for c in self.coords))

    @property
    def coords(self):
        return (self.z0, self.z1, self.z2, self.z3)

    @property
    def is_traceless(self):
        return np.all(self.z0 == 0)

    def __getitem__(self, idx) -> "Mat2":
        b = np.broadcast_arrays(*map(np.asarray, self.coords))
        return Mat2(*(c[idx] for c in b))

    def __add__(self, other: "Mat2") -> "Mat2":
        return Mat2(*(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "Mat2") -> "Mat2":
        return Mat2(*(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "Mat2":
        return Mat2(*(-a for a in self.coords))

    def scale(self, alpha) -> "Mat2":
        return Mat2(*(alpha * a for a in self.coords))

    def __matmul__(self, other: "Mat2") -> "Mat2":
        a0, a1, a2, a3 = self.coords
        b0, b1, b2, b3 = other.coords
        # s_j s_k = delta_jk s0 + i eps_jkl s_l
        return Mat2(
            a0 * b0 + a1 * b1 + a2 * b2 + a3 * b3,
            a0 * b1 + a1 * b0 + 1j * (a2 * b3 - a3 * b2),
            a0 * b2 + a2 * b0 + 1j * (a3 * b1 - a1 * b3),
            a0 * b3 + a3 * b0 + 1j * (a1 * b2 - a2 * b1),
        )

    def commutator(self, other: "Mat2") -> "Mat2":
        return self @ other - other @ self

    def det(self):
        return self.z0**2 - self.z1**2 - self.z2**2 - self.z3**2

    def trace(self):
        return 2 * self.z0

    def adjugate(self) -> "Mat2":
        """Adjugate; equals the inverse for unit-determinant matrices."""
        return Mat2(self.z0, -self.z1, -self.z2, -self.z3)

    def dagger(self) -> "Mat2":
        return Mat2(*(np.conj(c) for c in self.coords))

    def apply(self, v1, v2):
        """Matrix-vector product with the column ``(v1, v2)``."""
        m11, m12, m21, m22 = self.entries()
        return m11 * v1 + m12 * v2, m21 * v1 + m22 * v2

    def norm(self):
        """Frobenius norm."""
        return np.sqrt(2 * sum(np.abs(c) ** 2 for c in self.coords))


@dataclass(frozen=True)
class EvenOddCoeffs:
    """Even part ``c`` and odd part divided by lambda of a matrix function."""

    c: Any
    s_over_lambda: Any


def decompose(m) -> Mat2:
    """Pauli coordinates of a dense ``(..., 2, 2)`` matrix."""
    m = np.asarray(m)
    return Mat2.from_entries(m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1])


def lambda_squared(z: Mat2):
    return z.z1**2 + z.z2**2 + z.z3**2


def eigen_lambda(z: Mat2):
    """Principal square root of ``z1^2 + z2^2 + z3^2``.

    The sign is irrelevant downstream: every consumer is even in lambda or
    divides the odd part by lambda.
    """
    return np.sqrt(np.asarray(lambda_squared(z), dtype=complex))


def apply_even_odd(z: Mat2, coeffs: EvenOddCoeffs) -> Mat2:
    s = coeffs.s_over_lambda
    return Mat2(coeffs.c * np.ones_like(z.z1), s * z.z1, s * z.z2, s * z.z3)


def cosh_sinhc(lam):
    """``cosh(lam)`` and ``sinh(lam)/lam`` with a series branch near zero."""
    lam = np.asarray(lam, dtype=complex)
    mu = lam * lam
    small = np.abs(lam) < SMALL_LAMBDA
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.cosh(lam)
        s = np.where(small, 1.0, np.sinh(lam) / np.where(small, 1.0, lam))
    c_ser = 1 + mu / 2 + mu**2 / 24 + mu**3 / 720
    s_ser = 1 + mu / 6 + mu**2 / 120 + mu**3 / 5040
    c = np.where(small, c_ser, c)
    s = np.where(small, s_ser, s)
    if c.ndim == 0:
        return complex(c), complex(s)
    return c, s


def matexp(z: Mat2) -> Mat2:
    """Exponential of a traceless matrix, ``cosh(l) s0 + sinh(l)/l Z``."""
    c, s = cosh_sinhc(eigen_lambda(z))
    return apply_even_odd(z, EvenOddCoeffs(c, s))
