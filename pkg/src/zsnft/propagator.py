"""Conventional per-zeta scattering: Jost scan, a, b, a', invariants.

The scan runs over cells ``(t_n - tau/2, t_n + tau/2)`` for ``n = 0..M``,
i.e. from ``-L - tau/2`` to ``L + tau/2``.  Boundary phases use the scheme's
own free-propagation factor by default (``boundary="discrete"``) so that a
zero potential returns ``a = 1, b = 0`` exactly for every scheme;
``boundary="exact"`` uses the continuous plane-wave phases instead.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import trapezoid

from .pauli import Mat2
from .schemes import (
    SchemeKind,
    free_factor,
    free_inverse_factor,
    free_log_phase,
    transition,
    transition_with_derivative,
)
from .zbuilder import ZPoly

log = logging.getLogger(__name__)

# elements (nodes x zeta) evaluated per block of the scan
BLOCK_ELEMENTS = 1 << 17
# bound on tau*Im(zeta)*nodes inside one block (keeps phi^n far from overflow)
MAX_BLOCK_GROWTH = 200.0


class IllConditionedEigenvalueWarning(UserWarning):
    """Left and right Jost solutions do not match at the crossover."""


class DegenerateEigenvalueError(ValueError):
    """``a'`` vanishes at the supplied eigenvalue."""


@dataclass(frozen=True)
class PotentialGrid:
    """Samples ``q(t_n)`` on ``t_n = -L + tau*n``, ``n = 0..M``."""

    q: np.ndarray
    L: float
    sigma: int = 1

    def __post_init__(self):
        q = np.asarray(self.q, dtype=complex)
        if q.ndim != 1 or len(q) < 5:
            raise ValueError("potential needs at least 5 samples")
        if self.sigma not in (1, -1):
            raise ValueError("sigma must be +1 or -1")
        if not np.all(np.isfinite(q)):
            raise ValueError("potential has non-finite samples")
        object.__setattr__(self, "q", q)

    @classmethod
    def from_function(cls, f, L, M, sigma=1):
        # tau*(n - M/2) equals -L + tau*n and is exactly antisymmetric
        t = (2 * L / M) * (np.arange(M + 1) - 0.5 * M)
        return cls(np.asarray(f(t), dtype=complex), L, sigma)

    @property
    def M(self) -> int:
        return len(self.q) - 1

    @property
    def tau(self) -> float:
        return 2 * self.L / self.M

    @property
    def t(self) -> np.ndarray:
        return self.tau * (np.arange(self.M + 1) - 0.5 * self.M)

    def zpoly(self, kind: SchemeKind) -> ZPoly:
        return kind.build_z(self.q, self.tau, self.sigma).trimmed()


@dataclass
class ScatterResult:
    a: np.ndarray
    b: np.ndarray
    a_prime: Optional[np.ndarray] = None


@dataclass
class ScatteringData:
    xi: np.ndarray
    a: np.ndarray
    b: np.ndarray
    r: np.ndarray
    H: np.ndarray
    E_c: float
    sigma: int = 1
    a_prime: Optional[np.ndarray] = None


def _mul(A, B):
    a11, a12, a21, a22 = A
    b11, b12, b21, b22 = B
    return (
        a11 * b11 + a12 * b21,
        a11 * b12 + a12 * b22,
        a21 * b11 + a22 * b21,
        a21 * b12 + a22 * b22,
    )


def _add(A, B):
    return tuple(x + y for x, y in zip(A, B))


def _chain_product(T, dT=None):
    """Ordered product ``T[b-1] ... T[0]`` along axis 0 by pairwise reduction.

    With ``dT`` also returns the zeta-derivative of the product.
    """
    carry = []
    while T[0].shape[0] > 1:
        if T[0].shape[0] % 2:
            carry.append(([x[-1] for x in T], None if dT is None else [x[-1] for x in dT]))
            T = tuple(x[:-1] for x in T)
            if dT is not None:
                dT = tuple(x[:-1] for x in dT)
        lo = tuple(x[0::2] for x in T)
        hi = tuple(x[1::2] for x in T)
        if dT is not None:
            dlo = tuple(x[0::2] for x in dT)
            dhi = tuple(x[1::2] for x in dT)
            dT = _add(_mul(dhi, lo), _mul(hi, dlo))
        T = _mul(hi, lo)
    P = tuple(x[0] for x in T)
    dP = None if dT is None else tuple(x[0] for x in dT)
    for c, dc in reversed(carry):
        if dP is not None:
            dP = _add(_mul(dc, P), _mul(c, dP))
        P = _mul(c, P)
    return P, dP


def _entries(m: Mat2):
    return tuple(np.asarray(x) for x in np.broadcast_arrays(*m.entries()))


def _interaction_block(kind, zp, zeta, tau, n0, M, phase, dpoly=None):
    """Entries of ``K_n = D^-(n+1-c) T_n D^(n-c)`` for the nodes of ``zp``.

    ``D = diag(phi, 1/phi)`` is the one-step free propagator and
    ``c = (M+1)/2``; ``n0`` is the index of the first node in ``zp``.
    Dividing out the free motion keeps the diagonal of a free cell exactly
    one and puts the phase ``phi^-(2n-M)`` on the off-diagonal entries.
    """
    phi, dphi, psi, ell = phase
    n = n0 + np.arange(zp.n_nodes)
    m = (2 * n - M)[:, None]
    P = np.exp(-m * ell)
    Pi = np.exp(m * ell)
    # diagonal as 1 + deviation so that free cells give exactly 1
    if dpoly is None:
        t11, t12, t21, t22 = _entries(transition(kind, zp, zeta, tau))
        return (1 + (t11 - phi) / phi, t12 * P, t21 * Pi, 1 + (t22 - psi) * phi), None
    T, dT = transition_with_derivative(kind, zp, zeta, tau, dpoly)
    t11, t12, t21, t22 = _entries(T)
    d11, d12, d21, d22 = _entries(dT)
    dell = dphi / phi
    K = (1 + (t11 - phi) / phi, t12 * P, t21 * Pi, 1 + (t22 - psi) * phi)
    dK = (
        (d11 - t11 * dell) / phi,
        (d12 - m * dell * t12) * P,
        (d21 + m * dell * t21) * Pi,
        (d22 + t22 * dell) * phi,
    )
    return K, dK


def _free_phase(kind, zeta, tau, boundary):
    if boundary not in ("discrete", "exact"):
        raise ValueError(f"unknown boundary convention {boundary!r}")
    exact = boundary == "exact"
    phi, dphi = free_factor(kind, zeta, tau, exact)
    psi = free_inverse_factor(kind, zeta, tau, exact)
    ell = free_log_phase(kind, zeta, tau, exact)
    return phi, dphi, psi, ell


def _block_nodes(n_zeta, growth=0.0):
    """Nodes per block; ``growth = tau * max(Im zeta)`` caps the in-block free growth."""
    b = min(max(BLOCK_ELEMENTS // max(n_zeta, 1), 1), 2048)
    if growth > 0:
        b = min(b, max(8, int(MAX_BLOCK_GROWTH / growth)))
    return int(b)


def _rescale(m, dm, g):
    s = np.abs(m)
    off = (s > 1e100) | ((s < 1e-100) & (s > 0))
    if np.any(off):
        s = np.where(off, s, 1.0)
        m, dm, g = m / s, dm / s, g + np.log(s)
    return m, dm, g


def _scan(kind, zpoly: ZPoly, zeta, tau, with_derivative, boundary="discrete", block=None):
    """Propagate ``(1, 0)`` through all cells in the interaction picture.

    Every block is multiplied out in a picture centred near the block
    itself (the global centre shifted by an integer ``k``), and the two
    components carry separate log scales.  The free growth
    ``exp(+-Im(zeta) t)`` therefore never has to fit in one double.

    Returns ``(m1, m2, dm1, g1, g2)`` with ``a = m1*exp(g1)``,
    ``b = m2*exp(g2)`` and ``a' = dm1*exp(g1)``.
    """
    nz = len(zeta)
    M = zpoly.n_nodes - 1
    phase = _free_phase(kind, zeta, tau, boundary)
    phi, dphi, _, ell = phase
    dell = dphi / phi
    m1 = np.ones(nz, complex)
    m2 = np.zeros(nz, complex)
    dm1 = np.zeros(nz, complex)
    dm2 = np.zeros(nz, complex)
    g1 = np.zeros(nz)
    g2 = np.zeros(nz)
    dpoly = zpoly.derivative() if with_derivative else None
    if block is None:
        block = _block_nodes(nz, tau * float(np.max(zeta.imag, initial=0.0)))
    for start in range(0, zpoly.n_nodes, block):
        zp = zpoly[start : start + block]
        dp = dpoly[start : start + block] if with_derivative else None
        k = (M + 1 - 2 * start - zp.n_nodes) // 2
        K, dK = _interaction_block(kind, zp, zeta, tau, start, M - 2 * k, phase, dp)
        P, dP = _chain_product(K, dK)
        # back to the global picture: the off-diagonals pick up phi^(+-2k)
        logE = (g2 - g1) + 2 * k * ell
        # shift scales only when the cross factor leaves a safe range
        s1 = np.maximum(logE.real - MAX_BLOCK_GROWTH, 0.0)
        s2 = np.maximum(-logE.real - MAX_BLOCK_GROWTH, 0.0)
        e11, e12 = np.exp(-s1), np.exp(logE - s1)
        e21, e22 = np.exp(-logE - s2), np.exp(-s2)
        if with_derivative:
            dm1, dm2 = (
                (dP[0] * m1 + P[0] * dm1) * e11
                + ((2 * k * dell * P[1] + dP[1]) * m2 + P[1] * dm2) * e12,
                ((dP[2] - 2 * k * dell * P[2]) * m1 + P[2] * dm1) * e21
                + (dP[3] * m2 + P[3] * dm2) * e22,
            )
        m1, m2 = P[0] * m1 * e11 + P[1] * m2 * e12, P[2] * m1 * e21 + P[3] * m2 * e22
        g1, g2 = g1 + s1, g2 + s2
        m1, dm1, g1 = _rescale(m1, dm1, g1)
        m2, dm2, g2 = _rescale(m2, dm2, g2)
    return m1, m2, dm1, g1, g2


def scatter(grid: PotentialGrid, kind: SchemeKind, zeta, with_derivative=False,
            boundary="discrete", zpoly: ZPoly | None = None, threads: int = 1) -> ScatterResult:
    """Scattering coefficients ``a(zeta)``, ``b(zeta)`` (and ``a'``) for ``Im zeta >= 0``."""
    zeta_in = np.asarray(zeta, dtype=complex)
    zeta = np.atleast_1d(zeta_in).ravel()
    if np.any(zeta.imag < 0):
        raise ValueError("scattering data are defined for Im zeta >= 0")
    if zpoly is None:
        zpoly = grid.zpoly(kind)
    tau = grid.tau

    # block size from the full request so that threading does not change rounding
    block = _block_nodes(len(zeta), tau * float(zeta.imag.max()))

    def run(z):
        return _scan(kind, zpoly, z, tau, with_derivative, boundary, block)

    if threads > 1 and len(zeta) > threads:
        chunks = np.array_split(zeta, threads)
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, chunks))
        m1, m2, dm1, g1, g2 = (np.concatenate(p) for p in zip(*parts))
    else:
        m1, m2, dm1, g1, g2 = run(zeta)

    # b legitimately overflows far into the upper half plane
    with np.errstate(over="ignore", invalid="ignore"):
        f1 = np.exp(g1)
        a, b = m1 * f1, m2 * np.exp(g2)
        a_prime = dm1 * f1 if with_derivative else None

    def shape(x):
        return None if x is None else x.reshape(zeta_in.shape)

    return ScatterResult(shape(a), shape(b), shape(a_prime))


def continuous_energy(xi, a):
    """``-(1/pi) * integral of ln|a|^2`` over the sampled window (trapezoid)."""
    xi = np.asarray(xi, dtype=float)
    mod = np.abs(a)
    ok = mod > 1e-150
    if not np.all(ok):
        warnings.warn(
            f"{np.count_nonzero(~ok)} spectral point(s) with a = 0 excluded from E_c",
            RuntimeWarning,
            stacklevel=2,
        )
    return float(-trapezoid(np.log(mod[ok] ** 2), xi[ok]) / np.pi)


def scatter_grid(grid: PotentialGrid, kind: SchemeKind, xi, boundary="discrete",
                 threads: int = 1, with_derivative=False) -> ScatteringData:
    xi = np.asarray(xi, dtype=float)
    res = scatter(grid, kind, xi, with_derivative=with_derivative,
                  boundary=boundary, threads=threads)
    return make_scattering_data(xi, res.a, res.b, grid.sigma, res.a_prime)


def make_scattering_data(xi, a, b, sigma, a_prime=None) -> ScatteringData:
    with np.errstate(divide="ignore", invalid="ignore"):
        r = b / a
    H = np.abs(a) ** 2 + sigma * np.abs(b) ** 2
    return ScatteringData(xi, a, b, r, H, continuous_energy(xi, a), sigma, a_prime)


@dataclass(frozen=True)
class BidirectionalResult:
    b: complex
    residual: float
    node: int


def bidirectional_b(grid: PotentialGrid, kind: SchemeKind, zeta_k, threshold: float = 1e-5,
                    zpoly: ZPoly | None = None, boundary="discrete") -> BidirectionalResult:
    """``b(zeta_k)`` from matching left and right Jost solutions, ``Psi = Phi b``.

    The right solution is propagated backwards with adjugates (all
    transition matrices have unit determinant).  The match is taken at the
    cell interface where the smaller of the two solution norms is largest.
    """
    zeta_k = complex(zeta_k)
    if zeta_k.imag <= 0:
        raise ValueError("eigenvalues lie in the upper half plane")
    if zpoly is None:
        zpoly = grid.zpoly(kind)
    _free_phase(kind, np.array([zeta_k]), grid.tau, boundary)  # validates only
    # Both Jost solutions start with the same free phase factor, which
    # cancels in b, so the match runs on plain transition matrices.
    T = transition(kind, zpoly, np.array([zeta_k]), grid.tau)
    t11, t12, t21, t22 = (x[:, 0].tolist() for x in _entries(T))
    n = len(t11)

    # left: Psi after k cells, k = 0..n
    psi = [(1 + 0j, 0j)] * (n + 1)
    lpsi = [0.0] * (n + 1)
    p1, p2, lg = 1 + 0j, 0j, 0.0
    for k in range(n):
        p1, p2 = t11[k] * p1 + t12[k] * p2, t21[k] * p1 + t22[k] * p2
        s = abs(p1) + abs(p2)
        p1, p2, lg = p1 / s, p2 / s, lg + math.log(s)
        psi[k + 1], lpsi[k + 1] = (p1, p2), lg

    phi = [(0j, 1 + 0j)] * (n + 1)
    lphi = [0.0] * (n + 1)
    f1, f2, lg = 0j, 1 + 0j, 0.0
    for k in range(n - 1, -1, -1):
        # inverse of unit-determinant T is [[t22, -t12], [-t21, t11]]
        f1, f2 = t22[k] * f1 - t12[k] * f2, -t21[k] * f1 + t11[k] * f2
        s = abs(f1) + abs(f2)
        f1, f2, lg = f1 / s, f2 / s, lg + math.log(s)
        phi[k], lphi[k] = (f1, f2), lg

    lpsi, lphi = np.array(lpsi), np.array(lphi)
    psi_a, phi_a = np.array(psi), np.array(phi)
    strength = np.minimum(lpsi + np.log(np.linalg.norm(psi_a, axis=1)),
                          lphi + np.log(np.linalg.norm(phi_a, axis=1)))
    k = int(np.argmax(strength))
    u, v = psi_a[k], phi_a[k]
    bhat = np.vdot(v, u) / np.vdot(v, v)
    residual = float(np.linalg.norm(u - v * bhat) / np.linalg.norm(u))
    b = complex(bhat * np.exp(lpsi[k] - lphi[k]))
    if residual > threshold:
        warnings.warn(
            f"bidirectional match residual {residual:.3g} at zeta={zeta_k} exceeds "
            f"{threshold:g}; zeta is probably not an eigenvalue of the discretised problem",
            IllConditionedEigenvalueWarning,
            stacklevel=2,
        )
    return BidirectionalResult(b, residual, k)


def phase_coefficient(grid: PotentialGrid, kind: SchemeKind, zeta_k, threshold: float = 1e-5,
                      zpoly: ZPoly | None = None, boundary="discrete") -> complex:
    """Norming constant ``r_k = b(zeta_k) / a'(zeta_k)``."""
    if zpoly is None:
        zpoly = grid.zpoly(kind)
    ap = complex(scatter(grid, kind, zeta_k, with_derivative=True, zpoly=zpoly,
                         boundary=boundary).a_prime)
    if abs(ap) < 1e-12:
        raise DegenerateEigenvalueError(f"|a'({zeta_k})| = {abs(ap):.3g}; no eigenvalue here")
    return bidirectional_b(grid, kind, zeta_k, threshold, zpoly, boundary).b / ap


def refine_eigenvalue(grid: PotentialGrid, kind: SchemeKind, guess, tol=1e-13, maxiter=50,
                      zpoly: ZPoly | None = None, boundary="discrete") -> complex:
    """Newton polish of a supplied eigenvalue estimate on ``a(zeta) = 0``."""
    if zpoly is None:
        zpoly = grid.zpoly(kind)
    zeta = complex(guess)
    for _ in range(maxiter):
        res = scatter(grid, kind, zeta, with_derivative=True, zpoly=zpoly, boundary=boundary)
        step = complex(res.a) / complex(res.a_prime)
        zeta -= step
        if abs(step) < tol * max(1.0, abs(zeta)):
            return zeta
    raise ArithmeticError(f"Newton refinement from {guess} did not converge")
