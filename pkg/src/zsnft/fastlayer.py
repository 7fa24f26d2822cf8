"""Fast transfer-matrix layer: per-step polynomials in w, product tree, evaluation.

With the Moebius substitution ``z = tau*zeta = ih (1 - w) / (1 + w)`` every
rational transition matrix becomes ``T = S(w) / d(w)`` after clearing
``(1 + w)**D``.  The whole chain ``T_M ... T_0`` is then a single pair of
polynomials whose coefficients are built once and evaluated at many points.

``h`` is measured in units of ``z`` (not ``zeta``), so the real axis is
reached through ``xi = (h / tau) tan(theta / 2)``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from scipy.signal import czt

from .pauli import Mat2
from .propagator import PotentialGrid, ScatteringData, make_scattering_data
from .schemes import PoleProximityError, SchemeKind, free_log_phase
from .zbuilder import ZPoly

FFT_CROSSOVER = 64
POLE_GUARD = 1e-300
# beyond these the Pade fast schemes stop working (advisory)
CRITICAL_H = {SchemeKind.ES6_PADE3: 11.65, SchemeKind.ES6_PADE4: 15.57}
DEFAULT_H = {SchemeKind.ES6_PADE3: 11.0, SchemeKind.ES6_PADE4: 15.0, SchemeKind.CN2: 2.0}
FAST_KINDS = {
    "FES6_Pade3": SchemeKind.ES6_PADE3,
    "FES6_Pade4": SchemeKind.ES6_PADE4,
    "FCN2": SchemeKind.CN2,
}
_HORNER_BLOCK = 256


class CriticalParameterWarning(UserWarning):
    """``h`` exceeds the largest value for which the fast scheme works."""


def parse_fast(name: str) -> SchemeKind:
    for key, kind in FAST_KINDS.items():
        if name.lower() in (key.lower(), kind.value.lower()):
            return kind
    raise ValueError(f"no fast variant {name!r}; expected one of {sorted(FAST_KINDS)}")


def fast_name(kind: SchemeKind) -> str:
    return {v: k for k, v in FAST_KINDS.items()}[kind]


@dataclass(frozen=True)
class MobiusMap:
    """``w = (ih - tau*zeta) / (ih + tau*zeta)``, mapping Im zeta >= 0 into the unit disc."""

    h: float
    tau: float = 1.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")

    def w(self, zeta):
        z = self.tau * np.asarray(zeta, dtype=complex)
        return (1j * self.h - z) / (1j * self.h + z)

    def zeta(self, w):
        w = np.asarray(w, dtype=complex)
        return 1j * self.h * (1 - w) / ((1 + w) * self.tau)

    def xi_from_theta(self, theta):
        return self.h * np.tan(np.asarray(theta) / 2) / self.tau

    def theta_from_xi(self, xi):
        return 2 * np.arctan(self.tau * np.asarray(xi) / self.h)


@dataclass
class TransferPoly:
    """Matrix polynomial ``S(w)`` (Pauli coordinates) over scalar ``d(w)``.

    ``S`` has shape ``(..., 4, L)`` and ``d`` shape ``(..., L)``, coefficients
    in ascending powers of w.  The stored pair is scaled by
    ``exp(-log_scale)``; the scale cancels in ``S/d``.
    """

    S: np.ndarray
    d: np.ndarray
    log_scale: np.ndarray
    degree: int

    def __len__(self):
        return self.S.shape[0]

    def __getitem__(self, idx) -> "TransferPoly":
        return TransferPoly(self.S[idx], self.d[idx], self.log_scale[idx], self.degree)

    @property
    def batched(self) -> bool:
        return self.S.ndim == 3


def _binomial_basis(D):
    """Row k: coefficients of ``(1 - w)**k (1 + w)**(D - k)``."""
    return _basis_cached(D).copy()


@lru_cache(maxsize=None)
def _basis_cached(D):
    P = np.polynomial.polynomial
    B = np.zeros((D + 1, D + 1))
    for k in range(D + 1):
        B[k] = P.polymul(P.polypow([1, -1], k), P.polypow([1, 1], D - k))[: D + 1]
    return B


def _conv(a, b):
    """Batched schoolbook convolution along the last axis."""
    la, lb = a.shape[-1], b.shape[-1]
    if la < lb:
        a, b, la, lb = b, a, lb, la
    shape = np.broadcast_shapes(a.shape[:-1], b.shape[:-1]) + (la + lb - 1,)
    out = np.zeros(shape, dtype=complex)
    for j in range(lb):
        out[..., j : j + la] += a * b[..., j : j + 1]
    return out


def _z_numerators(kind: SchemeKind, zpoly: ZPoly):
    """Coefficients in z of ``c_num(mu)``, ``s_num(mu) z_i`` and ``den(mu)``."""
    rat = kind.rational
    if rat is None or kind is SchemeKind.ES6_CAYLEY:
        raise ValueError(f"{kind.value} has no fast variant")
    z = np.stack([zpoly.z1, zpoly.z2, zpoly.z3], axis=1)  # (n, 3, k)
    mu = sum(_conv(z[:, i], z[:, i]) for i in range(3))

    def horner(coefs):
        out = np.full((mu.shape[0], 1), coefs[-1], complex)
        for c in coefs[-2::-1]:
            out = _conv(out, mu)
            out[:, 0] += c
        return out

    c = horner(rat.c_num)
    s = horner(rat.s_num)
    d = horner(rat.den)
    sz = _conv(s[:, None, :], z)
    D = d.shape[-1] - 1
    num = np.zeros((mu.shape[0], 4, D + 1), complex)
    num[:, 0, : c.shape[-1]] = c
    num[:, 1:, : sz.shape[-1]] = sz
    return num, d, D


def step_polynomials(kind: SchemeKind, zpoly: ZPoly, mobius: MobiusMap,
                     normalize: bool = True) -> TransferPoly:
    """``S(w)``, ``d(w)`` for every node of ``zpoly`` (a batched :class:`TransferPoly`)."""
    num, den, D = _z_numerators(kind, zpoly)
    scale = (1j * mobius.h) ** np.arange(D + 1)
    B = _binomial_basis(D)
    # explicit sum rather than a matrix product: the result of every node
    # must not depend on how many nodes are batched together
    S = sum((num[..., k : k + 1] * scale[k]) * B[k] for k in range(D + 1))
    d = sum((den[..., k : k + 1] * scale[k]) * B[k] for k in range(D + 1))
    log_scale = np.zeros(len(d))
    if normalize:
        m = np.abs(d).max(axis=-1)
        S = S / m[:, None, None]
        d = d / m[:, None]
        log_scale = np.log(m)
    return TransferPoly(S, d, log_scale, D)


def step_polynomial(kind: SchemeKind, zpoly: ZPoly, node: int, mobius: MobiusMap,
                    normalize: bool = True) -> TransferPoly:
    """Single-node version of :func:`step_polynomials`."""
    return step_polynomials(kind, zpoly[node], mobius, normalize)[0]


def _pauli_product(A, B, mul):
    a0, a1, a2, a3 = A
    b0, b1, b2, b3 = B
    c0 = mul(a0, b0) + mul(a1, b1) + mul(a2, b2) + mul(a3, b3)
    c1 = mul(a0, b1) + mul(b0, a1) + 1j * (mul(a2, b3) - mul(a3, b2))
    c2 = mul(a0, b2) + mul(b0, a2) + 1j * (mul(a3, b1) - mul(a1, b3))
    c3 = mul(a0, b3) + mul(b0, a3) + 1j * (mul(a1, b2) - mul(a2, b1))
    return c0, c1, c2, c3


def _diagonal_product(A, B, mul):
    # same operation order as _pauli_product with a1 = a2 = b1 = b2 = 0
    a0, a3 = A
    b0, b3 = B
    return mul(a0, b0) + mul(a3, b3), mul(a0, b3) + mul(b0, a3)


def _pair_product(S_hi, d_hi, S_lo, d_lo, workers=None):
    """``(S_hi S_lo, d_hi d_lo)`` along the leading batch axis.

    ``S`` may hold all four Pauli rows or only the diagonal pair ``(S0, S3)``.
    """
    n_out = S_hi.shape[-1] + S_lo.shape[-1] - 1
    prod = _pauli_product if S_hi.shape[1] == 4 else _diagonal_product
    rows = range(S_hi.shape[1])
    if n_out <= FFT_CROSSOVER:
        C = prod([S_hi[:, i] for i in rows], [S_lo[:, i] for i in rows], _conv)
        return np.stack(C, axis=1), _conv(d_hi, d_lo)
    nf = sfft.next_fast_len(n_out)
    fA = sfft.fft(S_hi, nf, axis=-1, workers=workers)
    fB = sfft.fft(S_lo, nf, axis=-1, workers=workers)
    fd = sfft.fft(d_hi, nf, axis=-1, workers=workers) * sfft.fft(d_lo, nf, axis=-1, workers=workers)
    C = prod([fA[:, i] for i in rows], [fB[:, i] for i in rows], np.multiply)
    S = sfft.ifft(np.stack(C, axis=1), axis=-1, workers=workers)[..., :n_out]
    d = sfft.ifft(fd, axis=-1, workers=workers)[..., :n_out]
    return S, d


def _identity_like(L, n=1, rows=4):
    S = np.zeros((n, rows, L), complex)
    S[:, 0, 0] = 1
    d = np.zeros((n, L), complex)
    d[:, 0] = 1
    return S, d


def product_tree(steps, workers=None) -> TransferPoly:
    """Ordered product ``T_last ... T_first`` by a balanced binary tree.

    ``steps`` is a batched :class:`TransferPoly` or a sequence of single ones.
    A batch whose ``S`` carries only two rows is treated as diagonal
    ``(S0, S3)``.  Each level multiplies neighbouring pairs at once; odd levels are padded
    with the identity.
    """
    if isinstance(steps, TransferPoly):
        if not steps.batched:
            return steps
        S, d, logs = steps.S, steps.d, np.asarray(steps.log_scale, float)
        degs = np.full(len(S), steps.degree)
    else:
        steps = list(steps)
        if not steps:
            raise ValueError("product of an empty sequence")
        L = max(s.degree for s in steps) + 1
        S = np.zeros((len(steps), 4, L), complex)
        d = np.zeros((len(steps), L), complex)
        for i, s in enumerate(steps):
            S[i, :, : s.degree + 1] = s.S[:, : s.degree + 1]
            d[i, : s.degree + 1] = s.d[: s.degree + 1]
        logs = np.array([float(s.log_scale) for s in steps])
        degs = np.array([s.degree for s in steps])
    while len(S) > 1:
        if len(S) % 2:
            Si, di = _identity_like(S.shape[-1], rows=S.shape[1])
            S = np.concatenate([S, Si])
            d = np.concatenate([d, di])
            logs = np.append(logs, 0.0)
            degs = np.append(degs, 0)
        S, d = _pair_product(S[1::2], d[1::2], S[0::2], d[0::2], workers)
        logs = logs[0::2] + logs[1::2]
        degs = degs[0::2] + degs[1::2]
        L = int(degs.max()) + 1
        S, d = S[..., :L], d[..., :L]
        m = np.abs(d).max(axis=-1)
        S = S / m[:, None, None]
        d = d / m[:, None]
        logs = logs + np.log(m)
    return TransferPoly(S[0], d[0], float(logs[0]), int(degs[0]))


def _horner_blocked(coef, w):
    """Evaluate rows of ``coef`` (shape ``(k, L)``) at points ``w``.

    Blocks of ``_HORNER_BLOCK`` coefficients go through one matrix product
    against the powers of w; the blocks are then combined by Horner in
    ``w**block``.
    """
    k, L = coef.shape
    B = min(_HORNER_BLOCK, L)
    nb = -(-L // B)
    c = np.zeros((k, nb * B), complex)
    c[:, :L] = coef
    c = c.reshape(k, nb, B)
    V = w[None, :] ** np.arange(B)[:, None]  # (B, N)
    vals = c @ V  # (k, nb, N)
    wB = w**B
    out = vals[:, -1]
    for j in range(nb - 2, -1, -1):
        out = out * wB + vals[:, j]
    return out


def _circle_values(coef, N, workers=None):
    """Values at ``theta_j = -pi + 2 pi (j + 1/2) / N`` by one folded FFT."""
    k, L = coef.shape
    n = np.arange(L)
    tw = np.where(n % 2, -1.0, 1.0) * np.exp(1j * np.pi * n / N)
    c = coef * tw
    pad = -(-L // N) * N
    folded = np.zeros((k, pad), complex)
    folded[:, :L] = c
    folded = folded.reshape(k, -1, N).sum(axis=1)
    return N * sfft.ifft(folded, axis=-1, workers=workers)


def circle_thetas(N):
    return -np.pi + 2 * np.pi * (np.arange(N) + 0.5) / N


def evaluate(poly: TransferPoly, mobius: MobiusMap, targets, method: str = "horner",
             workers=None):
    """``S(w)/d(w)`` at the requested targets.

    Parameters
    ----------
    targets
        ``horner``: array of spectral points zeta (any, Im zeta >= 0).
        ``circle``: an integer N; the full unit circle at equispaced theta.
        ``arc``: a tuple ``(xi_min, xi_max, N)``; equispaced theta on the
        arc spanned by the real window, evaluated with a chirp-z transform.
    method
        One of ``horner``, ``circle``, ``arc``.

    Returns
    -------
    zeta : ndarray
        Spectral points actually used.
    T : Mat2
        Transition matrix of the whole chain at every point.
    """
    coef = np.concatenate([poly.S, poly.d[None]], axis=0)
    if method == "horner":
        zeta = np.atleast_1d(np.asarray(targets, dtype=complex))
        vals = _horner_blocked(coef, mobius.w(zeta))
    elif method == "circle":
        N = int(targets)
        zeta = mobius.xi_from_theta(circle_thetas(N)).astype(complex)
        vals = _circle_values(coef, N, workers)
    elif method == "arc":
        xi_min, xi_max, N = targets
        N = int(N)
        t0, t1 = mobius.theta_from_xi(xi_min), mobius.theta_from_xi(xi_max)
        dt = (t1 - t0) / (N - 1) if N > 1 else 0.0
        zeta = mobius.xi_from_theta(t0 + dt * np.arange(N)).astype(complex)
        vals = czt(coef, N, np.exp(1j * dt), np.exp(-1j * t0), axis=-1)
    else:
        raise ValueError(f"unknown evaluation method {method!r}")
    d = vals[4]
    if np.any(np.abs(d) < POLE_GUARD):
        raise PoleProximityError("d(w) vanishes at an evaluation point")
    return zeta, Mat2(*(vals[i] / d for i in range(4)))


def check_h(kind: SchemeKind, h: float) -> bool:
    """Warn (and return False) when ``h`` is above the scheme's critical value."""
    crit = CRITICAL_H.get(kind)
    if crit is not None and h > crit:
        warnings.warn(
            f"h = {h:g} exceeds the critical value {crit:g} of {fast_name(kind)}; "
            "results will be inaccurate",
            CriticalParameterWarning,
            stacklevel=3,
        )
        return False
    return True


def chain_polynomial(grid: PotentialGrid, kind: SchemeKind, mobius: MobiusMap,
                     workers=None) -> TransferPoly:
    zpoly = kind.build_z(grid.q, grid.tau, grid.sigma)
    return product_tree(step_polynomials(kind, zpoly, mobius), workers)


def free_chain_polynomial(kind: SchemeKind, M: int, tau: float, mobius: MobiusMap,
                          workers=None) -> TransferPoly:
    """Chain of ``M + 1`` free steps, rounded exactly as a q = 0 potential would be."""
    zp = kind.build_z(np.zeros(5), tau)[2]
    one = step_polynomials(kind, zp, mobius)
    S = np.broadcast_to(one.S[:, [0, 3]], (M + 1, 2, one.S.shape[-1]))
    d = np.broadcast_to(one.d, (M + 1, one.d.shape[-1]))
    logs = np.broadcast_to(one.log_scale, (M + 1,))
    diag = product_tree(TransferPoly(S, d, logs, one.degree), workers)
    full = np.zeros((4,) + diag.S.shape[1:], complex)
    full[0], full[3] = diag.S
    return TransferPoly(full, diag.d, diag.log_scale, diag.degree)


def fast_scatter(grid: PotentialGrid, kind: SchemeKind, mobius: MobiusMap | None = None,
                 targets=None, method: str = "horner", boundary: str = "discrete",
                 workers=None) -> ScatteringData:
    """Scattering data from the aggregated chain polynomial.

    ``b = T21`` of the chain; ``a = T11`` divided by the free chain, which
    with the default ``boundary="discrete"`` is the fast path's own product
    of ``M + 1`` free steps (``phi**(M+1)`` for ``"exact"``).  Default targets are 1024 points on ``[-20, 20]``.
    """
    if kind not in DEFAULT_H:
        raise ValueError(f"{kind.value} has no fast variant")
    if mobius is None:
        mobius = MobiusMap(DEFAULT_H[kind], grid.tau)
    if not math.isclose(mobius.tau, grid.tau):
        raise ValueError("Moebius map was built for a different step size")
    check_h(kind, mobius.h)
    if targets is None:
        targets = np.linspace(-20, 20, 1024)
    total = chain_polynomial(grid, kind, mobius, workers)
    zeta, T = evaluate(total, mobius, targets, method, workers)
    if boundary not in ("discrete", "exact"):
        raise ValueError(f"unknown boundary convention {boundary!r}")
    t11, _, t21, _ = T.entries()
    if boundary == "exact":
        ell = free_log_phase(kind, zeta, grid.tau, exact=True)
        a = t11 * np.exp(-(grid.M + 1) * ell)
    else:
        # divide by the fast path's own free chain: a = 1 exactly for q = 0
        free = free_chain_polynomial(kind, grid.M, grid.tau, mobius, workers)
        a = t11 / evaluate(free, mobius, targets, method, workers)[1].entries()[0]
    b = t21
    xi = zeta.real if np.all(zeta.imag == 0) else zeta
    return make_scattering_data(xi, a, b, grid.sigma)
