"""Reference spectra: self-converged continuous data and a fine-grid discrete oracle."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .propagator import (
    ScatteringData,
    bidirectional_b,
    make_scattering_data,
    scatter,
    scatter_grid,
)
from .schemes import SchemeKind
from .signals import SignalSpec, generate

DEFAULT_M_REF = 1 << 16
DEFAULT_M_ORACLE = 1 << 18


def self_converged(spec: SignalSpec, xi, M_ref: int = DEFAULT_M_REF,
                   kind: SchemeKind = SchemeKind.ES6, threads: int = 1) -> ScatteringData:
    """Scattering data of ``spec`` resampled at ``M_ref`` (same L)."""
    grid = generate(replace(spec, M=M_ref))
    return scatter_grid(grid, kind, xi, threads=threads)


def save_spectrum(data: ScatteringData, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["xi", "re_a", "im_a", "re_b", "im_b"])
        for x, a, b in zip(data.xi, data.a, data.b):
            w.writerow([repr(float(v)) for v in (x, a.real, a.imag, b.real, b.imag)])


def load_spectrum(path, sigma: int = 1) -> ScatteringData:
    """Read ``xi, re_a, im_a, re_b, im_b`` (extra columns and ``#`` lines are ignored)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    head = [c.strip() for c in rows[0]]
    need = ["xi", "re_a", "im_a", "re_b", "im_b"]
    if not set(need) <= set(head):
        raise ValueError(f"{path}: expected columns {','.join(need)}")
    v = np.array([[float(r[head.index(c)]) for c in need] for r in rows[1:]])
    return make_scattering_data(v[:, 0], v[:, 1] + 1j * v[:, 2], v[:, 3] + 1j * v[:, 4], sigma)


@dataclass(frozen=True)
class DiscreteValues:
    """Scattering quantities at one eigenvalue."""

    zeta: complex
    a: complex
    b: complex
    a_prime: complex
    residual: float = 0.0

    @property
    def r(self) -> complex:
        return self.b / self.a_prime


def discrete_values(grid, kind: SchemeKind, zeta, threshold: float = 1e-5) -> DiscreteValues:
    zp = grid.zpoly(kind)
    res = scatter(grid, kind, zeta, with_derivative=True, zpoly=zp)
    bi = bidirectional_b(grid, kind, zeta, threshold, zp)
    return DiscreteValues(complex(zeta), complex(res.a), bi.b, complex(res.a_prime), bi.residual)


def discrete_oracle(spec: SignalSpec, guess, M: int = DEFAULT_M_ORACLE,
                    kind: SchemeKind = SchemeKind.BO2, tol: float = 1e-13,
                    maxiter: int = 30) -> DiscreteValues:
    """Eigenvalue and scattering data from a second-order scheme at ``M`` and ``M/2``.

    Both resolutions are combined by Richardson extrapolation (error
    expansion in even powers of tau).  The eigenvalue is polished by Newton
    iteration on the extrapolated ``a``.
    """
    fine = generate(replace(spec, M=M))
    coarse = generate(replace(spec, M=M // 2))
    zf, zc = fine.zpoly(kind), coarse.zpoly(kind)

    def extrapolated(z):
        rf = scatter(fine, kind, z, with_derivative=True, zpoly=zf)
        rc = scatter(coarse, kind, z, with_derivative=True, zpoly=zc)
        a = (4 * complex(rf.a) - complex(rc.a)) / 3
        ap = (4 * complex(rf.a_prime) - complex(rc.a_prime)) / 3
        return a, ap

    zeta = complex(guess)
    for _ in range(maxiter):
        a, ap = extrapolated(zeta)
        step = a / ap
        zeta -= step
        if abs(step) < tol * max(1.0, abs(zeta)):
            break
    else:
        raise ArithmeticError(f"oracle eigenvalue near {guess} did not converge")
    a, ap = extrapolated(zeta)
    bf = bidirectional_b(fine, kind, zeta, zpoly=zf)
    bc = bidirectional_b(coarse, kind, zeta, zpoly=zc)
    b = (4 * bf.b - bc.b) / 3
    return DiscreteValues(zeta, a, b, ap, max(bf.residual, bc.residual))
