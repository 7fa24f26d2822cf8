"""Five-point central differences for q', q'', q''', q'''' on a uniform grid.

Samples outside the grid are taken to be zero (two ghost cells per side),
which is consistent with a potential that has decayed at the domain edges.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

# weights for offsets (-2, -1, 0, 1, 2), keyed by (order, accuracy)
WEIGHTS = {
    (1, 2): (np.array([0, -1, 0, 1, 0]) / 2, 1),
    (1, 4): (np.array([1, -8, 0, 8, -1]) / 12, 1),
    (2, 2): (np.array([0, 1, -2, 1, 0]), 2),
    (2, 4): (np.array([-1, 16, -30, 16, -1]) / 12, 2),
    (3, 2): (np.array([-1, 2, 0, -2, 1]) / 2, 3),
    (4, 2): (np.array([1, -4, 6, -4, 1]), 4),
}

BOUNDARY_THRESHOLD = 1e-10


class BoundaryDecayWarning(UserWarning):
    """The potential has not decayed at the edge of the grid."""


@dataclass(frozen=True)
class DerivativeTable:
    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray

    def __len__(self):
        return len(self.d1)

    def __getitem__(self, order):
        return (self.d1, self.d2, self.d3, self.d4)[order - 1]


def derivative(q, tau: float, order: int, accuracy: int = 2) -> np.ndarray:
    """Central-difference estimate of the ``order``-th derivative at every node."""
    try:
        w, p = WEIGHTS[order, accuracy]
    except KeyError:
        raise ValueError(
            f"no five-point stencil for order {order} at accuracy {accuracy}"
        ) from None
    q = np.asarray(q)
    if q.ndim != 1 or len(q) < 5:
        raise ValueError(f"need at least 5 samples, got {q.shape}")
    qp = np.pad(q, 2)
    n = len(q)
    out = sum(wk * qp[k : k + n] for k, wk in enumerate(w) if wk != 0)
    return out / tau**p


def derivatives(q, tau: float, accuracy: int = 4) -> DerivativeTable:
    """Derivative table used by the sixth-order Z builders.

    ``accuracy`` applies to the first and second derivatives; the third and
    fourth only exist at second order on a five-point stencil.
    """
    return DerivativeTable(
        derivative(q, tau, 1, accuracy),
        derivative(q, tau, 2, accuracy),
        derivative(q, tau, 3, 2),
        derivative(q, tau, 4, 2),
    )


def check_boundary(q, threshold: float = BOUNDARY_THRESHOLD) -> bool:
    """Warn if ``|q|`` at either end exceeds ``threshold``; return True if clean."""
    q = np.asarray(q)
    edge = max(abs(q[0]), abs(q[-1]))
    if edge > threshold:
        warnings.warn(
            f"|q| at the grid edge is {edge:.3g} (> {threshold:g}); zero "
            "extension beyond the grid is inaccurate",
            BoundaryDecayWarning,
            stacklevel=2,
        )
        return False
    return True
