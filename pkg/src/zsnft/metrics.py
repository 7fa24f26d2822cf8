"""Relative error measures used throughout the experiments."""
from __future__ import annotations

import numpy as np


def reference_scale(exact):
    """``|exact|`` where it exceeds one, otherwise one (clamped on the modulus)."""
    mod = np.abs(np.asarray(exact))
    return np.where(mod > 1, mod, 1.0)


def err(computed, exact):
    """Pointwise error ``|computed - exact| / phi0``."""
    computed = np.asarray(computed)
    exact = np.asarray(exact)
    return np.abs(computed - exact) / reference_scale(exact)


def rmse(computed, exact) -> float:
    """Root mean square of :func:`err` over all samples."""
    e = err(computed, exact)
    return float(np.sqrt(np.mean(e**2)))


def loglog_slope(M, values) -> float:
    """Least-squares slope of ``log2(values)`` against ``log2(M)``."""
    return float(np.polyfit(np.log2(M), np.log2(values), 1)[0])
