"""Built-in test potentials and CSV potential files.

File format: UTF-8 CSV with header ``t,re_q,im_q`` and a uniform, symmetric
time column ``t_n = -L + tau*n``.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .propagator import PotentialGrid
from .stencil import check_boundary

JITTER_TOL = 1e-9
KINDS = ("chirped_sech", "sech", "rectangle", "file")


class SignalFileError(ValueError):
    pass


@dataclass
class SignalSpec:
    kind: str = "chirped_sech"
    A: float = 5.2
    C: float = 4.0
    L: float = 32.0
    M: int = 4096
    sigma: int = 1
    path: Optional[str] = None

    @classmethod
    def from_dict(cls, d) -> "SignalSpec":
        return cls(**{k: v for k, v in d.items() if k in cls.__dataclass_fields__})

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def log_sech(t):
    """``ln sech t`` without overflow for large ``|t|``."""
    a = np.abs(np.asarray(t, dtype=float))
    return -(a + np.log1p(np.exp(-2 * a)) - np.log(2.0))


def chirped_sech(t, A=5.2, C=4.0):
    """``A * sech(t)**(1 + iC)`` via ``A * exp((1 + iC) ln sech t)``."""
    return A * np.exp((1 + 1j * C) * log_sech(t))


def sech(t, A=1.0):
    return A * np.exp(log_sech(t)) + 0j


def rectangle(t, A=1.0, half_width=1.0):
    return np.where(np.abs(t) <= half_width, A, 0.0) + 0j


def generate(spec: SignalSpec) -> PotentialGrid:
    if spec.kind == "file":
        if spec.path is None:
            raise ValueError("file signal needs a path")
        return load_file(spec.path, sigma=spec.sigma)
    if spec.M < 8 or spec.L <= 0:
        raise ValueError("need M >= 8 and L > 0")
    f = {
        "chirped_sech": lambda t: chirped_sech(t, spec.A, spec.C),
        "sech": lambda t: sech(t, spec.A),
        "rectangle": lambda t: rectangle(t, spec.A),
    }.get(spec.kind)
    if f is None:
        raise ValueError(f"unknown signal kind {spec.kind!r}; expected one of {KINDS}")
    grid = PotentialGrid.from_function(f, spec.L, spec.M, spec.sigma)
    check_boundary(grid.q)
    return grid


def save_file(grid: PotentialGrid, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "re_q", "im_q"])
        for t, q in zip(grid.t, grid.q):
            w.writerow([repr(float(t)), repr(float(q.real)), repr(float(q.imag))])


def load_file(path, sigma=1, format="csv") -> PotentialGrid:
    if format != "csv":
        raise SignalFileError(f"unsupported potential format {format!r}")
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["t", "re_q", "im_q"]:
        raise SignalFileError(f"{path}: expected header t,re_q,im_q")
    try:
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float)
    except ValueError as e:
        raise SignalFileError(f"{path}: {e}") from None
    if data.ndim != 2 or data.shape[1] != 3:
        raise SignalFileError(f"{path}: expected three columns")
    if len(data) < 5:
        raise SignalFileError(f"{path}: need at least 5 samples, got {len(data)}")
    t = data[:, 0]
    dt = np.diff(t)
    tau = (t[-1] - t[0]) / (len(t) - 1)
    if tau <= 0 or np.max(np.abs(dt / tau - 1)) > JITTER_TOL:
        raise SignalFileError(f"{path}: time column is not uniform")
    L = 0.5 * (t[-1] - t[0])
    if abs(t[0] + t[-1]) > 1e-9 * L:
        raise SignalFileError(f"{path}: time column must be symmetric about t = 0")
    q = data[:, 1] + 1j * data[:, 2]
    if not np.all(np.isfinite(q)):
        raise SignalFileError(f"{path}: non-finite samples")
    grid = PotentialGrid(q, L, sigma)
    check_boundary(grid.q)
    return grid
