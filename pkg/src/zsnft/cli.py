"""Experiment driver: continuous-spectrum, invariant and discrete-spectrum runs.

Every run writes a CSV whose first line is ``# zs-nft v1 <experiment> <config>``.
Failed (scheme, M) pairs are kept as rows with a non-``ok`` status and
empty numeric fields.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
import warnings
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .fastlayer import DEFAULT_H, FAST_KINDS, MobiusMap, fast_name, fast_scatter, parse_fast
from .metrics import err, rmse
from .propagator import DegenerateEigenvalueError, scatter_grid
from .reference import (
    DEFAULT_M_ORACLE,
    DEFAULT_M_REF,
    discrete_oracle,
    discrete_values,
    load_spectrum,
    self_converged,
)
from .schemes import SchemeKind
from .signals import KINDS, SignalSpec, generate

log = logging.getLogger("zsnft")

SCHEMA = "# zs-nft v1"
CONTINUOUS_COLUMNS = ["scheme", "M", "RMSE_a", "RMSE_b", "RMSE_r", "RMSE_H", "err_Ec",
                      "wall_time_s", "status"]
INVARIANT_COLUMNS = ["scheme", "M", "RMSE_H", "max_err_H", "wall_time_s", "status"]
PROFILE_COLUMNS = ["scheme", "M", "xi", "err_H"]
DISCRETE_COLUMNS = ["scheme", "M", "re_zeta", "im_zeta", "err_a", "err_b", "err_aprime",
                    "err_r", "residual", "wall_time_s", "status"]
SPECTRUM_COLUMNS = ["xi", "re_a", "im_a", "re_b", "im_b", "H"]


@dataclass
class ExperimentConfig:
    signal: SignalSpec = field(default_factory=SignalSpec)
    schemes: list = field(default_factory=lambda: ["ES6"])
    M_list: list = field(default_factory=lambda: [4096])
    xi_min: float = -20.0
    xi_max: float = 20.0
    n_xi: Optional[int] = None  # None: N = M
    h: dict = field(default_factory=dict)
    reference: dict = field(default_factory=lambda: {"self_converged": DEFAULT_M_REF})
    eigenvalues: list = field(default_factory=list)
    m_oracle: int = DEFAULT_M_ORACLE
    fast_eval: str = "horner"
    threads: int = 1
    out: Optional[str] = None

    def __post_init__(self):
        if isinstance(self.signal, dict):
            self.signal = SignalSpec.from_dict(self.signal)
        self.M_list = [int(m) for m in self.M_list]
        self.eigenvalues = [_complex(z) for z in self.eigenvalues]

    def validate(self):
        if not self.M_list:
            raise ValueError("M_list is empty")
        if self.M_list != sorted(self.M_list):
            raise ValueError("M_list must be sorted ascending")
        ref = self.reference.get("self_converged")
        if ref is not None and "file" not in self.reference and int(ref) <= max(self.M_list):
            raise ValueError("reference M must exceed every M in M_list")
        if self.xi_max <= self.xi_min:
            raise ValueError("empty spectral window")
        if self.fast_eval not in ("horner", "arc"):
            raise ValueError("fast_eval must be 'horner' or 'arc'")
        for s in self.schemes:
            resolve_scheme(s)

    def to_json(self) -> str:
        d = asdict(self)
        d["eigenvalues"] = [[z.real, z.imag] for z in self.eigenvalues]
        d.pop("out")
        d.pop("threads")
        return json.dumps(d, sort_keys=True)


def _complex(v) -> complex:
    if isinstance(v, (list, tuple)):
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(v)


def resolve_scheme(name: str):
    """``(label, kind, fast)`` for a scheme name such as ``ES6_Pade4`` or ``FES6_Pade3``."""
    if name in FAST_KINDS or name.lower() in (k.lower() for k in FAST_KINDS):
        kind = parse_fast(name)
        return fast_name(kind), kind, True
    kind = SchemeKind.parse(name)
    return kind.value, kind, False


def read_eigenvalues(path) -> list:
    """One eigenvalue per line, either ``re,im`` or a Python complex literal."""
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p for p in line.replace(";", ",").split(",") if p.strip()]
        out.append(_complex(parts) if len(parts) == 2 else _complex(parts[0]))
    return out


def _xi_grid(cfg: ExperimentConfig, M: int):
    n = cfg.n_xi if cfg.n_xi else M
    return np.linspace(cfg.xi_min, cfg.xi_max, n)


class _Reference:
    """Lazily computed reference spectra, cached per xi grid."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.cache = {}
        self.loaded = None
        if "file" in cfg.reference:
            self.loaded = load_spectrum(cfg.reference["file"], cfg.signal.sigma)

    def __call__(self, xi):
        if self.loaded is not None:
            if len(xi) != len(self.loaded.xi) or not np.allclose(xi, self.loaded.xi, atol=1e-12):
                raise ValueError("reference file does not cover the requested xi grid")
            return self.loaded
        key = (len(xi), xi.tobytes())
        if key not in self.cache:
            M_ref = int(self.cfg.reference.get("self_converged", DEFAULT_M_REF))
            log.info("reference: ES6 at M=%d on %d points", M_ref, len(xi))
            self.cache[key] = self_converged(self.cfg.signal, xi, M_ref, threads=self.cfg.threads)
        return self.cache[key]


def _compute(cfg: ExperimentConfig, scheme: str, M: int):
    """Scatter one (scheme, M) pair; returns data and wall time (signal generation excluded)."""
    label, kind, fast = resolve_scheme(scheme)
    grid = generate(replace(cfg.signal, M=M))
    xi = _xi_grid(cfg, M)
    t0 = time.perf_counter()
    if fast:
        h = float(cfg.h.get(label, DEFAULT_H[kind]))
        mob = MobiusMap(h, grid.tau)
        if cfg.fast_eval == "arc":
            data = fast_scatter(grid, kind, mob, (cfg.xi_min, cfg.xi_max, len(xi)), "arc",
                                workers=cfg.threads)
        else:
            data = fast_scatter(grid, kind, mob, xi, workers=cfg.threads)
    else:
        data = scatter_grid(grid, kind, xi, threads=cfg.threads)
    return label, data, time.perf_counter() - t0


def _status(caught, error=None) -> str:
    msgs = sorted({f"{w.category.__name__}" for w in caught})
    warn = "warn:" + "|".join(msgs) if msgs else ""
    if error is not None:
        return f"error:{type(error).__name__}" + (";" + warn if warn else "")
    return warn or "ok"


def run_continuous(cfg: ExperimentConfig):
    """Rows of RMSE of a, b, r, H and the error of E_c against the reference."""
    ref = _Reference(cfg)
    rows = []
    for scheme in cfg.schemes:
        for M in cfg.M_list:
            label = resolve_scheme(scheme)[0]
            caught = []
            try:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    label, data, wall = _compute(cfg, scheme, M)
                    r = ref(data.xi)
                rows.append({
                    "scheme": label, "M": M,
                    "RMSE_a": rmse(data.a, r.a),
                    "RMSE_b": rmse(data.b, r.b),
                    "RMSE_r": rmse(data.r, r.r),
                    "RMSE_H": rmse(data.H, 1.0),
                    "err_Ec": float(err(data.E_c, r.E_c)),
                    "wall_time_s": wall,
                    "status": _status(caught),
                })
            except (ArithmeticError, ValueError) as e:
                log.error("%s M=%d failed: %s", label, M, e)
                rows.append({"scheme": label, "M": M, "status": _status(caught, e)})
            log.info("%s M=%d done", label, M)
    return rows


def run_invariant(cfg: ExperimentConfig):
    """Summary rows ``(scheme, M, RMSE_H, max_err_H)`` and the per-xi profile."""
    rows, profile = [], []
    for scheme in cfg.schemes:
        for M in cfg.M_list:
            label = resolve_scheme(scheme)[0]
            caught = []
            try:
                with warnings.catch_warnings(record=True) as caught:
                    warnings.simplefilter("always")
                    label, data, wall = _compute(cfg, scheme, M)
                e = err(data.H, 1.0)
                rows.append({"scheme": label, "M": M, "RMSE_H": rmse(data.H, 1.0),
                             "max_err_H": float(e.max()), "wall_time_s": wall,
                             "status": _status(caught)})
                profile.extend({"scheme": label, "M": M, "xi": float(x), "err_H": float(v)}
                               for x, v in zip(data.xi, e))
            except (ArithmeticError, ValueError) as e:
                log.error("%s M=%d failed: %s", label, M, e)
                rows.append({"scheme": label, "M": M, "status": _status(caught, e)})
    return rows, profile


def run_discrete(cfg: ExperimentConfig):
    """Errors of a, b, a' and r_k at every supplied eigenvalue against the fine-grid oracle."""
    if not cfg.eigenvalues:
        raise ValueError("discrete run needs eigenvalues (--eigenvalues FILE or config)")
    oracles = []
    for z in cfg.eigenvalues:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                oracles.append(discrete_oracle(cfg.signal, z, cfg.m_oracle))
        except (ArithmeticError, ZeroDivisionError) as e:
            log.warning("no oracle eigenvalue near %s (%s); using the supplied value", z, e)
            oracles.append(None)
    rows = []
    for scheme in cfg.schemes:
        label, kind, fast = resolve_scheme(scheme)
        if fast:
            raise ValueError("discrete-spectrum runs use conventional schemes only")
        for M in cfg.M_list:
            grid = generate(replace(cfg.signal, M=M))
            for z, o in zip(cfg.eigenvalues, oracles):
                zeta = o.zeta if o is not None else z
                row = {"scheme": label, "M": M, "re_zeta": zeta.real, "im_zeta": zeta.imag}
                caught = []
                try:
                    with warnings.catch_warnings(record=True) as caught:
                        warnings.simplefilter("always")
                        t0 = time.perf_counter()
                        v = discrete_values(grid, kind, zeta)
                        wall = time.perf_counter() - t0
                        if abs(v.a_prime) < 1e-12:
                            raise DegenerateEigenvalueError("a' vanishes")
                    row.update(residual=v.residual, wall_time_s=wall, status=_status(caught))
                    if o is None:
                        row["status"] = "error:NoOracle" if row["status"] == "ok" else (
                            row["status"] + "|NoOracle")
                    else:
                        row.update(err_a=float(err(v.a, o.a)), err_b=float(err(v.b, o.b)),
                                   err_aprime=float(err(v.a_prime, o.a_prime)),
                                   err_r=float(err(v.r, o.r)))
                except (ArithmeticError, ValueError) as e:
                    row["status"] = _status(caught, e)
                rows.append(row)
    return rows


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(float(v)) if np.isfinite(v) else ""
    return str(v)


def write_csv(path, columns, rows, experiment: str, cfg: ExperimentConfig):
    fh = sys.stdout if path in (None, "-") else open(path, "w", newline="", encoding="utf-8")
    try:
        fh.write(f"{SCHEMA} {experiment} {cfg.to_json()}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r.get(c)) for c in columns])
    finally:
        if fh is not sys.stdout:
            fh.close()


def _profile_path(out):
    p = Path(out)
    return p.with_name(p.stem + "_profile" + (p.suffix or ".csv"))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("signal")
    g.add_argument("--signal", choices=KINDS)
    g.add_argument("--signal-file", dest="path", help="potential CSV (with --signal file)")
    g.add_argument("--A", type=float)
    g.add_argument("--C", type=float)
    g.add_argument("--L", type=float)
    g.add_argument("--sigma", type=int, choices=(1, -1))
    g = common.add_argument_group("run")
    g.add_argument("--M", help="comma-separated grid sizes, e.g. 1024,2048")
    g.add_argument("--scheme", action="append",
                   help="scheme name (repeatable or comma-separated); "
                        "fast variants: " + ", ".join(FAST_KINDS))
    g.add_argument("--fast", action="store_true", help="use the fast variant of every scheme")
    g.add_argument("--h", type=float, help="Moebius parameter for the fast schemes")
    g.add_argument("--fast-eval", choices=("horner", "arc"))
    g.add_argument("--xi-min", type=float)
    g.add_argument("--xi-max", type=float)
    g.add_argument("--n-xi", type=int, help="spectral points (default N = M)")
    g.add_argument("--m-ref", type=int, help="self-converged reference resolution")
    g.add_argument("--reference", help="reference spectrum CSV instead of self-convergence")
    g.add_argument("--eigenvalues", help="file with one eigenvalue per line")
    g.add_argument("--m-oracle", type=int)
    g.add_argument("--out", help="output CSV (default stdout)")
    g.add_argument("--threads", type=int)
    g.add_argument("--config", help="JSON experiment config; flags override it")
    g.add_argument("-v", "--verbose", action="count", default=0)

    p = argparse.ArgumentParser(prog="zsnft", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="experiment", required=True)
    sub.add_parser("continuous", parents=[common], help="RMSE of a, b, r, H and err of E_c")
    sub.add_parser("invariant", parents=[common], help="quadratic invariant summary and profile")
    sub.add_parser("discrete", parents=[common], help="errors at supplied eigenvalues")
    sub.add_parser("spectrum", parents=[common], help="dump a, b, H per xi for one scheme")
    return p


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        cfg = ExperimentConfig(**json.loads(Path(args.config).read_text(encoding="utf-8")))
    sig = cfg.signal
    for name in ("A", "C", "L", "sigma", "path"):
        v = getattr(args, name)
        if v is not None:
            sig = replace(sig, **{name: v})
    if args.signal:
        sig = replace(sig, kind=args.signal)
    cfg.signal = sig
    if args.M:
        cfg.M_list = [int(m) for m in args.M.split(",")]
    if args.scheme:
        cfg.schemes = [s for arg in args.scheme for s in arg.split(",") if s]
    if args.fast:
        cfg.schemes = [s if resolve_scheme(s)[2] else fast_name(SchemeKind.parse(s))
                       for s in cfg.schemes]
    if args.h is not None:
        cfg.h = {resolve_scheme(s)[0]: args.h for s in cfg.schemes if resolve_scheme(s)[2]}
    for name, attr in (("xi_min", "xi_min"), ("xi_max", "xi_max"), ("n_xi", "n_xi"),
                       ("threads", "threads"), ("out", "out"), ("fast_eval", "fast_eval"),
                       ("m_oracle", "m_oracle")):
        v = getattr(args, name)
        if v is not None:
            setattr(cfg, attr, v)
    if args.m_ref is not None:
        cfg.reference = {"self_converged": args.m_ref}
    if args.reference:
        cfg.reference = {"file": args.reference}
    if args.eigenvalues:
        cfg.eigenvalues = read_eigenvalues(args.eigenvalues)
    cfg.M_list = sorted(cfg.M_list)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.experiment == "discrete":
            cfg.reference = {}
        cfg.validate()
    except (ValueError, TypeError, OSError) as e:
        print(f"zsnft: {e}", file=sys.stderr)
        return 2

    if args.experiment == "continuous":
        write_csv(cfg.out, CONTINUOUS_COLUMNS, run_continuous(cfg), "continuous", cfg)
    elif args.experiment == "invariant":
        rows, profile = run_invariant(cfg)
        write_csv(cfg.out, INVARIANT_COLUMNS, rows, "invariant", cfg)
        if cfg.out not in (None, "-"):
            write_csv(_profile_path(cfg.out), PROFILE_COLUMNS, profile, "invariant-profile", cfg)
    elif args.experiment == "discrete":
        try:
            rows = run_discrete(cfg)
        except ValueError as e:
            print(f"zsnft: {e}", file=sys.stderr)
            return 2
        write_csv(cfg.out, DISCRETE_COLUMNS, rows, "discrete", cfg)
    else:
        label, data, _ = _compute(cfg, cfg.schemes[0], cfg.M_list[-1])
        rows = [{"xi": float(x), "re_a": a.real, "im_a": a.imag, "re_b": b.real,
                 "im_b": b.imag, "H": float(h)} for x, a, b, h in zip(data.xi, data.a, data.b, data.H)]
        write_csv(cfg.out, SPECTRUM_COLUMNS, rows, f"spectrum {label}", cfg)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
