"""Command-line front end.

Every subcommand writes one JSON report (schema ``eshelby-lab/1``) to
``--output`` or stdout; ``sweep`` additionally writes plot-ready CSV.
Exit codes: 0 on success, 2 on invalid input, 3 on numerical failure.
"""
from __future__ import annotations

import argparse
import json
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .emt import (bound_report, emt_constant_strain, emt_variational, report_bounds,
                  trace_bound_constants, write_sweep_csv)
from .errors import NumericalError
from .geometry import interior_samples, normalize_volume, parse_shape
from .potentials import DEFAULT_LEVEL, quadratic_fit_w
from .tensors import EigenClass, MaterialPair, pencil_check
from .uniformity import interior_strain_ellipsoid, uniformity_residual

__all__ = ["RunConfig", "parse_pair", "parse_loading", "build_parser", "run", "main"]

SCHEMA = "eshelby-lab/1"
DEFAULT_PAIR = '{"lambda": 1, "mu": 1, "lambda_tilde": 2, "mu_tilde": 2}'
COMMANDS = ("bounds", "emt", "uniformity", "potential-fit", "pencil", "sweep")


class UsageError(ValueError):
    pass


def parse_pair(text):
    """Material pair from inline JSON or a path to a JSON file."""
    text = text.strip()
    if not text.startswith("{"):
        path = Path(text[1:] if text.startswith("@") else text)
        try:
            text = path.read_text()
        except OSError as exc:
            raise UsageError(f"cannot read pair file {path}: {exc.strerror}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"pair is not valid JSON: {exc.msg}") from None
    return MaterialPair.from_json(obj).validate()


def parse_loading(text):
    """``hydro``, ``shear:ij`` (sqrt(2) sym(e_i e_j)) or an inline 3x3 JSON matrix."""
    text = text.strip()
    if text == "hydro":
        return np.eye(3)
    if text.startswith("shear:"):
        ij = text[6:]
        if len(ij) != 2 or not set(ij) <= set("123") or ij[0] == ij[1]:
            raise UsageError(f"bad shear loading {text!r}; expected shear:ij with i != j in 1..3")
        i, j = int(ij[0]) - 1, int(ij[1]) - 1
        A = np.zeros((3, 3))
        A[i, j] = A[j, i] = 1.0 / np.sqrt(2.0)
        return A
    try:
        A = np.array(json.loads(text), dtype=float)
    except (json.JSONDecodeError, ValueError, TypeError):
        raise UsageError(f"cannot parse loading {text!r}") from None
    if A.shape != (3, 3) or not np.allclose(A, A.T):
        raise UsageError("loading must be a symmetric 3x3 matrix")
    return A


def _parse_matrix(text, name):
    try:
        B = np.array(json.loads(text), dtype=float)
    except (json.JSONDecodeError, ValueError, TypeError):
        raise UsageError(f"cannot parse {name}") from None
    if B.shape != (3, 3):
        raise UsageError(f"{name} must be 3x3")
    return B


@dataclass
class RunConfig:
    """Validated inputs of one run; ``to_inputs`` is the report's echo."""

    command: str
    pair: dict | None = None
    shape: str | None = None
    method: str | None = None
    level: int = DEFAULT_LEVEL
    grid: int = 32
    seed: int = 0
    options: dict = field(default_factory=dict)

    def to_inputs(self):
        return asdict(self)

    @classmethod
    def from_inputs(cls, obj):
        cfg = cls(**obj)
        cfg.check()
        return cfg

    def check(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.pair is not None:
            MaterialPair.from_json(self.pair).validate()
        if self.shape is not None:
            parse_shape(self.shape)
        if self.level < 1 or self.grid < 2:
            raise UsageError("level and grid must be positive")
        return self

    @property
    def material(self):
        return MaterialPair.from_json(self.pair)


# ----------------------------------------------------------------------------
# subcommands


def _emt(cfg, shape, pair):
    if cfg.method == "variational":
        rep = emt_variational(shape, pair, n=cfg.grid)
        br = bound_report(rep.M, pair, rep.volume)
    else:
        rep = emt_constant_strain(shape, pair, method=cfg.method, level=cfg.level)
        br = report_bounds(rep, pair)
    return rep, br


def _bounds_payload(br):
    out = br.to_json()
    out["attained"] = None if br.eps_num is None else bool(br.attained())
    out["consistent"] = bool(br.consistent)
    return out


def cmd_bounds(cfg):
    pair = cfg.material
    K1, K2 = trace_bound_constants(pair)
    results = {"K1": K1, "K2": K2, "K1_plus_K2": K1 + K2}
    tol = {"constants": "closed form"}
    if cfg.shape:
        shape = parse_shape(cfg.shape)
        rep, br = _emt(cfg, shape, pair)
        results.update(_bounds_payload(br))
        results["method"] = rep.method
        tol["eps_num"] = br.eps_num
    return results, tol


def cmd_emt(cfg):
    pair = cfg.material
    shape = parse_shape(cfg.shape)
    rep, br = _emt(cfg, shape, pair)
    results = {"M": rep.M.coeffs.tolist(), "method": rep.method, "volume": rep.volume,
               "symmetry_defect": rep.symmetry_defect,
               "definiteness_sign": rep.definiteness_sign}
    results.update(_bounds_payload(br))
    results["details"] = rep.details
    dump = cfg.options.get("dump_fields")
    if dump and cfg.method == "variational":
        from .tensors import make_basis
        from .variational import PolarizationField, discretize, green_apply, maximize_EA
        Path(dump).mkdir(parents=True, exist_ok=True)
        disc = discretize(shape, pair, cfg.grid)
        for k, E in enumerate(make_basis(3).elements):
            P, _ = maximize_EA(E, shape, pair, n=cfg.grid, disc=disc)
            P.to_csv(str(Path(dump) / f"polarization_{k}.csv"))
            strain = green_apply(P, pair, disc).strain
            PolarizationField(disc.grid, strain).to_csv(str(Path(dump) / f"strain_{k}.csv"),
                                                        prefix="e")
    tol = {"M_entrywise": rep.error_estimate, "eps_num": br.eps_num}
    if cfg.method == "variational":
        tol["cg_stationarity"] = rep.details.get("stationarity")
    return results, tol


def cmd_uniformity(cfg):
    pair = cfg.material
    shape = parse_shape(cfg.shape)
    A = parse_loading(cfg.options["loading"])
    samples = int(cfg.options.get("samples", 80))
    if cfg.method in ("analytic", "quadrature"):
        sol = interior_strain_ellipsoid(A, shape, pair, method=cfg.method, level=cfg.level,
                                        check_samples=samples, seed=cfg.seed)
    else:
        sol = uniformity_residual(shape, A, pair, level=cfg.level, n_samples=samples,
                                  seed=cfg.seed)
    out = sol.to_json()
    results = {"B": out["B"], "v": out["v"], "R": out["R"], "residual": sol.residual,
               "eigen_class": EigenClass(sol.eigen_class).value, "method": sol.method,
               "shape": shape.spec(), "pair": pair.to_json()}
    return results, {"residual": sol.residual, "fit_condition": sol.condition}


def cmd_potential_fit(cfg):
    shape = parse_shape(cfg.shape)
    n = int(cfg.options.get("samples", 60))
    X = interior_samples(shape, n, margin=0.05, rng=cfg.seed)
    fit = quadratic_fit_w(shape, X, level=cfg.level)
    csv_path = cfg.options.get("csv")
    if csv_path:
        from .potentials import PotentialSamples
        PotentialSamples(X, fit(X), "w_fit").to_csv(csv_path)
    results = {"coeffs": fit.coeffs.tolist(), "hessian": fit.hessian().tolist(),
               "rel_residual": fit.rel_residual, "samples": n, "shape": shape.spec()}
    return results, {"rel_residual": fit.rel_residual}


def cmd_pencil(cfg):
    B1 = _parse_matrix(cfg.options["b1"], "b1")
    B2 = _parse_matrix(cfg.options["b2"], "b2")
    tol = float(cfg.options.get("tol", 1e-10))
    return pencil_check(B1, B2, tol=tol).to_json(), {"relative": tol}


def cmd_sweep(cfg):
    pair = cfg.material
    family = cfg.options.get("family", "ellipsoid")
    ratios = [float(r) for r in cfg.options.get("ratios", "1,1.5,2,3").split(",")]
    if any(r <= 0 for r in ratios):
        raise UsageError("aspect ratios must be positive")
    rows, eps = [], []
    for r in ratios:
        if family == "ellipsoid":
            text = f"ellipsoid:{r},1,1"
        elif family == "cuboid":
            text = f"cuboid:{r},1,1"
        elif family == "superellipsoid":
            text = f"superellipsoid:{r},1,1,4"
        else:
            raise UsageError(f"unknown sweep family {family!r}")
        shape = normalize_volume(parse_shape(text))
        if not shape.is_ellipsoid and cfg.method != "variational":
            raise UsageError("non-ellipsoidal sweeps need --method variational")
        _, br = _emt(cfg, shape, pair)
        rows.append((r, br.gap1, br.gap2))
        eps.append(br.eps_num)
    out = cfg.options.get("csv")
    if out:
        write_sweep_csv(out, rows)
    results = {"family": family,
               "rows": [{"aspect_ratio": r, "gap1": g1, "gap2": g2} for r, g1, g2 in rows],
               "csv": out}
    return results, {"eps_num": eps}


HANDLERS = {"bounds": cmd_bounds, "emt": cmd_emt, "uniformity": cmd_uniformity,
            "potential-fit": cmd_potential_fit, "pencil": cmd_pencil, "sweep": cmd_sweep}


# ----------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="eshelby-lab", description="Elastic inclusion fields, EMTs and trace bounds.")
    p.add_argument("--output", "-o", help="report path (default: stdout)")
    p.add_argument("--timing", action="store_true", help="include wall time in the report")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, shape=False, method=None):
        sp.add_argument("--pair", default=DEFAULT_PAIR, help="inline JSON or path to JSON file")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--level", type=int, default=DEFAULT_LEVEL, help="surface quadrature level")
        if shape:
            sp.add_argument("--shape", required=shape == "required",
                            help="ball:r | ellipsoid:a,b,c | cuboid:lx,ly,lz | "
                                 "superellipsoid:a,b,c,p | mesh:path.off")
        if method:
            sp.add_argument("--method", choices=method, default=method[0])

    emt_methods = ["analytic", "quadrature", "variational"]
    sp = sub.add_parser("bounds", help="trace-bound constants, optionally against a shape")
    common(sp, shape=True, method=emt_methods)
    sp.add_argument("--grid", type=int, default=32)

    sp = sub.add_parser("emt", help="elastic moment tensor of a shape")
    common(sp, shape="required", method=emt_methods)
    sp.add_argument("--grid", type=int, default=32)
    sp.add_argument("--dump-fields", help="directory for polarization CSV files")

    sp = sub.add_parser("uniformity", help="best uniform interior strain and its residual")
    common(sp, shape="required", method=["fit", "analytic", "quadrature"])
    sp.add_argument("--loading", default="hydro", help="hydro | shear:ij | 3x3 JSON")
    sp.add_argument("--samples", type=int, default=80)

    sp = sub.add_parser("potential-fit", help="quadratic fit of w inside a shape")
    common(sp, shape="required")
    sp.add_argument("--samples", type=int, default=60)
    sp.add_argument("--csv", help="write the fitted samples as CSV")

    sp = sub.add_parser("pencil", help="identically multiple spectrum of B1 + t B2")
    sp.add_argument("--b1", required=True)
    sp.add_argument("--b2", required=True)
    sp.add_argument("--tol", type=float, default=1e-10)

    sp = sub.add_parser("sweep", help="bound gaps along an aspect-ratio family")
    common(sp, method=emt_methods)
    sp.add_argument("--family", choices=["ellipsoid", "cuboid", "superellipsoid"],
                    default="ellipsoid")
    sp.add_argument("--ratios", default="1,1.5,2,3")
    sp.add_argument("--grid", type=int, default=32)
    sp.add_argument("--csv", help="CSV output path")
    return p


_OPTION_KEYS = ("loading", "samples", "csv", "b1", "b2", "tol", "family", "ratios", "dump_fields")


def config_from_args(ns):
    opts = {k: getattr(ns, k) for k in _OPTION_KEYS if getattr(ns, k, None) is not None}
    pair = parse_pair(ns.pair).to_json() if hasattr(ns, "pair") else None
    cfg = RunConfig(command=ns.command, pair=pair, shape=getattr(ns, "shape", None),
                    method=getattr(ns, "method", None),
                    level=getattr(ns, "level", DEFAULT_LEVEL), grid=getattr(ns, "grid", 32),
                    seed=getattr(ns, "seed", 0), options=opts)
    return cfg.check()


def _versions():
    return {"eshelby_lab": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else str(v)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def execute(cfg, timing=False):
    """Run a validated config and return the report dict."""
    t0 = time.perf_counter()
    results, tol = HANDLERS[cfg.command](cfg)
    report = {"schema": SCHEMA, "command": cfg.command, "inputs": cfg.to_inputs(),
              "results": results, "tolerances": tol, "versions": _versions()}
    if timing:
        report["wall_time_s"] = time.perf_counter() - t0
    return _clean(report)


def run(argv=None):
    """Parse ``argv``, execute and write the report.  Returns the exit code."""
    try:
        ns = build_parser().parse_args(argv)
        cfg = config_from_args(ns)
        report = execute(cfg, timing=ns.timing)
        text = json.dumps(report, indent=2) + "\n"
        if ns.output:
            try:
                Path(ns.output).write_text(text)
            except OSError as exc:
                raise UsageError(f"cannot write {ns.output}: {exc.strerror}") from None
        else:
            sys.stdout.write(text)
    except NumericalError as exc:
        print(f"eshelby-lab: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError, OSError) as exc:
        print(f"eshelby-lab: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    return 0


def main(argv=None):
    sys.exit(run(argv))
