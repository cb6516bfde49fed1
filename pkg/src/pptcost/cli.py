"""Command-line front end: ``pptcost {compute,sweep,counterexample,validate}``.

Exit codes: 0 success, 1 failed reproduction check, 2 parse error,
3 validation error, 4 solver failure, 5 dimension cap exceeded.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import hierarchy, linalg, states
from .errors import (
    DimensionCapError,
    DimensionError,
    NotHermitianError,
    SolverError,
    ValidationError,
)
from .linalg import BipartiteShape
from .sdp import SolverConfig

EXIT_OK = 0
EXIT_CHECK = 1
EXIT_PARSE = 2
EXIT_VALIDATION = 3
EXIT_SOLVER = 4
EXIT_DIMCAP = 5

CSV_COLUMNS = ("p", "e_chi_bits", "e_kappa_bits", "eps_p", "gap_bound_bits", "iters", "seconds")


class ParseError(Exception):
    pass


class CheckFailed(Exception):
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


# -- configuration ---------------------------------------------------------------


def _env_float(name):
    v = os.environ.get(name)
    if v is None or v == "":
        return None
    try:
        return float(v)
    except ValueError as exc:
        raise ParseError(f"{name}={v!r} is not a number") from exc


def _env_int(name):
    v = os.environ.get(name)
    if v is None or v == "":
        return None
    try:
        return int(v)
    except ValueError as exc:
        raise ParseError(f"{name}={v!r} is not an integer") from exc


def solver_config(args) -> SolverConfig:
    gap = args.gap_tol if getattr(args, "gap_tol", None) is not None else _env_float("PPTCOST_GAP_TOL")
    gap = 1e-8 if gap is None else gap
    if not gap > 0:
        raise ParseError("gap tolerance must be positive")
    return SolverConfig(gap_tol=gap, feas_tol=min(1e-8, gap), max_iters=args.max_iters)


def max_dim(args) -> int:
    if getattr(args, "max_dim", None) is not None:
        return args.max_dim
    env = _env_int("PPTCOST_MAX_DIM")
    return states.DEFAULT_MAX_DIM if env is None else env


# -- state sources ---------------------------------------------------------------


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ParseError(f"bad number list {text!r}") from exc


def _ints(text, n):
    parts = text.split(",")
    if len(parts) != n:
        raise ParseError(f"expected {n} comma-separated integers, got {text!r}")
    try:
        return [int(x) for x in parts]
    except ValueError as exc:
        raise ParseError(f"bad integer list {text!r}") from exc


def load_state(source: str, cap: int):
    """Resolve a builtin name or a state file into ``(DensityMatrix, descriptor)``."""
    name, _, arg = source.partition(":")
    if name == "phi":
        (d,) = _ints(arg, 1)
        if d < 1:
            raise ParseError("phi:d needs d >= 1")
        rho = states.max_entangled(d)
    elif name == "punchcard":
        if arg not in ("pi0", ""):
            raise ParseError(f"unknown punch-card state {arg!r}")
        rho = states.punch_card_pi0()
    elif name == "pure":
        lam = _floats(arg)
        if not lam:
            raise ParseError("pure: needs Schmidt coefficients")
        rho = states.pure_from_schmidt(lam)
    elif name == "random":
        da, db, rank, seed = _ints(arg, 4)
        if da < 1 or db < 1:
            raise ParseError("local dimensions must be >= 1")
        if da * db > cap:
            raise DimensionCapError(f"dimension {da * db} exceeds cap {cap}")
        rho = states.random_density(BipartiteShape(da, db), rank, seed)
    elif name == "isotropic":
        vals = _floats(arg)
        if len(vals) not in (1, 2):
            raise ParseError("isotropic:v or isotropic:v,d")
        d = int(vals[1]) if len(vals) == 2 else 2
        rho = states.isotropic(vals[0], d)
    else:
        path = Path(source)
        if not path.exists():
            raise ParseError(f"unknown state {source!r} (not a builtin and no such file)")
        try:
            rho = states.read_state(path)
        except (json.JSONDecodeError, DimensionError) as exc:
            raise ParseError(f"cannot parse state file {source}: {exc}") from exc
        except ValueError as exc:
            if isinstance(exc, (ValidationError, NotHermitianError)):
                raise
            raise ParseError(f"cannot parse state file {source}: {exc}") from exc
        return rho, {"file": str(path)}
    if rho.dim > cap:
        raise DimensionCapError(f"dimension {rho.dim} exceeds cap {cap}")
    return rho, {"builtin": source}


# -- measures --------------------------------------------------------------------


def _chain_report(cert, rho, config):
    resid = max(cert.dual.residual if cert.dual else 0.0, cert.chain_violation(rho))
    return {
        "value_bits": cert.log_value,
        "value_linear": cert.value,
        "lower_bits": max(0.0, cert.log_lower),
        "upper_bits": cert.log_upper,
        "residual": resid,
        "iterations": cert.iterations,
    }


def compute_measure(rho, measure: str, config: SolverConfig, with_kappa=None) -> dict:
    kind, _, arg = measure.partition(":")
    if kind == "negativity":
        tn = linalg.trace_norm(rho.pt())
        return {"value_bits": math.log2(tn), "value_linear": tn, "residual": 0.0, "iterations": 0}
    if kind in ("chi", "kappa"):
        try:
            level = int(arg)
        except ValueError as exc:
            raise ParseError(f"{kind} needs an integer level, got {arg!r}") from exc
        if level < (0 if kind == "chi" else 1):
            raise ParseError(f"level {level} out of range for {kind}")
        fn = hierarchy.chi if kind == "chi" else hierarchy.kappa
        out = _chain_report(fn(rho, level, config), rho, config)
        out["level"] = level
        return out
    if kind == "cost":
        try:
            eps = float(arg)
        except ValueError as exc:
            raise ParseError(f"cost needs a numeric accuracy, got {arg!r}") from exc
        if not eps > 0:
            raise ParseError("cost accuracy must be positive")
        est = hierarchy.ppt_cost(rho, eps, config, with_kappa=with_kappa)
        return {
            "value_bits": est.point_estimate,
            "value_linear": 2.0 ** est.point_estimate,
            "lower_bits": est.lower_bits,
            "upper_bits": est.upper_bits,
            "epsilon": eps,
            "level": est.level_used,
            "gap_bound_bits": est.gap_bound_bits,
            "residual": 0.0,
            "iterations": est.iterations,
        }
    if kind == "dmax":
        value, lop = hierarchy.dmax_ppt(rho.matrix, rho.shape, config)
        resid = max(0.0, -linalg.min_eigenvalue(lop - rho.matrix), -linalg.min_eigenvalue(lop),
                    -linalg.min_eigenvalue(linalg.partial_transpose(lop, rho.shape)))
        return {"value_bits": math.log2(value), "value_linear": value, "residual": resid, "iterations": 0}
    raise ParseError(f"unknown measure {measure!r}")


# -- output ----------------------------------------------------------------------


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def emit(report: dict, as_json: bool, out=None):
    out = out or sys.stdout
    if as_json:
        out.write(json.dumps(_clean(report), indent=2, sort_keys=True) + "\n")
        return
    for key, val in report.items():
        if key == "rows":
            continue
        if isinstance(val, float):
            out.write(f"{key:16s} {val:.10g}\n")
        elif isinstance(val, dict):
            out.write(f"{key:16s} " + " ".join(f"{k}={v}" for k, v in val.items()) + "\n")
        else:
            out.write(f"{key:16s} {val}\n")
    rows = report.get("rows")
    if rows:
        out.write("  ".join(f"{c:>14s}" for c in CSV_COLUMNS) + "\n")
        for r in rows:
            out.write("  ".join(f"{r.get(c, float('nan')):>14.8g}" for c in CSV_COLUMNS) + "\n")


def _tolerance_ok(report, config):
    return report.get("residual", 0.0) <= 10 * config.feas_tol


# -- commands --------------------------------------------------------------------


def cmd_compute(args) -> dict:
    config = solver_config(args)
    rho, desc = load_state(args.state, max_dim(args))
    t0 = time.perf_counter()
    res = compute_measure(rho, args.measure, config, with_kappa=args.kappa)
    seconds = time.perf_counter() - t0
    report = {"input": desc, "measure": args.measure, "dim_a": rho.shape.dim_a, "dim_b": rho.shape.dim_b}
    report.update(res)
    report["status"] = "ok" if _tolerance_ok(res, config) else "residual-exceeded"
    if args.timing:
        report["seconds"] = seconds
    return report


def _sweep_row(rho, p, config):
    r = hierarchy.sweep_level(rho, p, config)
    return {c: getattr(r, c) for c in CSV_COLUMNS}


def cmd_sweep(args) -> dict:
    config = solver_config(args)
    rho, desc = load_state(args.state, max_dim(args))
    if args.p_max < 1:
        raise ParseError("--p-max must be >= 1")
    levels = list(range(1, args.p_max + 1))
    if args.jobs > 1:
        with ThreadPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(lambda p: _sweep_row(rho, p, config), levels))
    else:
        rows = [_sweep_row(rho, p, config) for p in levels]
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(CSV_COLUMNS)
            for r in rows:
                w.writerow([r[c] if c in ("p", "iters") else repr(float(r[c])) for c in CSV_COLUMNS])
    if not args.timing:
        rows = [{k: v for k, v in r.items() if k != "seconds"} for r in rows]
    return {"input": desc, "p_max": args.p_max, "status": "ok", "rows": rows}


def cmd_counterexample(args) -> dict:
    config = solver_config(args)
    t0 = time.perf_counter()
    pi0 = states.punch_card_pi0()
    two = states.tensor_power(pi0, 2, max_dim(args))
    k1 = hierarchy.kappa(pi0, 1, config)
    k2 = hierarchy.kappa(two, 1, config)
    e1, e2 = k1.log_value, k2.log_value
    margin = 2 * e1 - e2
    report = {
        "e_n_pi0_bits": hierarchy.log_negativity(pi0),
        "e_kappa_pi0_bits": e1,
        "twice_e_kappa_pi0_bits": 2 * e1,
        "e_kappa_pi0_x2_bits": e2,
        "margin_bits": margin,
        "binegativity_defect_pi0": states.binegativity_defect(pi0),
        "residual": max(k1.chain_violation(pi0), k2.chain_violation(two),
                        k1.dual.residual, k2.dual.residual),
        "iterations": k1.iterations + k2.iterations,
    }
    report["status"] = "ok" if margin >= 0.01 else "violation-not-reproduced"
    if args.timing:
        report["seconds"] = time.perf_counter() - t0
    if margin < 0.01:
        raise CheckFailed(f"additivity violation margin {margin:.4f} < 0.01 bits", report)
    return report


def cmd_validate(args) -> dict:
    path = Path(args.file)
    if not path.exists():
        raise ParseError(f"no such file: {path}")
    try:
        rho = states.read_state(path)
    except (json.JSONDecodeError, DimensionError) as exc:
        raise ParseError(f"cannot parse {path}: {exc}") from exc
    except (ValidationError, NotHermitianError):
        raise
    except ValueError as exc:
        raise ParseError(f"cannot parse {path}: {exc}") from exc
    defect = states.binegativity_defect(rho)
    return {
        "file": str(path),
        "dim_a": rho.shape.dim_a,
        "dim_b": rho.shape.dim_b,
        "valid": True,
        "binegativity_defect": defect,
        "zero_binegativity": defect >= -1e-8,
        "note": "zero bi-negativity" if defect >= -1e-8 else "non-zero bi-negativity",
        "status": "ok",
    }


# -- entry point -----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EXIT_PARSE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--timing", action="store_true", help="include wall time in the report")
    common.add_argument("--gap-tol", type=float, default=None, help="solver duality-gap tolerance")
    common.add_argument("--max-dim", type=int, default=None, help="largest total dimension allowed")
    common.add_argument("--max-iters", type=int, default=200)
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="pptcost", description="Zero-error PPT entanglement cost via SDP hierarchies.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("compute", parents=[common], help="evaluate one measure on a state")
    c.add_argument("--state", required=True,
                   help="state file or builtin: phi:d, punchcard:pi0, pure:l1,l2,..., "
                        "random:dA,dB,rank,seed, isotropic:v[,d]")
    c.add_argument("--measure", required=True, help="negativity | chi:p | kappa:q | cost:eps | dmax")
    c.add_argument("--kappa", dest="kappa", action="store_true", default=None,
                   help="also solve the kappa level for the cost bracket")
    c.add_argument("--no-kappa", dest="kappa", action="store_false")
    c.set_defaults(func=cmd_compute)

    s = sub.add_parser("sweep", parents=[common], help="tabulate chi_p and kappa_p for p = 1..p_max")
    s.add_argument("--state", required=True)
    s.add_argument("--p-max", type=int, required=True)
    s.add_argument("--csv", default=None, help="write the table to this CSV file")
    s.add_argument("--jobs", type=int, default=1, help="solve levels in parallel")
    s.set_defaults(func=cmd_sweep)

    x = sub.add_parser("counterexample", parents=[common],
                       help="two-copy additivity violation of the kappa quantity on the punch-card state")
    x.set_defaults(func=cmd_counterexample)

    v = sub.add_parser("validate", parents=[common], help="check a state file")
    v.add_argument("file")
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.verbose:
        import logging

        logging.basicConfig(level=logging.DEBUG)
    try:
        report = args.func(args)
    except ParseError as exc:
        sys.stderr.write(f"pptcost: parse error: {exc}\n")
        return EXIT_PARSE
    except DimensionCapError as exc:
        sys.stderr.write(f"pptcost: dimension cap: {exc}\n")
        return EXIT_DIMCAP
    except (ValidationError, NotHermitianError, DimensionError) as exc:
        sys.stderr.write(f"pptcost: validation error: {exc}\n")
        return EXIT_VALIDATION
    except SolverError as exc:
        sys.stderr.write(f"pptcost: solver failure: {exc}\n")
        return EXIT_SOLVER
    except CheckFailed as exc:
        emit(exc.report, args.json)
        sys.stderr.write(f"pptcost: {exc}\n")
        return EXIT_CHECK
    emit(report, args.json)
    if report.get("status") == "residual-exceeded":
        sys.stderr.write("pptcost: certificate residual above tolerance\n")
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
