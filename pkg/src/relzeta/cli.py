"""Command-line entry point: ``relzeta <command> ...``.

Exit codes: 0 success, 1 a check failed or a computation gave up, 2 usage error.
Errors are reported as one JSON object on stderr.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import asymptotics, checks, oracle
from .kernels import KernelConfig
from .multiplier import MultiplierBreakdown, breakdown, default_m, tilde_zeta
from .quadrature import QuadratureError, QuadSpec

CSV_FIELDS = ("p0", "zeta", "zeta_err", "zetaK", "zetaK_err", "zeta0", "zetaL", "tildeZeta",
              "tildeZeta0m", "tildeZetaLm", "tildeZeta1", "m", "kernel")
PLOT_QUANTITIES = CSV_FIELDS[1:-2]

DEFAULTS = {
    "rel_tol": 1e-6,
    "abs_tol": 1e-300,
    "tail_log": 40.0,
    "seed": 0,
    "threads": os.cpu_count() or 1,
    "n": 10_000,
    "max_p": 50.0,
    "rep": "rep1",
    "out": None,
    "calibration": 1.0,
    "direction": "0,0,1",
    "mc": 0,
    "quantity": "zeta",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit_error(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _vector(text: str) -> np.ndarray:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"expected X,Y,Z, got {text!r}") from None
    if len(parts) != 3 or not all(math.isfinite(v) for v in parts):
        raise UsageError(f"expected three finite components, got {text!r}")
    return np.array(parts)


def _kernel(text: str | None) -> KernelConfig:
    if not text:
        raise UsageError("--kernel is required")
    try:
        return KernelConfig.parse(text)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad kernel {text!r}: {exc}") from None


def _p0_grid(text: str) -> list[float]:
    if text.upper().startswith("LOG:"):
        try:
            _, lo, hi, n = text.split(":")
            return asymptotics.log_grid(float(lo), float(hi), int(n))
        except ValueError as exc:
            raise UsageError(f"bad grid {text!r}: {exc}") from None
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; keys mirror the long flag names, ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        if not eq:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        out[key.strip().lstrip("-").replace("-", "_")] = val.strip()
    return out


def _merge(args: argparse.Namespace, types: dict) -> argparse.Namespace:
    """Fill unset options from the config file, then from DEFAULTS."""
    config = read_config(args.config) if args.config else {}
    for key, val in vars(args).copy().items():
        if val is not None or key in ("config", "command", "func"):
            continue
        if key in config:
            caster = types.get(key) or str
            try:
                setattr(args, key, caster(config[key]))
            except ValueError:
                raise UsageError(f"config value for {key!r} is not valid") from None
        elif key in DEFAULTS:
            setattr(args, key, DEFAULTS[key])
    return args


def _spec(args) -> QuadSpec:
    try:
        return QuadSpec(rel_tol=args.rel_tol, abs_tol=args.abs_tol,
                        tail_log_threshold=args.tail_log, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_verify(args) -> int:
    rows = checks.run_all(args.n, args.seed, args.max_p)
    for row in rows:
        print(row.line())
    return 0 if all(r.ok for r in rows) else 1


def cmd_eval(args) -> int:
    cfg = _kernel(args.kernel)
    p = _vector(args.p)
    spec = _spec(args)
    b = breakdown(p, cfg, args.m, spec, calibration_constant=args.calibration)
    out = b.as_dict()
    rep = tilde_zeta(p, cfg, spec, rep=args.rep).scaled(args.calibration)
    out["rep"] = args.rep
    out["tildeZetaRep"] = {"value": rep.value, "err": rep.err_estimate}
    out["closureWithinErrors"] = abs(out["closureResidual"]) <= 3.0 * out["closureError"]
    if args.out == "json":
        print(_dump(out))
    else:
        for key in sorted(out):
            val = out[key]
            if isinstance(val, dict):
                val = f"{_fmt(val['value'])} +- {val['err']:.3g}"
            print(f"{key:20s} {val}")
    return 0


def breakdown_row(b: MultiplierBreakdown) -> dict[str, str]:
    c = b.calibration_constant
    vals = {
        "p0": b.p0, "zeta": c * b.zeta.value, "zeta_err": abs(c) * b.zeta.err_estimate,
        "zetaK": c * b.zeta_k.value, "zetaK_err": abs(c) * b.zeta_k.err_estimate,
        "zeta0": c * b.zeta0_full.value, "zetaL": c * b.zetaL_full.value,
        "tildeZeta": c * b.tilde_zeta.value, "tildeZeta0m": c * b.tilde_zeta0_m.value,
        "tildeZetaLm": c * b.tilde_zetaL_m.value, "tildeZeta1": c * b.tilde_zeta1.value,
        "m": b.m,
    }
    row = {k: _fmt(v) for k, v in vals.items()}
    row["kernel"] = b.cfg.describe()
    return row


def write_csv(rows, handle) -> None:
    writer = csv.DictWriter(handle, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)


def cmd_scan(args) -> int:
    cfg = _kernel(args.kernel)
    grid = _p0_grid(args.p0)
    direction = _vector(args.direction)
    try:
        results = asymptotics.scan(grid, direction, cfg, args.m, _spec(args), workers=args.threads)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows, failures = [], []
    for res in results:
        if isinstance(res, MultiplierBreakdown):
            rows.append(breakdown_row(dataclasses.replace(res, calibration_constant=args.calibration)))
        else:
            failures.append(res)
    if args.out and args.out != "-":
        with open(args.out, "w", newline="") as fh:
            write_csv(rows, fh)
    else:
        write_csv(rows, sys.stdout)
    for f in failures:
        sys.stderr.write(json.dumps({"error": "ScanFailure", "p0": f.p0, "message": f.message}) + "\n")
    return 1 if failures else 0


def read_csv(path: str) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise UsageError(f"{path} has no data rows")
    missing = set(CSV_FIELDS) - set(rows[0])
    if missing:
        raise UsageError(f"{path} lacks columns {sorted(missing)}")
    return rows


def cmd_fit(args) -> int:
    rows = read_csv(args.input)
    kernels = {r["kernel"] for r in rows}
    if len(kernels) != 1:
        raise UsageError("fit needs rows from a single kernel")
    cfg = _kernel(kernels.pop())
    samples = [(float(r["p0"]), float(r[args.quantity])) for r in rows
               if float(r["p0"]) >= asymptotics.FIT_MIN_P0]
    rho = cfg.rho
    out = {"quantity": args.quantity, "kernel": cfg.describe(), "n": len(samples)}
    try:
        if args.quantity == "tildeZeta1":
            m = float(rows[0]["m"])
            fit = asymptotics.fit_stretched(samples, m)
            out.update(variable=f"p0^(1/{m:g})", requirement="slope < 0 and r2 >= 0.9")
            ok = fit.slope < 0 and fit.r2 >= 0.9
        else:
            fit = asymptotics.fit_exponent(samples)
            if args.quantity == "zeta":
                target = asymptotics.target_slope(cfg)
                out.update(target=target, requirement=f"|slope - target| <= {asymptotics.SLOPE_TOL}")
                ok = abs(fit.slope - target) <= asymptotics.SLOPE_TOL
            else:
                limit = 0.5 * rho + (asymptotics.EPSILON if args.quantity == "zetaK"
                                     else asymptotics.BOUND_TOL)
                out.update(limit=limit, requirement="slope <= limit")
                ok = fit.slope <= limit
    except asymptotics.InsufficientDataError as exc:
        return _emit_error("InsufficientData", str(exc), 1)
    out.update(slope=fit.slope, stdErr=fit.std_err, r2=fit.r2, intercept=fit.intercept, passed=ok)
    print(_dump(out))
    return 0 if ok else 1


def cmd_oracle(args) -> int:
    cfg = _kernel(args.kernel)
    p = _vector(args.p)
    spec = _spec(args)
    t0 = time.perf_counter()
    try:
        direct = oracle.direct_tilde_zeta(p, cfg, QuadSpec(rel_tol=max(args.rel_tol, 1e-4),
                                                              tail_log_threshold=args.tail_log))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rep1 = tilde_zeta(p, cfg, spec, rep="rep1")
    rep2 = tilde_zeta(p, cfg, spec, rep="rep2")
    ratio = direct.value / rep1.value
    out = {
        "kernel": cfg.describe(), "p": [float(v) for v in p],
        "direct": {"value": direct.value, "err": direct.err_estimate},
        "rep1": {"value": rep1.value, "err": rep1.err_estimate},
        "rep2": {"value": rep2.value, "err": rep2.err_estimate},
        "calibrationConstant": ratio,
        "rep1OverRep2": rep1.value / rep2.value,
    }
    ok = True
    if args.mc:
        mc = oracle.direct_tilde_zeta_mc(p, cfg, n=args.mc, seed=args.seed)
        dev = abs(mc.value - direct.value)
        within = dev <= 4.0 * mc.err_estimate + 3.0 * direct.err_estimate
        out["mc"] = {"value": mc.value, "stdErr": mc.err_estimate, "samples": args.mc,
                     "agreesWithQuadrature": within}
        ok = ok and within
    if cfg.cutoff:
        gain, loss = oracle.reduced_gain_loss(p, cfg, spec)
        out["reducedGainMinusLoss"] = gain.value - loss.value
    out["seconds"] = round(time.perf_counter() - t0, 1) if args.timing else None
    print(_dump({k: v for k, v in out.items() if v is not None}))
    return 0 if ok else 1


def cmd_demo(args) -> int:
    cfg = _kernel(args.kernel)
    p = _vector(args.p)
    try:
        cutoffs = [float(v) for v in args.cutoffs.split(",")]
        raw = oracle.divergence_demo(p, cfg, cutoffs)
        weighted = oracle.divergence_demo(p, cfg, cutoffs, weighted=True)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    increasing = all(b.value > a.value for a, b in zip(raw, raw[1:]))
    rows = [{"R": c, "postCollisionLoss": r.value, "weightedLoss": w.value}
            for c, r, w in zip(cutoffs, raw, weighted)]
    print(_dump({"kernel": cfg.describe(), "partials": rows, "strictlyIncreasing": increasing,
                 "growth": raw[-1].value / raw[0].value}))
    return 0 if increasing else 1


def cmd_plot(args) -> int:
    rows = read_csv(args.input)
    prefix = args.out or Path(args.input).with_suffix("").as_posix()
    for q in PLOT_QUANTITIES:
        with open(f"{prefix}_{q}.dat", "w") as fh:
            fh.write(f"# p0 {q}\n")
            for r in rows:
                fh.write(f"{r['p0']} {r[q]}\n")
    print(json.dumps({"written": [f"{prefix}_{q}.dat" for q in PLOT_QUANTITIES]}))
    return 0


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("numerics")
    g.add_argument("--rel-tol", type=float, help="outer relative tolerance (default 1e-6)")
    g.add_argument("--abs-tol", type=float, help="absolute tolerance floor")
    g.add_argument("--tail-log", type=float, help="log-magnitude below which tails are dropped")
    g.add_argument("--seed", type=int, help="seed for random suites and Monte Carlo")
    g.add_argument("--threads", type=int, help="worker processes for scans")
    g.add_argument("--config", help="key=value file; flags override it")

    parser = _Parser(prog="relzeta", description="Relativistic linearized frequency multiplier.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    s = sub.add_parser("verify-identities", parents=[common], help="randomised invariant suites")
    s.add_argument("--n", type=int)
    s.add_argument("--max-p", type=float)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("eval", parents=[common], help="full breakdown at one momentum")
    s.add_argument("--p")
    s.add_argument("--kernel")
    s.add_argument("--m", type=float)
    s.add_argument("--rep", choices=("rep1", "rep2"))
    s.add_argument("--out", choices=("json", "text"))
    s.add_argument("--calibration", type=float, help="overall constant applied to every output")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("scan", parents=[common], help="breakdowns over a p0 grid, as CSV")
    s.add_argument("--p0", help="LOG:A:B:N or a comma list")
    s.add_argument("--kernel")
    s.add_argument("--m", type=float)
    s.add_argument("--direction")
    s.add_argument("--calibration", type=float)
    s.add_argument("--out", help="CSV path (default stdout)")
    s.set_defaults(func=cmd_scan)

    s = sub.add_parser("fit", parents=[common], help="exponent fit of one CSV column")
    s.add_argument("--in", dest="input")
    s.add_argument("--quantity", choices=("zeta", "zetaK", "zetaL", "tildeZeta1"))
    s.set_defaults(func=cmd_fit)

    s = sub.add_parser("oracle", parents=[common], help="direct quadrature against Rep1 and Rep2")
    s.add_argument("--p")
    s.add_argument("--kernel")
    s.add_argument("--mc", type=int, help="also run N Monte Carlo samples")
    s.add_argument("--timing", action="store_true", default=None)
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("demo-divergence", parents=[common], help="partial integrals in R")
    s.add_argument("--p")
    s.add_argument("--kernel")
    s.add_argument("--cutoffs")
    s.set_defaults(func=cmd_demo)

    s = sub.add_parser("plot-data", parents=[common], help="two-column .dat files per quantity")
    s.add_argument("--in", dest="input")
    s.add_argument("--out", help="output prefix (default: input path without suffix)")
    s.set_defaults(func=cmd_plot)
    return parser


def _option_types(parser: argparse.ArgumentParser, command: str) -> dict:
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return {a.dest: a.type for a in sub.choices[command]._actions if a.type is not None}


_REQUIRED = {
    "eval": ("p", "kernel"), "scan": ("p0", "kernel"), "fit": ("input",),
    "oracle": ("p", "kernel"), "demo-divergence": ("p", "kernel", "cutoffs"), "plot-data": ("input",),
}


def main(argv=None) -> int:
    try:
        parser = build_parser()
        args = parser.parse_args(argv)
        args = _merge(args, _option_types(parser, args.command))
        missing = [k for k in _REQUIRED.get(args.command, ()) if getattr(args, k, None) is None]
        if missing:
            raise UsageError("missing " + ", ".join("--" + k.replace("_", "-") for k in missing))
        if getattr(args, "m", None) is None and hasattr(args, "m") and getattr(args, "kernel", None):
            args.m = float(default_m(_kernel(args.kernel)))
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        return args.func(args)
    except UsageError as exc:
        return _emit_error("usage", str(exc), 2)
    except OSError as exc:
        return _emit_error(type(exc).__name__, str(exc), 2)
    except (QuadratureError, oracle.CalibrationError, ArithmeticError, RuntimeError) as exc:
        return _emit_error(type(exc).__name__, str(exc), 1)


if __name__ == "__main__":
    sys.exit(main())
