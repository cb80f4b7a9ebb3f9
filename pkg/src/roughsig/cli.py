"""Command line front end: ``roughsig {sig,lift,rde,pvar,expected-sig,gen}``.

Exit codes: 0 success, 2 bad input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import tensor_algebra as ta
from .branched_hopf import branched_chen_defect, branched_lift_bv, encode_forest
from .controlled_rde import RDEBlowUp, field_from_json, solve_rde_euler, solve_rde_picard
from .errors import InputError, NumericalError
from .io import read_path_csv, tensor_coefficients, write_path_csv, write_report
from .path_gen import GenSpec, sample
from .pvar_sewing import p_variation
from .rough_path import brownian_lift, chen_defect, lift_piecewise_linear, rough_pvar
from .signature import expected_signature, log_signature, signature

SEED_ENV = "ROUGHSIG_SEED"


def cmd_sig(args) -> dict:
    x = read_path_csv(args.input, no_time=args.no_time)
    S = signature(x, args.level)
    meta = {"grid_size": S.grid_size, "grouplike_defect": ta.shuffle_defect(S.tensor)}
    report = {"dimension": S.d, "level": S.level}
    if args.log:
        L = log_signature(S, args.level)
        report["lyndon"] = L.as_dict()
        meta["lie_residual"] = L.residual
    else:
        report["coefficients"] = tensor_coefficients(S.tensor)
    report["metadata"] = meta
    return report


def cmd_lift(args) -> dict:
    x = read_path_csv(args.input, no_time=args.no_time)
    report = {"dimension": x.values.shape[1], "level": args.level, "variant": args.variant, "times": x.times}
    if args.variant == "branched":
        X = branched_lift_bv(x, args.level)
        keys = [encode_forest(f) for f in X.point(0).table.forests]
        report["trajectory"] = [dict(zip(keys, row.tolist())) for row in X.data]
        report["metadata"] = {"chen_defect": branched_chen_defect(X)}
        return report
    if args.variant == "canonical":
        X = lift_piecewise_linear(x, args.level)
    else:
        if args.level != 2:
            raise InputError(f"{args.variant} lifts are level-2 constructions, got --level {args.level}")
        X = brownian_lift(x, args.variant)
    report["trajectory"] = [tensor_coefficients(X.point(i)) for i in range(X.n_points)]
    report["metadata"] = {"chen_defect": chen_defect(X), "grouplike_defect": ta.shuffle_defect(X.endpoint)}
    return report


def _read_y0(text: str) -> np.ndarray:
    p = Path(text)
    if p.exists():
        text = p.read_text()
    try:
        vals = [float(v) for v in text.replace("\n", ",").split(",") if v.strip()]
    except ValueError as exc:
        raise InputError(f"cannot parse initial condition {text!r}") from exc
    if not vals:
        raise InputError("empty initial condition")
    return np.array(vals)


def cmd_rde(args) -> dict:
    x = read_path_csv(args.driver, no_time=args.no_time)
    try:
        spec = json.loads(Path(args.field).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read vector field {args.field}: {exc}") from exc
    f = field_from_json(spec)
    y0 = _read_y0(args.y0)
    X = lift_piecewise_linear(x, args.level)
    report = {"method": args.method, "level": args.level, "times": X.times}
    if args.method == "euler":
        sol = solve_rde_euler(f, X, y0, args.level)
        report["values"] = sol.values
    else:
        res = solve_rde_picard(f, X, y0, args.level, max_iter=args.max_iter, tol=args.tol)
        report["values"] = res.values
        report["iterations"] = res.iterations
    report["terminal"] = report["values"][-1]
    return report


def cmd_pvar(args) -> dict:
    x = read_path_csv(args.input, no_time=args.no_time)
    if args.rough:
        X = lift_piecewise_linear(x, args.level)
        return {"p": args.p, "level": args.level, "rough": True, "value": rough_pvar(X, args.p)}
    value, points = p_variation(x, args.p, return_points=True)
    return {"p": args.p, "rough": False, "value": value, "dissection": list(points)}


def cmd_expected_sig(args) -> dict:
    files = sorted(glob.glob(args.glob))
    if not files:
        raise InputError(f"no files match {args.glob!r}")
    E = expected_signature((read_path_csv(f, no_time=args.no_time) for f in files), args.level)
    return {
        "dimension": E.mean.d,
        "level": E.mean.N,
        "count": E.count,
        "files": files,
        "coefficients": tensor_coefficients(E.mean),
        "stderr": {ta.format_word(w): float(s) for k, lvl in enumerate(E.stderr) for w, s in zip(ta.words(E.mean.d, k), lvl)},
        "radius_diagnostic": E.radius_diagnostic,
    }


def cmd_gen(args) -> dict:
    seed = args.seed
    if seed is None:
        env = os.environ.get(SEED_ENV)
        try:
            seed = int(env) if env is not None else 0
        except ValueError as exc:
            raise InputError(f"{SEED_ENV}={env!r} is not an integer") from exc
    spec = GenSpec(d=args.d, n=args.n, T=args.T, seed=seed, kind=args.kind, H=args.H)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for k in range(args.count):
        name = out / f"path_{k:04d}.csv"
        write_path_csv(name, sample(spec.member(k)))
        written.append(str(name))
    return {"kind": spec.kind, "seed": seed, "count": args.count, "files": written}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="roughsig", description="Signatures, rough paths and RDE solvers for sampled paths.")
    ap.add_argument("--json-errors", action="store_true", help="write errors to stderr as JSON")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json-errors", action="store_true", default=argparse.SUPPRESS, help="write errors to stderr as JSON")
    sub = ap.add_subparsers(dest="command", required=True)

    def path_opts(p, name="--input"):
        p.add_argument(name, required=True, help="CSV path file")
        p.add_argument("--no-time", action="store_true", help="every column is a coordinate; uniform grid on [0,1]")

    p = sub.add_parser("sig", parents=[common], help="truncated signature or log-signature")
    path_opts(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--log", action="store_true", help="Lyndon coordinates of the log-signature")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sig)

    p = sub.add_parser("lift", parents=[common], help="rough path lift trajectory")
    path_opts(p)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--variant", choices=["canonical", "ito", "strat", "branched"], default="canonical")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_lift)

    p = sub.add_parser("rde", parents=[common], help="solve dY = f(Y) dX along the canonical lift of a driver")
    path_opts(p, "--driver")
    p.add_argument("--field", required=True, help="vector field JSON")
    p.add_argument("--y0", required=True, help="comma-separated initial condition or a file holding it")
    p.add_argument("--method", choices=["euler", "picard"], default="euler")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_rde)

    p = sub.add_parser("pvar", parents=[common], help="p-variation of a path or of its rough lift")
    path_opts(p)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--rough", action="store_true")
    p.add_argument("--level", type=int, default=2)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_pvar)

    p = sub.add_parser("expected-sig", parents=[common], help="mean signature over files matching a glob")
    p.add_argument("--glob", required=True)
    p.add_argument("--level", type=int, required=True)
    p.add_argument("--no-time", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_expected_sig)

    p = sub.add_parser("gen", parents=[common], help="seeded Brownian or fractional Brownian paths")
    p.add_argument("kind", choices=["bm", "fbm"])
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--H", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=None, help=f"defaults to ${SEED_ENV}, else 0")
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_gen)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
        write_report(report, getattr(args, "out", "-") if args.command != "gen" else "-")
        return 0
    except InputError as exc:
        return _fail(args, exc, 2, "input")
    except NumericalError as exc:
        extra = {"step": exc.step} if isinstance(exc, RDEBlowUp) else {}
        return _fail(args, exc, 3, "numerical", extra)


def _fail(args, exc: Exception, code: int, kind: str, extra: dict | None = None) -> int:
    if args.json_errors:
        sys.stderr.write(json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc), **(extra or {})}) + "\n")
    else:
        sys.stderr.write(f"roughsig: {kind} error: {exc}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
