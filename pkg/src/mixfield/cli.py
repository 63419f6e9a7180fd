"""Command line interface: ``mixfield <command> ...``.

Exit codes: 0 when every check passes, 1 when a mathematical claim fails,
2 on usage or resource errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import field as fb
from .coefficients import CoefficientKind, windowed_coefficient
from .errors import MixfieldError
from .exact import as_rational, format_rational
from .lattice import parse_window
from .nu import NuSpec, check_lemma_2_6, nu_dist
from .plans import VerifyPlan, default_plan, run_plan
from .sampler import (empirical_independence, read_csv, sample_window, uniformize,
                      write_csv)

SAMPLE_CELL_CAP = 50_000_000
SAMPLE_WINDOW_CAP = 4096


class UsageError(Exception):
    pass


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    return max(1, int(os.environ.get("MIXFIELD_THREADS", "1")))


def _rational(text: str) -> Fraction:
    try:
        return as_rational(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"{text!r} is not a rational p/q: {exc}") from None


def _load_field(path: str) -> fb.FieldModel:
    try:
        return fb.FieldModel.from_json(Path(path).read_text())
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"malformed field spec {path}: {exc}") from None


def _emit_json(data, path: str | None):
    text = json.dumps(data, sort_keys=True, indent=2)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


# ---- build ---------------------------------------------------------------

def cmd_build(args) -> int:
    c = args.construction
    try:
        if c == "lemma31":
            if args.n is None or args.theta is None:
                raise UsageError("lemma31 needs --n and --theta")
            model = fb.lemma_3_1_field(args.d, args.N, args.n, _rational(args.theta), args.M)
        elif c == "lemma41":
            if args.n is None:
                raise UsageError("lemma41 needs --n")
            model = fb.lemma_4_1_field(args.d, args.N, args.n)
        elif c == "lemma42":
            if args.levels is None:
                raise UsageError("lemma42 needs --levels")
            model = fb.lemma_4_2_field(args.d, args.N, args.levels)
        elif c == "thm14":
            if not args.rates:
                raise UsageError("thm14 needs --rates")
            model = fb.theorem_1_4_field(args.d, args.N, [_rational(r) for r in args.rates.split(",")])
        else:
            if not args.rates or args.levels is None:
                raise UsageError("thm15 needs --rates and --levels")
            model = fb.theorem_1_5_field(args.d, args.N, [_rational(r) for r in args.rates.split(",")],
                                         args.levels)
    except MixfieldError as exc:
        raise UsageError(f"invalid parameters for {c}: {exc}") from None
    except ValueError as exc:
        raise UsageError(f"invalid parameters for {c}: {exc}") from None
    Path(args.out).write_text(model.to_json())
    print(f"construction={model.construction} d={model.d} N={model.N} "
          f"levels={len(model.levels)} alphabet=2^{model.alphabet_bits}")
    print("params: " + json.dumps(model.params, sort_keys=True))
    for i, lvl in enumerate(model.levels):
        print(f"  level {i}: card={lvl.size} theta={format_rational(lvl.theta)}")
    return 0


# ---- coeffs --------------------------------------------------------------

def _n_range(text: str) -> range:
    try:
        if ".." in text:
            a, b = (int(x) for x in text.split(".."))
        else:
            a = b = int(text)
    except ValueError:
        raise UsageError(f"malformed --n-range {text!r}; use a..b") from None
    if a < 1 or b < a:
        raise UsageError(f"--n-range {text!r} must satisfy 1 <= a <= b")
    return range(a, b + 1)


def _fmt(x) -> str:
    if x is None:
        return "-"
    if isinstance(x, Fraction):
        return f"{format_rational(x)} ({float(x):.10g})"
    return f"{x:.10g}"


def cmd_coeffs(args) -> int:
    model = _load_field(args.field)
    window = None if args.window == "auto" else parse_window(args.window, model.d)
    methods = ["structural", "numeric"] if args.method == "both" else [args.method]
    threads = _threads(args)
    rows = []
    for n in _n_range(args.n_range):
        reports = {m: windowed_coefficient(model, args.kind, n, window, m, threads=threads)
                   for m in methods}
        for m, rep in reports.items():
            row = rep.to_dict()
            if args.method == "both":
                s, q = reports["structural"], reports["numeric"]
                if args.kind == "alpha":
                    row["delta"] = abs(float(s.bracket[1]) - float(q.bracket[1]))
                else:
                    row["delta"] = abs(float(s.value) - float(q.value))
            rows.append(row)
            witness = rep.witness
            wtxt = "-" if witness is None else f"S={_short(witness[0])} T={_short(witness[1])}"
            extra = ""
            if rep.bracket is not None and not rep.tight:
                extra = f" bracket=[{_fmt(rep.bracket[0])}, {_fmt(rep.bracket[1])}]"
            if "delta" in row:
                extra += f" delta={row['delta']:.3g}"
            print(f"n={n} {args.kind} {m}: {_fmt(rep.value)}{extra} {wtxt}")
    if args.json:
        _emit_json(rows, args.json)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "kind", "method", "value", "bracket_lo", "bracket_hi", "S", "T", "delta"])
            for r in rows:
                w = r["witness"] or {"S": None, "T": None}
                b = r["bracket"] or [None, None]
                writer.writerow([r["n"], r["kind"], r["method"], r["value"], b[0], b[1],
                                 json.dumps(w["S"]), json.dumps(w["T"]), r.get("delta", "")])
    return 0


def _short(points, limit=6) -> str:
    pts = [p[0] if len(p) == 1 else p for p in points]
    body = ",".join(str(p).replace(" ", "") for p in pts[:limit])
    return "{" + body + (",..." if len(pts) > limit else "") + "}" + f"[{len(pts)}]"


# ---- verify --------------------------------------------------------------

def cmd_verify(args) -> int:
    model = _load_field(args.field)
    if args.plan in (None, "default"):
        try:
            plan = default_plan(model)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    else:
        try:
            plan = VerifyPlan.from_json(Path(args.plan).read_text())
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise UsageError(f"malformed plan {args.plan}: {exc}") from None
    results = run_plan(model, plan, tol=args.tol, numeric=not args.no_numeric,
                       threads=_threads(args))
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        rep = r.structural
        got = _fmt(rep.value)
        if rep.bracket is not None:
            got += f" bracket=[{_fmt(rep.bracket[0])}, {_fmt(rep.bracket[1])}]"
        print(f"{status} {r.claim.label():<28} computed={got} {r.note}")
    if args.json:
        _emit_json({"construction": model.construction,
                    "passed": all(r.passed for r in results),
                    "claims": [r.to_dict() for r in results]}, args.json)
    ok = all(r.passed for r in results)
    print(f"{sum(r.passed for r in results)}/{len(results)} claims passed")
    return 0 if ok else 1


# ---- sample / independence -------------------------------------------------

def cmd_sample(args) -> int:
    model = _load_field(args.field)
    window = parse_window(args.window, model.d)
    if len(window) > SAMPLE_WINDOW_CAP or len(window) * args.count > SAMPLE_CELL_CAP:
        raise UsageError(f"window of {len(window)} points x {args.count} samples exceeds caps "
                         f"({SAMPLE_WINDOW_CAP} points, {SAMPLE_CELL_CAP} values)")
    if args.count < 1:
        raise UsageError("--count must be positive")
    batch = sample_window(model, window, args.count, args.seed, threads=_threads(args))
    if args.uniformize:
        batch = uniformize(batch, args.seed2 if args.seed2 is not None else args.seed + 1)
    if args.out:
        write_csv(batch, args.out)
    else:
        write_csv(batch, "/dev/stdout")
    vals = batch.rows.astype(float)
    print(f"samples={batch.count} window={len(batch.window)} alphabet=2^{batch.alphabet_bits} "
          f"mean={vals.mean():.6g} min={int(np.min(batch.rows))} max={int(np.max(batch.rows))}",
          file=sys.stderr)
    return 0


def cmd_independence(args) -> int:
    batch = read_csv(args.samples)
    report = empirical_independence(batch, args.N, level=args.level,
                                    max_subsets=args.max_subsets, seed=args.seed)
    _emit_json(report.to_dict(), args.json)
    if report.flagged:
        for r in report.flagged:
            print(f"FLAGGED {[list(p) for p in r.points]} p={r.p_value:.3g}", file=sys.stderr)
        return 1
    return 0


def cmd_nu(args) -> int:
    spec = NuSpec(args.m, _rational(args.theta))
    out = {"m": spec.m, "theta": format_rational(spec.theta),
           "pmf": [{"x": list(x), "p": format_rational(p)} for x, p in nu_dist(spec)]}
    code = 0
    if args.check:
        report = check_lemma_2_6(spec)
        out["check"] = report.to_dict()
        code = 0 if report.passed else 1
    _emit_json(out, args.json)
    return code


# ---- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixfield", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="write a field spec JSON")
    p.add_argument("--construction", required=True, choices=fb.CONSTRUCTIONS)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--theta")
    p.add_argument("--rates")
    p.add_argument("--levels", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("coeffs", help="windowed dependence coefficients")
    p.add_argument("--field", required=True)
    p.add_argument("--kind", required=True, choices=[k.value for k in CoefficientKind])
    p.add_argument("--n-range", required=True)
    p.add_argument("--window", default="auto")
    p.add_argument("--method", default="structural", choices=["structural", "numeric", "both"])
    p.add_argument("--json")
    p.add_argument("--csv")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("verify", help="check the construction's stated claims")
    p.add_argument("--field", required=True)
    p.add_argument("--plan", default="default")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--no-numeric", action="store_true")
    p.add_argument("--json")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", help="draw seeded samples on a window")
    p.add_argument("--field", required=True)
    p.add_argument("--window", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--seed2", type=int)
    p.add_argument("--uniformize", action="store_true")
    p.add_argument("--out")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("independence", help="chi-square N-tuplewise independence report")
    p.add_argument("--samples", required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--level", type=float, default=0.001)
    p.add_argument("--max-subsets", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json")
    p.set_defaults(func=cmd_independence)

    p = sub.add_parser("nu", help="the parity-biased sign-vector law")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--theta", required=True)
    p.add_argument("--check", action="store_true")
    p.add_argument("--json")
    p.set_defaults(func=cmd_nu)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        return args.func(args)
    except (UsageError, MixfieldError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
