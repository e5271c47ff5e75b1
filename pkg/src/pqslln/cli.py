"""Command-line front end: classify, simulate, probe-series, inequality-check, corpus."""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import secrets
import sys
import time
from datetime import datetime, timezone
from fractions import Fraction
from importlib import resources
from pathlib import Path

from . import __version__
from .criteria import (
    UnsupportedRegime,
    MissingMeanDeclaration,
    classify_mean_series,
    classify_slln,
    integral_condition_numeric,
    moment_numeric,
    qp_series_numeric,
    truncmean_series_numeric,
)
from .inequalities import hj_series_check, hj_smoke_check, marcus_pisier_check
from .montecarlo import SimConfig, simulate_weighted_series
from .tailmodel import BUILTINS, DistributionSpec

EXIT_OK, EXIT_NEGATIVE, EXIT_INCONCLUSIVE = 0, 1, 2
EXIT_USAGE, EXIT_UNSUPPORTED, EXIT_IO = 64, 65, 66

OVERALL_EXIT = {
    "InSLLN": EXIT_OK,
    "SeriesConverges": EXIT_OK,
    "NotInSLLN": EXIT_NEGATIVE,
    "SeriesDiverges": EXIT_NEGATIVE,
    "Inconclusive": EXIT_INCONCLUSIVE,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def parse_rational(text: str) -> Fraction:
    """``num/den`` or an integer/decimal literal, kept exact."""
    try:
        value = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None
    return value


def _parse_value(text: str):
    low = text.strip().lower()
    if low in ("true", "false"):
        return low == "true"
    return parse_rational(text)


def parse_spec(text: str) -> DistributionSpec:
    """Build a distribution from ``name[:key=value,...]``, e.g. ``ex4_1:p=8/5,r=5/4``."""
    name, _, rest = text.partition(":")
    name = name.strip()
    if name not in BUILTINS:
        raise UsageError(f"unknown distribution {name!r}; choose from {', '.join(sorted(BUILTINS))}")
    kwargs = {}
    if rest.strip():
        for item in rest.split(","):
            key, eq, val = item.partition("=")
            if not eq or not key.strip():
                raise UsageError(f"malformed parameter {item!r} in {text!r}")
            try:
                kwargs[key.strip()] = _parse_value(val)
            except argparse.ArgumentTypeError as exc:
                raise UsageError(str(exc)) from None
    try:
        return BUILTINS[name](**kwargs)
    except TypeError as exc:
        raise UsageError(f"bad parameters for {name}: {exc}") from None
    except (ValueError, ArithmeticError) as exc:
        raise UsageError(str(exc)) from None


def _digest(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def make_manifest(command: str, args: argparse.Namespace, config: dict, started: float) -> dict:
    return {
        "command": command,
        "spec": getattr(args, "spec", None),
        "p": str(args.p) if getattr(args, "p", None) is not None else None,
        "q": str(args.q) if getattr(args, "q", None) is not None else None,
        "seed": getattr(args, "seed", None),
        "config_digest": _digest(config),
        "version": __version__,
        "wall_clock": {
            "finished_utc": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "elapsed_s": round(time.perf_counter() - started, 3),
        },
    }


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if isinstance(o, float) and not math.isfinite(o):
        return str(o)
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _emit_json(payload: dict, out: Path | None) -> None:
    text = json.dumps(payload, indent=2, default=_json_default) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def _ensure_seed(args) -> None:
    if args.seed is None:
        args.seed = secrets.randbits(64)
        print(f"seed: {args.seed}", file=sys.stderr)


# ---------------------------------------------------------------------------
# commands


def cmd_classify(args) -> int:
    started = time.perf_counter()
    spec = parse_spec(args.spec)
    fn = classify_slln if args.target == "slln" else classify_mean_series
    report = fn(spec, args.p, args.q, numeric_fallback=not args.no_numeric)
    config = {"spec": args.spec, "p": args.p, "q": args.q, "target": args.target, "numeric": not args.no_numeric}
    payload = {"manifest": make_manifest("classify", args, config, started), **report.to_dict()}
    _emit_json(payload, args.out)
    return OVERALL_EXIT[report.overall]


def cmd_simulate(args) -> int:
    started = time.perf_counter()
    _ensure_seed(args)
    spec = parse_spec(args.spec)
    try:
        cfg = SimConfig(args.p, args.q, master_seed=args.seed, reps=args.reps, n_max=args.nmax, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    res = simulate_weighted_series(spec, cfg)
    csv_text = res.to_csv()
    config = {"spec": args.spec, **cfg.as_dict()}
    manifest = make_manifest("simulate", args, config, started)
    manifest["csv_sha256"] = hashlib.sha256(csv_text.encode()).hexdigest()
    stats = {"manifest": manifest, **res.stats_dict()}
    if args.format == "csv" and args.out is None:
        sys.stdout.write(csv_text)
        return EXIT_OK
    if args.out is None:
        _emit_json(stats, None)
        return EXIT_OK
    # the CSV holds only trajectories so reruns are byte-identical; its manifest sits in the JSON
    args.out.write_text(csv_text, encoding="utf-8")
    _emit_json(stats, args.stats or args.out.with_suffix(".json"))
    return EXIT_OK


PROBES = {
    "qp": lambda spec, a: qp_series_numeric(spec, a.p, J=a.J),
    "truncmean": lambda spec, a: truncmean_series_numeric(spec, a.q, J=a.J),
    "integral": lambda spec, a: integral_condition_numeric(spec, a.p, a.q, J=a.J),
    "moment": lambda spec, a: moment_numeric(spec, a.p, a.delta, J=a.J),
}


def cmd_probe_series(args) -> int:
    started = time.perf_counter()
    spec = parse_spec(args.spec)
    if args.series in ("truncmean", "integral") and args.q is None:
        raise UsageError(f"--q is required for --series {args.series}")
    if not 1 <= args.J <= 40:
        raise UsageError("--J must be in [1, 40]")
    probe = PROBES[args.series](spec, args)
    config = {"spec": args.spec, "series": args.series, "p": args.p, "q": args.q, "J": args.J, "delta": args.delta}
    payload = {"manifest": make_manifest("probe-series", args, config, started), **probe.to_dict()}
    _emit_json(payload, args.out)
    return {"Converges": EXIT_OK, "Diverges": EXIT_NEGATIVE}.get(probe.classification, EXIT_INCONCLUSIVE)


def cmd_inequality_check(args) -> int:
    started = time.perf_counter()
    _ensure_seed(args)
    spec = parse_spec(args.spec)
    try:
        if args.check == "marcus-pisier":
            if args.s is None:
                raise UsageError("--s is required for marcus-pisier")
            res = marcus_pisier_check(spec, args.n, args.s, trials=args.trials, seed=args.seed)
        else:
            if args.q is None:
                raise UsageError(f"--q is required for {args.check}")
            fn = hj_series_check if args.check == "hj" else hj_smoke_check
            res = fn(spec, args.q, N=args.N, trials=args.trials, seed=args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    config = {"spec": args.spec, "check": args.check, "n": args.n, "N": args.N, "s": args.s, "q": args.q, "trials": args.trials, "seed": args.seed}
    payload = {"manifest": make_manifest("inequality-check", args, config, started), **res.to_dict()}
    _emit_json(payload, args.out)
    if res.error:
        return EXIT_INCONCLUSIVE
    return EXIT_OK if res.violations == 0 else EXIT_NEGATIVE


def load_expected(path: Path | None) -> list[dict]:
    if path is None:
        text = resources.files("pqslln").joinpath("data/corpus_expected.json").read_text(encoding="utf-8")
    else:
        text = path.read_text(encoding="utf-8")
    return json.loads(text)["rows"]


def cmd_corpus(args) -> int:
    started = time.perf_counter()
    rows = load_expected(args.expected)
    cache: dict[str, DistributionSpec] = {}
    results, mismatches = [], []
    for row in rows:
        spec = cache.setdefault(row["spec"], parse_spec(row["spec"]))
        fn = classify_slln if row["target"] == "slln" else classify_mean_series
        got = fn(spec, row["p"], row["q"], numeric_fallback=False).overall
        ok = got == row["expected"]
        results.append({**row, "got": got, "match": ok})
        if not ok:
            mismatches.append(row)
            print(f"MISMATCH {row['spec']} p={row['p']} q={row['q']} {row['target']}: expected {row['expected']}, got {got}", file=sys.stderr)
    config = {"expected": [{k: r[k] for k in ("spec", "p", "q", "target", "expected")} for r in rows]}
    payload = {"manifest": make_manifest("corpus", args, config, started), "cells": results, "mismatches": len(mismatches)}
    if args.format == "json":
        _emit_json(payload, args.out)
    else:
        lines = [f"{'spec':34} {'p':>5} {'q':>6} {'target':12} {'expected':16} {'got':16}"]
        for r in results:
            mark = "" if r["match"] else "  <-- mismatch"
            lines.append(f"{r['spec']:34} {r['p']:>5} {r['q']:>6} {r['target']:12} {r['expected']:16} {r['got']:16}{mark}")
        text = "\n".join(lines) + "\n"
        if args.out is None:
            sys.stdout.write(text)
        else:
            args.out.write_text(text, encoding="utf-8")
    return EXIT_OK if not mismatches else EXIT_NEGATIVE


# ---------------------------------------------------------------------------


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer seed: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pqslln", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, *, need_p=True, need_q=True, seed=False):
        p.add_argument("--spec", required=True, help="distribution, e.g. ex4_1:p=8/5,r=5/4")
        p.add_argument("--p", type=parse_rational, required=need_p)
        p.add_argument("--q", type=parse_rational, required=need_q)
        p.add_argument("--out", type=Path)
        if seed:
            p.add_argument("--seed", type=_seed)

    c = sub.add_parser("classify", help="decide SLLN(p, q) or the expectation series")
    common(c)
    c.add_argument("--target", choices=("slln", "mean-series"), default="slln")
    c.add_argument("--no-numeric", action="store_true", help="never fall back to numeric probes")
    c.add_argument("--format", choices=("json",), default="json")
    c.set_defaults(func=cmd_classify)

    s = sub.add_parser("simulate", help="Monte Carlo trajectories of the weighted series")
    common(s, seed=True)
    s.add_argument("--nmax", type=_positive_int, default=2**16)
    s.add_argument("--reps", type=_positive_int, default=512)
    s.add_argument("--workers", type=_positive_int, default=1)
    s.add_argument("--stats", type=Path, help="JSON stats path (default: --out with .json suffix)")
    s.add_argument("--format", choices=("json", "csv"), default="json")
    s.set_defaults(func=cmd_simulate)

    pr = sub.add_parser("probe-series", help="numeric block-sum probe of one criterion series")
    common(pr, need_q=False)
    pr.add_argument("--series", choices=sorted(PROBES), default="qp")
    pr.add_argument("--J", type=int, default=24)
    pr.add_argument("--delta", type=parse_rational, default=Fraction(0))
    pr.add_argument("--format", choices=("json",), default="json")
    pr.set_defaults(func=cmd_probe_series)

    iq = sub.add_parser("inequality-check", help="empirical maximal-inequality checks")
    common(iq, need_p=False, need_q=False, seed=True)
    iq.add_argument("--check", choices=("marcus-pisier", "hj", "hj-smoke"), required=True)
    iq.add_argument("--s", type=parse_rational)
    iq.add_argument("--n", type=_positive_int, default=64)
    iq.add_argument("--N", type=_positive_int, default=1024)
    iq.add_argument("--trials", type=_positive_int, default=4000)
    iq.add_argument("--format", choices=("json",), default="json")
    iq.set_defaults(func=cmd_inequality_check)

    co = sub.add_parser("corpus", help="classify the built-in corpus and diff against expected verdicts")
    co.add_argument("--expected", type=Path, help="override the stored expected table")
    co.add_argument("--out", type=Path)
    co.add_argument("--format", choices=("json", "table"), default="table")
    co.set_defaults(func=cmd_corpus)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except MissingMeanDeclaration as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except UnsupportedRegime as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (json.JSONDecodeError, KeyError) as exc:
        print(f"error: malformed input: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
