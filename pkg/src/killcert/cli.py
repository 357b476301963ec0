"""verify: run the certificate suites from the command line.

    verify hpn --n 3 --suite all --samples 2000 --seed 42 --out hpn3.json
    verify op2 --suite indecomposable,flow --out op2.json.gz
    verify reverify hpn3.json

Every flag can also come from a VERIFY_<FLAG> environment variable
(command-line flags win).  Exit codes: 0 pass, 1 claim failure,
2 configuration or I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .linalg import DEFAULT_PRIMES
from .report import ConfigError, SuiteConfig, estimate_seconds, load_report, reverify, run, summary_rows, write_report


def _env(name: str, default):
    return os.environ.get(f"VERIFY_{name}", default)


def _int_list(text: str) -> list[int]:
    try:
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of integers: {text!r}") from None


def _flag(text) -> bool:
    return str(text).lower() in {"1", "true", "yes", "on"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="verify", description="Exact Killing tensor certificates.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for target in ("hpn", "op2"):
        p = sub.add_parser(target, help=f"run suites on {'HP^n' if target == 'hpn' else 'OP^2'}")
        if target == "hpn":
            p.add_argument("--n", type=int, default=int(_env("N", 3)))
        p.add_argument("--suite", default=_env("SUITE", "all"),
                       help="comma-separated: algebra,killing,lie,kernel,indecomposable,flow or all")
        p.add_argument("--samples", type=int, default=int(_env("SAMPLES", 2000)))
        p.add_argument("--seed", type=int, default=int(_env("SEED", 0)))
        p.add_argument("--primes", type=_int_list,
                       default=_int_list(_env("PRIMES", ",".join(map(str, DEFAULT_PRIMES)))))
        p.add_argument("--tol", type=float, default=float(_env("TOL", 1e-9)))
        p.add_argument("--out", default=_env("OUT", None), help="report path (.gz to compress)")
        p.add_argument("--allow-long", action="store_true", default=_flag(_env("ALLOW_LONG", "0")))
        p.add_argument("--jobs", type=int, default=int(_env("JOBS", 1)))
        p.add_argument("--figures", default=_env("FIGURES", None), help="directory for figures and a TSV summary")
    r = sub.add_parser("reverify", help="re-check the exact certificates in a report")
    r.add_argument("report")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.command == "reverify":
        return _reverify(args.report)
    cfg = SuiteConfig(
        target=args.command,
        n=getattr(args, "n", None),
        suites=[s.strip() for s in args.suite.split(",") if s.strip()],
        sample_count=args.samples,
        seed=args.seed,
        primes=args.primes,
        tol=args.tol,
        out_path=args.out,
        allow_long=args.allow_long,
        jobs=args.jobs,
    )
    try:
        cfg.validate()
    except ConfigError as exc:
        print(f"verify: {exc}", file=sys.stderr)
        return 2
    est = estimate_seconds(cfg)
    if est > 300:
        print(f"verify: estimated witness solve time about {est / 60:.0f} min", file=sys.stderr)
    report, code = run(cfg)
    for row in summary_rows(report):
        print("\t".join(row))
    print(f"status\t{report['status']}")
    try:
        if cfg.out_path:
            write_report(report, cfg.out_path)
        if args.figures:
            from .plots import render

            render(report, args.figures)
    except OSError as exc:
        print(f"verify: cannot write output: {exc}", file=sys.stderr)
        return 2
    return code


def _reverify(path: str) -> int:
    try:
        report = load_report(path)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"verify: cannot read {path}: {exc}", file=sys.stderr)
        return 2
    try:
        errors = reverify(report)
    except (KeyError, TypeError, ValueError) as exc:
        print(f"verify: malformed report: {exc}", file=sys.stderr)
        return 2
    for e in errors:
        print(f"FAIL\t{e}")
    print(f"reverify\t{'pass' if not errors else 'fail'}")
    return 0 if not errors else 1


if __name__ == "__main__":
    sys.exit(main())
