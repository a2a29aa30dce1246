"""Command line entry point: ``greedybases --experiment NAME [options]``.

Exit status: 0 when every check passes, 1 when a check fails, 2 for usage
errors, 3 when a capacity limit is hit.
"""
from __future__ import annotations

import argparse
import json
import sys

from .construction import DEFAULT_CAP
from .errors import CapacityError
from .experiments import EXPERIMENTS, ExperimentConfig, run
from .space import as_exponent


def _exponent_list(text: str) -> tuple:
    items = tuple(t.strip() for t in text.split(",") if t.strip())
    if not items:
        raise argparse.ArgumentTypeError("expected at least one exponent")
    for t in items:
        try:
            as_exponent(t)
        except (ValueError, TypeError) as exc:
            raise argparse.ArgumentTypeError(f"bad exponent {t!r}: {exc}")
    return items


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}")


def _unit_interval(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("eps must lie strictly between 0 and 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="greedybases",
                                 description="Greedy-basis experiments in mixed-norm sequence spaces.")
    ap.add_argument("--experiment", required=True, choices=EXPERIMENTS)
    ap.add_argument("--p", type=_exponent_list, default=("1", "2", "inf"),
                    help="inner exponent(s), comma separated (default 1,2,inf)")
    ap.add_argument("--q", type=float, default=2.0, help="outer exponent, finite and > 1")
    ap.add_argument("--n-levels", type=int, default=2, help="levels N of the construction")
    ap.add_argument("--eps", type=_unit_interval, default=0.9, help="democracy tolerance")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--cap-family", type=int, default=DEFAULT_CAP,
                    help="largest admissible n_N for the construction")
    ap.add_argument("--subsets", type=int, default=None, help="sample count override")
    ap.add_argument("--k", type=_int_list, default=None,
                    help="explicit k_1,...,k_N for a relaxed construction")
    ap.add_argument("--m", type=int, default=100, help="set size for nondemocracy-demo")
    ap.add_argument("--out-dir", default=None, help="directory for report files")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.q <= 1 or args.n_levels < 1 or args.seed < 0:
        ap.error("need q > 1, n-levels >= 1 and a nonnegative seed")
    cfg = ExperimentConfig(experiment=args.experiment, seed=args.seed, p=args.p, q=args.q,
                           n_levels=args.n_levels, eps=args.eps, cap_family=args.cap_family,
                           subsets=args.subsets, k=args.k, m=args.m, out_dir=args.out_dir,
                           format=args.format)
    try:
        report, _ = run(cfg)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(report, sort_keys=True, indent=2))
    return 0 if all(c["pass"] for c in report["checks"]) else 1


if __name__ == "__main__":
    sys.exit(main())
