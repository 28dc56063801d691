"""Command-line entry point: ``csfkit gen | solve | bench``.

Failures exit with status 1 and a single JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from .core import MAX_AGENTS
from .harness import ALGORITHMS, cmd_bench, cmd_gen, cmd_solve, parse_params


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="csfkit", description="Coalition structure formation solvers")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate random instances")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--distribution", choices=("uniform", "normal"), default="uniform")
    g.add_argument("--count", type=int, default=10)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", required=True)
    g.add_argument("--cap", type=int, default=MAX_AGENTS)

    s = sub.add_parser("solve", help="run one solver on one instance")
    s.add_argument("instance")
    s.add_argument("--algorithm", choices=ALGORITHMS, default="grasp")
    s.add_argument("--time-limit", type=float)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--oracle", choices=("dp", "brute", "none"), default="dp")
    s.add_argument("--trace", help="write the anytime trace as CSV to this path")
    s.add_argument("--out", help="write the run record (JSON) here instead of stdout")
    s.add_argument("--param", action="append", default=[], metavar="KEY=VALUE",
                   help="solver parameter, e.g. maxiter=20 or operators=split,merge")
    # common solver knobs as first-class flags
    s.add_argument("--maxiter")
    s.add_argument("--alpha")
    s.add_argument("--pivot-rule")
    s.add_argument("--steps")
    s.add_argument("--initial-temp")
    s.add_argument("--cooling-alpha")
    s.add_argument("--operators")
    s.add_argument("--phase1-only", action="store_const", const="1")

    b = sub.add_parser("bench", help="run a benchmark matrix from a config file")
    b.add_argument("config")
    b.add_argument("--out", help="CSV path (default: stdout)")
    b.add_argument("--jobs", type=int, default=1)
    return p


_FLAG_PARAMS = ("maxiter", "alpha", "pivot_rule", "steps", "initial_temp", "cooling_alpha",
                "operators", "phase1_only")


def _solve_params(args) -> dict:
    raw = {}
    for item in args.param:
        key, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--param expects KEY=VALUE, got {item!r}")
        raw[key.strip()] = value.strip()
    for name in _FLAG_PARAMS:
        value = getattr(args, name)
        if value is not None:
            raw[name] = value
    return parse_params(args.algorithm, raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "gen":
            paths = cmd_gen(args.n, args.distribution, args.count, args.seed, args.out_dir, cap=args.cap)
            for path in paths:
                print(path)
        elif args.command == "solve":
            if args.time_limit is not None and args.time_limit <= 0:
                raise ValueError("--time-limit must be positive")
            rec = cmd_solve(args.instance, args.algorithm, _solve_params(args), args.time_limit,
                            args.seed, oracle=args.oracle, trace_path=args.trace)
            if args.out:
                with open(args.out, "w") as fh:
                    fh.write(rec.to_json() + "\n")
            else:
                print(rec.to_json())
        elif args.command == "bench":
            text = cmd_bench(args.config, args.out, jobs=args.jobs)
            if not args.out:
                sys.stdout.write(text)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
