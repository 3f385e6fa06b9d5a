"""Command line entry point: ``polysim run|compare|stagger``.

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from polysim.config import parse_config
from polysim.garden import ConfigurationError
from polysim.harness import compare, run, stagger_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polysim")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="experiment JSON file or preset name")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    p_run = sub.add_parser("run", help="run one experiment (all configured trials)")
    common(p_run)
    p_run.add_argument("--seed", type=int, default=None)

    p_cmp = sub.add_parser("compare", help="compare irrigation policies on matched seeds")
    common(p_cmp)
    p_cmp.add_argument("--policies", required=True, help="comma separated, e.g. baseline,continuous")

    p_stg = sub.add_parser("stagger", help="normal vs. staggered planting")
    common(p_stg)
    p_stg.add_argument("--offset", type=int, default=None)
    p_stg.add_argument("--trials", type=int, default=None)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s")
    try:
        config = parse_config(args.config)
        if args.command == "run":
            if args.seed is not None:
                config = config.replace(seed=args.seed)
            results = run(config, args.out or "polysim_out", progress=not args.quiet)
            for r in results:
                print(json.dumps({"seed": r.config.seed, **r.summary.as_dict()}))
        elif args.command == "compare":
            names = [p for p in args.policies.split(",") if p]
            report = compare(config, names, args.out)
            sys.stdout.write(report.to_csv())
        else:
            report = stagger_experiment(config, args.offset, args.trials, args.out)
            print(json.dumps(report.as_dict(), indent=2))
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
