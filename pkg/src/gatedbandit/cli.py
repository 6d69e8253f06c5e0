"""Command line entry point: ``run``, ``summarize`` and ``rank``."""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from . import harness


def _cmd_run(args) -> int:
    config = harness.load_config(args.config)
    if args.seeds:
        config = replace(config, seeds=harness.parse_seeds(args.seeds))
    if args.out:
        config = replace(config, out_dir=args.out)
    if args.jobs:
        config = replace(config, jobs=args.jobs)
    if args.horizon:
        config = replace(config, horizon=args.horizon)
    out = harness.run(config)
    _print_summary(harness.read_summary(out / "summary.csv"))
    print(f"wrote {out}")
    return 0


def _cmd_summarize(args) -> int:
    _print_summary(harness.summarize(args.run_dir))
    return 0


def _cmd_rank(args) -> int:
    summaries = [s for path in args.summaries for s in harness.read_summary(path)]
    mean_ranks = harness.rank_table(summaries)
    _print_summary(summaries)
    print()
    print("algorithm,mean_rank")
    for alg, r in sorted(mean_ranks.items(), key=lambda kv: (kv[1], kv[0])):
        print(f"{alg},{r:.2f}")
    return 0


def _print_summary(summaries) -> None:
    print(",".join(harness.SUMMARY_COLUMNS))
    for s in summaries:
        print(f"{s.algorithm},{s.task},{s.seeds},{s.mean_cum_reward:.2f},{s.stderr:.2f},{s.rank}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gatedbandit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a policy x task grid over seeds")
    p.add_argument("--config", required=True, help="JSON or TOML run config")
    p.add_argument("--seeds", help="inclusive seed range a..b, or a single seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--jobs", type=int, help="parallel worker processes")
    p.add_argument("--horizon", type=int, help="override the task horizon")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("summarize", help="recompute summary.csv for a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=_cmd_summarize)

    p = sub.add_parser("rank", help="rank algorithms across one or more summary files")
    p.add_argument("summaries", nargs="+")
    p.set_defaults(func=_cmd_rank)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
