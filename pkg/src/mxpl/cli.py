"""Command-line front end.

Subcommands:
  theory    evaluate only the asymptotic rows of an experiment config
  simulate  run only the Monte Carlo rows
  compare   run both and join them in one table
  figures   run the bundled fig1..fig8 benchmark configs

All output is CSV with the header
``experiment,method,sweep_value,metric,estimate,std_error,replicates_used``.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from . import figures as figs
from .harness import load_config, run_experiment, thread_count, write_csv


def _add_common(parser: argparse.ArgumentParser, needs_config: bool) -> None:
    if needs_config:
        parser.add_argument("--config", required=True, help="experiment config JSON")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--replicates", type=int, default=None,
                        help="override the replicate count")
    parser.add_argument("--out", default=None, help="output CSV path")
    parser.add_argument("--threads", type=int, default=None,
                        help="replicate-level workers (env MXPL_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mxpl",
        description="Conditional randomization tests, knockoffs, and their asymptotics",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, txt in (
        ("theory", "emit asymptotic curves for a config"),
        ("simulate", "run the Monte Carlo part of a config"),
        ("compare", "run simulation and theory into one table"),
    ):
        p = sub.add_parser(cmd, help=txt)
        _add_common(p, needs_config=True)
    p = sub.add_parser("figures", help="run the bundled fig1..fig8 configs")
    p.add_argument("--only", default=None, help="run a single figure, e.g. fig8")
    p.add_argument("--full", action="store_true",
                   help="large-scale sizes instead of desk-scale defaults")
    _add_common(p, needs_config=False)
    return parser


def _run_config(args, mode: str) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.replicates is not None:
        config = replace(config, replicates=args.replicates)
    rows = run_experiment(config, threads=thread_count(args.threads), mode=mode)
    out = args.out or config.output_path
    if out:
        write_csv(rows, out)
    else:
        sys.stdout.write("experiment,method,sweep_value,metric,estimate,std_error,replicates_used\n")
        for row in rows:
            sys.stdout.write(row.as_csv() + "\n")
    return 0


def _run_figures(args) -> int:
    names = [args.only] if args.only else sorted(figs.BUILDERS)
    outdir = args.out or "."
    if not os.path.isdir(outdir):
        raise FileNotFoundError(f"output directory {outdir!r} does not exist")
    for name in names:
        configs = figs.build(name, full=args.full)
        rows = []
        for config in configs:
            if args.seed is not None:
                config = replace(config, seed=args.seed)
            if args.replicates is not None:
                config = replace(config, replicates=args.replicates)
            mode = "theory" if name in figs.THEORY_ONLY else "compare"
            rows.extend(run_experiment(config, threads=thread_count(args.threads), mode=mode))
        path = os.path.join(outdir, f"{name}.csv")
        write_csv(rows, path)
        print(f"wrote {path} ({len(rows)} rows)")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "figures":
            return _run_figures(args)
        return _run_config(args, mode=args.command)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
