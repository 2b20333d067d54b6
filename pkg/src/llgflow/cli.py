"""Command-line entry point.

Subcommands: run-llg, run-frames, run-picard, monitor, gen-config.
Exit codes: 0 success, 2 config error, 10 blow-up suspected,
11 frame degeneracy, 12 no contraction.
"""

from __future__ import annotations

import argparse
import sys

from . import runner
from .config import RunConfig, reference_config_text
from .errors import ConfigError


def _add_common(sub):
    sub.add_argument("--config", required=True, help="path to the run config file")
    sub.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    sub.add_argument("--seed", type=int, default=None, help="override scenario.seed")
    sub.add_argument("--resume", default=None, help="field checkpoint to start from")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llgflow", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run-llg", "evolve the spin field and export norm series"),
        ("run-frames", "frame extraction and identity residuals"),
        ("run-picard", "mild-solution Picard iteration"),
    ):
        sub = subs.add_parser(name, help=help_text)
        _add_common(sub)
    mon = subs.add_parser("monitor", help="recompute monitors from a finished run")
    _add_common(mon)
    mon.add_argument("--run", required=True, help="directory holding monitor.csv")
    gen = subs.add_parser("gen-config", help="print the reference config")
    gen.add_argument("--out", default=None, help="write to a file instead of stdout")
    return parser


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config)
    if args.seed is not None:
        values = dict(cfg.raw)
        values["scenario.seed"] = args.seed
        cfg = RunConfig.from_values(values)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "gen-config":
        text = reference_config_text()
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return runner.EXIT_CONFIG
    try:
        if args.command == "run-llg":
            code, _ = runner.run_llg(cfg, out_dir=args.out, resume=args.resume)
        elif args.command == "run-frames":
            code, _ = runner.run_frames(cfg, out_dir=args.out, resume=args.resume)
        elif args.command == "run-picard":
            code, _ = runner.run_picard(cfg, out_dir=args.out, resume=args.resume)
        elif args.command == "monitor":
            code, _ = runner.run_monitor(cfg, run_dir=args.run, out_dir=args.out)
        else:  # pragma: no cover
            raise AssertionError(args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return runner.EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return runner.EXIT_CONFIG
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
