"""Command line: ``python -m vqmps run --config FILE`` and ``python -m vqmps compare FILES``."""

from __future__ import annotations

import argparse
import logging
import sys

from .runner import ConfigError, compare, format_table, load_config, run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqmps", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run one experiment from a key = value config file")
    run_p.add_argument("--config", required=True)
    cmp_p = sub.add_parser("compare", help="energy gaps between result files")
    cmp_p.add_argument("files", nargs="+")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            record = run(cfg)
            print(f"{cfg.stem()}: mean {record.summary['mean']:.8f} "
                  f"(min {record.summary['min']:.8f}, max {record.summary['max']:.8f}) "
                  f"-> {cfg.output_dir()}")
        else:
            print(format_table(compare(args.files)))
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0
