"""
python -m cli solve|verify|truncation-study|mms --config <path> --out <dir> [--strict-paper] [--seed <n>]
"""

import argparse
import sys

from cli.config import load_config, validate
from cli.run import EXIT_CONFIG, run
from common.errors import ConfigError
from common.log import get_logger

log = get_logger("cli")


def parse_args(argv=None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(prog="python -m cli", description="Subsonic Euler flow over a curved wall")
    parser.add_argument("mode", choices=("solve", "verify", "truncation-study", "mms"))
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--strict-paper", action="store_true", help="use the literal far-field streamline formulas")
    parser.add_argument("--seed", type=int, default=None, help="override the configured RNG seed")
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = validate(cfg.with_overrides(mode=args.mode, seed=args.seed, strict_paper=args.strict_paper, out=args.out))
    except ConfigError as e:
        log.error("❌ %s", e)
        print(f"error\t{type(e).__name__}\t{e}", file=sys.stderr)
        return EXIT_CONFIG
    result = run(cfg, args.out)
    if not result["ok"]:
        print(f"error\t{result['error']}", file=sys.stderr)
    return result["exit_code"]


if __name__ == "__main__":
    sys.exit(main())
