"""``hyster`` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
import time

from ..exceptions import ConfigError, NonConvergenceError
from .commands import COMMANDS
from .config import PRESETS, resolve
from .output import OutputDir

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGENCE = 3
EXIT_IO = 4

log = logging.getLogger("hyster")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    parser = argparse.ArgumentParser(prog="hyster", description="Relay, Preisach and field hysteresis experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
        p.add_argument("--config", help="JSON config; overrides the preset key by key")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads (default 1)")
        p.add_argument("--preset", help="one of: " + ", ".join(sorted(PRESETS[name])))
    return parser


def main(argv=None) -> int:
    # argparse usage errors exit with 2, which is also the config-error code
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG

    start = time.perf_counter()
    try:
        cfg = resolve(args.command, args.config, args.preset)
        out = OutputDir(args.out)
        COMMANDS[args.command](cfg, out, threads=args.threads)
        inputs = [args.config] if args.config else []
        out.write_manifest(args.command, cfg, inputs, time.perf_counter() - start)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergenceError as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    log.info("done in %.2f s", time.perf_counter() - start)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
