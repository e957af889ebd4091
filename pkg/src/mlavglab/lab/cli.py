"""Command line entry point: ``mlavglab <command> [--config F] [--out D] [--seed S] [--threads T]``.

Exit codes: 0 all assertions hold, 2 an assertion failed (outputs still
written), 1 usage or configuration error.
"""

from __future__ import annotations

import argparse
import sys

from .. import _runtime
from .config import KINDS, U64, ConfigError, load_config


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < U64:
        raise argparse.ArgumentTypeError("seed must lie in [0, 2^64)")
    return v


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("threads must be at least 1")
    return v


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mlavglab", description="Multilinear spherical average experiments.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for kind in KINDS:
        p = sub.add_parser(kind)
        p.add_argument("--config", help="JSON config; missing keys take defaults")
        p.add_argument("--out", default=f"out/{kind}", help="output directory")
        p.add_argument("--seed", type=_u64, default=None, help="u64 seed (overrides the config)")
        p.add_argument("--threads", type=_positive, default=1)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    from .experiments import COMMANDS
    from .report import write_outputs

    try:
        cfg = load_config(args.command, args.config, args.seed)
        _runtime.set_threads(args.threads)
        outcome = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"mlavglab {args.command}: config error: {exc}", file=sys.stderr)
        return 1
    write_outputs(args.out, cfg, outcome)
    for w in outcome.warnings:
        print(f"warning: {w}", file=sys.stderr)
    for a in outcome.assertions:
        print(f"{'PASS' if a['passed'] else 'FAIL'} {a['name']}")
    return 0 if outcome.passed else 2


if __name__ == "__main__":
    sys.exit(main())
