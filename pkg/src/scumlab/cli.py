"""Command-line entry point.

Every subcommand reads one JSON config, applies the override chain
(command line over ``SCUMLAB_*`` environment variables over the file),
and either validates or runs it.  Exit status: 0 when every verdict
passes, 2 on a refutation event, 1 on configuration or runtime errors.
"""

from __future__ import annotations

import argparse
import sys

from .config import apply_overrides, load_config
from .errors import ConfigError, RefutationError, ScumlabError
from .runner import run, validate

_SUBCOMMAND_KINDS = {
    "regularity": ("regularity",),
    "couple": ("couple",),
    "gcb": ("gcb-mgf", "gcb-deviation", "birkhoff"),
    "dkw": ("dkw",),
    "dbar": ("dbar",),
    "renewal": ("renewal",),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scumlab",
        description=(
            "simulate chains with unbounded memory and check their "
            "certified regularity, coupling, and concentration bounds"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*_SUBCOMMAND_KINDS, "validate"):
        cmd = sub.add_parser(name, help=f"{name} experiment" if name != "validate" else "check a config without running it")
        cmd.add_argument("--config", required=True, help="path to the JSON config")
        cmd.add_argument("--seed", type=int, default=None, help="master seed override")
        cmd.add_argument("--workers", type=int, default=None, help="worker count override")
        cmd.add_argument("--out", default=None, help="output directory override")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, seed=args.seed, workers=args.workers, out=args.out)
        allowed = _SUBCOMMAND_KINDS.get(args.command)
        if allowed is not None and cfg.kind not in allowed:
            raise ConfigError(
                [
                    f"kind: config declares {cfg.kind!r} but the "
                    f"{args.command} subcommand accepts {', '.join(allowed)}"
                ]
            )
        if args.command == "validate":
            notes = validate(cfg)
            for note in notes:
                print(note)
            if notes:
                return 1
            print("ok")
            return 0
        report = run(cfg)
    except ConfigError as exc:
        for message in exc.messages:
            print(f"config error: {message}", file=sys.stderr)
        return 1
    except RefutationError as exc:
        print(f"refutation event: {exc}", file=sys.stderr)
        return 2
    except ScumlabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for line in report.lines:
        print(line)
    return 0 if report.passed else 2


if __name__ == "__main__":
    sys.exit(main())
