"""Command line interface.

Usage:
    glbm <kind> --config <file.json> [--seed S] [--out DIR] [--workers W]

The config JSON mirrors the experiment spec for the kind.  Exit codes:
0 success, 2 validation error, 3 numerical failure threshold exceeded.
GLBM_WORKERS is the fallback for --workers.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from ..errors import GlbmError, NumericalOverflowError
from .experiments import KINDS, SpecValidationError, run

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glbm",
        description="Monte Carlo laboratory for invariant Brownian motions on GL(N, C)")
    parser.add_argument("kind", choices=KINDS, help="experiment kind")
    parser.add_argument("--config", required=True, help="JSON config file for the experiment")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--out", default=None, help="output directory (default: from config or cwd)")
    parser.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: GLBM_WORKERS or 1)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get("GLBM_WORKERS", "1"))
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"glbm: cannot read config: {exc}", file=sys.stderr)
        return 2
    if not isinstance(raw, dict):
        print("glbm: config must be a JSON object", file=sys.stderr)
        return 2
    raw.setdefault("kind", args.kind)
    if raw["kind"] != args.kind:
        print(f"glbm: config kind {raw['kind']!r} conflicts with CLI kind {args.kind!r}",
              file=sys.stderr)
        return 2
    try:
        manifest = run(raw, out_dir=args.out, seed=args.seed, workers=workers)
    except SpecValidationError as exc:
        print(f"glbm: invalid spec: {exc}", file=sys.stderr)
        return 2
    except NumericalOverflowError as exc:
        print(f"glbm: numerical failure: {exc}", file=sys.stderr)
        return 3
    except GlbmError as exc:
        print(f"glbm: invalid spec: {exc}", file=sys.stderr)
        return 2
    for name in sorted(manifest.outputs):
        print(name)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
