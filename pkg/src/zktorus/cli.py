"""Command-line entry point: ``zktorus <command> [flags]``."""
from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .config import COMMANDS, ConfigError, load_config

HELP = {
    "solve": "integrate ZK from approximate-solution or random data",
    "illposed": "two-sequence ill-posedness experiment",
    "residual-scan": "residual norm scaling of the approximate solutions",
    "strichartz": "short-time and global Strichartz ensembles, commutator bound",
    "kernel": "dispersive kernel decay, Poisson cross-check, profile decay",
    "resonance": "enumerate integer zeros of the resonance function",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="zktorus", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", help="INI file with [run] and per-command sections")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="random seed (u64)")
        p.add_argument("--grid", help="grid size as MxxMy, e.g. 256x256")
        p.add_argument("--dt", type=float, help="time step")
        p.add_argument("--s", help="Sobolev index (comma list where the command scans s)")
        p.add_argument("--m", help="comma list of m values")
        p.add_argument("--N", help="comma list of dyadic N values")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    overrides = {k: getattr(args, k) for k in ("out", "seed", "grid", "dt", "s", "m", "N")}
    try:
        cfg = load_config(args.command, args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    from .experiments import RUNNERS

    try:
        manifest = RUNNERS[args.command](cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    path = manifest.write()
    for name, crit in manifest.criteria.items():
        print(f"{'PASS' if crit.passed else 'FAIL'}  {name}: {crit.value}")
    print(f"manifest: {path}")
    return 0 if manifest.passed else 1


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
