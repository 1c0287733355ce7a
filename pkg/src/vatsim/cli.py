"""``vat-sim`` command line.

    vat-sim <experiment> [--config PATH] [--seed S] [--trials K] [--out DIR] [--workers W]

Exit status: 0 success, 1 runtime failure, 2 configuration error.
The worker count defaults to ``$VAT_SIM_WORKERS`` (1 if unset).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from vatsim.config import EXPERIMENTS, load_config
from vatsim.errors import ConfigurationError
from vatsim.experiments import run
from vatsim.parallel import WORKERS_ENV

log = logging.getLogger("vatsim")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vat-sim", description="Vibration-assisted tunneling simulator")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", help="key = value configuration file (defaults apply if omitted)")
    p.add_argument("--seed", type=int, help="master seed (overrides config)")
    p.add_argument("--trials", type=int, help="number of trials (overrides config)")
    p.add_argument("--out", help="output directory (overrides config)")
    p.add_argument("--workers", type=int, help=f"worker processes (default: ${WORKERS_ENV} or 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {"experiment": args.experiment}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.out is not None:
        overrides["output_dir"] = args.out
    try:
        if args.workers is not None:
            if args.workers < 1:
                raise ConfigurationError(f"--workers must be >= 1, got {args.workers}")
            os.environ[WORKERS_ENV] = str(args.workers)
        cfg = load_config(args.config, overrides)
    except (ConfigurationError, OSError) as exc:
        print(f"vat-sim: configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        paths = run(cfg)
    except ConfigurationError as exc:
        print(f"vat-sim: configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        log.debug("run failed", exc_info=True)
        print(f"vat-sim: {cfg.experiment} failed: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
