"""Command line entry point: ``conetent <experiment> --config <path>``.

Exit status is 0 when every tolerance-bearing row passes, 1 when some row
fails and 2 when the configuration is rejected.
"""

import argparse
import sys
import time

from .errors import ConfigError
from .experiments import EXPERIMENTS, all_passed, load_config, run_experiment, write_outputs


def _parser():
    p = argparse.ArgumentParser(prog="conetent", description="Run a numerical experiment and write results.csv and run.json.")
    p.add_argument("experiment", choices=EXPERIMENTS)
    p.add_argument("--config", required=True, help="JSON experiment description")
    p.add_argument("--out", default="conetent-out", help="output directory (default: %(default)s)")
    p.add_argument("--seed", type=int, default=None, help="override grid.seed (unsigned 64-bit)")
    p.add_argument("--refine", type=int, default=0, help="number of resolution doublings (default: 0)")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be an unsigned 64-bit integer")
        if args.refine < 0:
            raise ConfigError("--refine must be nonnegative")
        config = load_config(args.config, seed=args.seed)
        if config.experiment != args.experiment:
            raise ConfigError(f"config describes a {config.experiment!r} experiment, not {args.experiment!r}")
        t0 = time.perf_counter()
        rows = run_experiment(config, args.refine)
    except ConfigError as exc:
        print(f"conetent: config error: {exc}", file=sys.stderr)
        return 2
    wall = time.perf_counter() - t0
    write_outputs(rows, config, args.out, args.refine, wall)
    failed = [r for r in rows if r.passed is False]
    for r in failed:
        print(f"FAIL {r.descriptor} {r.quantity}: value={r.value!r} reference={r.reference!r} {r.note}", file=sys.stderr)
    print(f"{len(rows)} rows, {len(failed)} failed, {wall:.1f} s -> {args.out}")
    return 0 if all_passed(rows) else 1


if __name__ == "__main__":
    sys.exit(main())
