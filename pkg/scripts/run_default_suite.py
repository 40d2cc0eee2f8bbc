#!/usr/bin/env python3
"""Reproduce the stock benchmark suite and print the aggregate table.

Runs the default 20-experiment configuration (exact discrete solver as the
gold standard plus fixed grids G5/G10/G15), writes every report file under
the output directory, and prints the aggregate rows to stdout.  Rerunning
with the same seed reproduces every file byte for byte.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from seqbid.experiment import ExperimentConfig, run_experiment_suite

COLUMNS = (
    ("states", "states"),
    ("mean_sq_value_error", "mean sq V err"),
    ("mean_max_sq_value_error", "mean max sq V err"),
    ("mean_sq_policy_error", "mean sq pol err"),
    ("mean_max_sq_policy_error", "mean max sq pol err"),
)


def print_aggregate(aggregate: dict[str, dict[str, float]]) -> None:
    name_w = max(len(name) for name in aggregate)
    header = "  ".join([f"{'run':<{name_w}}"] + [f"{h:>19}" for _, h in COLUMNS])
    print(header)
    print("-" * len(header))
    for name, row in aggregate.items():
        cells = [f"{name:<{name_w}}"]
        for key, _ in COLUMNS:
            cells.append(f"{row[key]:>19.6g}")
        print("  ".join(cells))


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--out", default="suite-out", help="output directory")
    p.add_argument("--experiments", type=int, default=None,
                   help="override the number of experiments (default 20)")
    args = p.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    config = ExperimentConfig(master_seed=args.seed, output_dir=args.out)
    if args.experiments is not None:
        config = replace(config, n_experiments=args.experiments)

    start = time.perf_counter()
    result = run_experiment_suite(config)
    elapsed = time.perf_counter() - start

    print(f"suite of {config.n_experiments} experiments "
          f"finished in {elapsed:.1f}s -> {result.output_dir}")
    if result.failures:
        print(f"failed experiments: {result.failures}")
    print()
    print_aggregate(result.aggregate)
    print()
    print(f"per-stage curves: {result.output_dir / 'per_stage_errors.csv'}")
    print(f"certified bounds: {result.output_dir / 'bounds.csv'}")
    return 1 if result.failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
