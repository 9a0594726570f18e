#!/usr/bin/env python3
"""Run the full evaluation protocol and write result tables.

Usage:
    python scripts/run_evaluation.py [--reps 50] [--out results] [--format md]

Equivalent to `sccdso run --config configs/experiment_default.json`, with a
couple of conveniences for quick local sweeps.
"""

import argparse
import os
import sys
import time

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from sccdso import experiment  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--config", default=os.path.join(
        os.path.dirname(__file__), "..", "configs", "experiment_default.json"))
    parser.add_argument("--reps", type=int, default=None)
    parser.add_argument("--out", default=None)
    parser.add_argument("--format", default=None, choices=("csv", "json", "md"))
    args = parser.parse_args()

    cfg = experiment.load_experiment_config(args.config)
    import dataclasses
    updates = {}
    if args.reps:
        updates["repetitions"] = args.reps
    if args.out:
        updates["out_dir"] = args.out
    if args.format:
        updates["format"] = args.format
    if updates:
        cfg = dataclasses.replace(cfg, **updates)

    t0 = time.perf_counter()
    result = experiment.run_experiment(cfg)
    paths = experiment.emit(result, cfg.out_dir, cfg.format)
    print(f"done in {time.perf_counter() - t0:.1f}s")
    for p in paths:
        print(" ", p)
    if result.failures:
        print(f"{len(result.failures)} failed cell(s)", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
