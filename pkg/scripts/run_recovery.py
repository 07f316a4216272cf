#!/usr/bin/env python3
"""Run a recovery experiment from a config file and print per-n frequencies."""
import argparse
import logging

from vlmc.harness import ExperimentConfig, load_config, run_recovery_experiment, summarize


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config")
    ap.add_argument("--out", default="recovery.csv")
    ap.add_argument("--workers", type=int)
    ap.add_argument("--replicas", type=int, help="override the replica count")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")

    cfg = load_config(args.config)
    overrides = {k: v for k, v in (("workers", args.workers), ("replicas", args.replicas)) if v is not None}
    if overrides:
        cfg = ExperimentConfig(**{**vars(cfg), **overrides})
    report = run_recovery_experiment(cfg, out=args.out)
    print(summarize(report))
    print(f"rows written to {args.out}")


if __name__ == "__main__":
    main()
