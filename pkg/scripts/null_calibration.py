#!/usr/bin/env python3
"""Compare the null distribution of the likelihood-ratio gain with chi-square."""
import argparse

import numpy as np
from scipy import stats

from vlmc.harness import CalibrationConfig, run_null_calibration


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tree", default="iid", help="REF, iid, renewal:<q> or a tree file")
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--replicas", type=int, default=500)
    ap.add_argument("--node", default="0", help="test node as a string of symbol indices")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--values-out", help="optional file for the raw statistics")
    args = ap.parse_args()

    node = tuple(int(ch) for ch in args.node)
    rep = run_null_calibration(CalibrationConfig(args.tree, args.n, args.replicas, node, args.seed))
    law = stats.chi2(rep.df)
    print(f"replicas={len(rep.values)} df={rep.df} mean={rep.mean:.4f} (chi-square mean {rep.df})")
    print(f"KS distance: {'n/a' if rep.ks is None else f'{rep.ks:.4f}'}")
    for q in (0.5, 0.9, 0.95, 0.99):
        print(f"quantile {q:.2f}: empirical {np.quantile(rep.values, q):.3f}  chi-square {law.ppf(q):.3f}")
    if args.values_out:
        np.savetxt(args.values_out, rep.values, fmt="%.10g")


if __name__ == "__main__":
    main()
