#!/usr/bin/env python3
"""Tabulate the explicit constants and the two exponential bounds for a tree."""
import argparse

from vlmc.harness import resolve_source
from vlmc.theory import (
    PreconditionError,
    alpha_stats,
    cylinder_probability,
    d_m,
    deviation_bound_for,
    epsilon_m,
    min_k_condition,
    recovery_bound_for,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--tree", default="REF")
    ap.add_argument("--w", default="10", help="string for the deviation bound")
    ap.add_argument("--K", type=int, default=2)
    ap.add_argument("--k", type=int, nargs="+", default=[3, 4])
    ap.add_argument("--n", type=int, nargs="+", default=[10**4, 10**5, 10**6, 10**7, 10**8])
    ap.add_argument("--t", type=float, nargs="+", default=[0.02, 0.05, 0.1])
    args = ap.parse_args()

    pct = resolve_source(args.tree)
    st = alpha_stats(pct, max(args.k))
    print(f"alpha0={st.alpha0:.6g} alpha={st.alpha:.6g} C={st.c:.6g} mixing-sum bound={st.mixing_sum_bound:.6g}")
    print(f"admissible depth for K={args.K}: k >= {min_k_condition(pct, args.K)}")
    for k in args.k:
        print(f"k={k}: D_k={d_m(pct, k):.6g} eps_k={epsilon_m(pct, k):.6g}")

    w = pct.alphabet.parse(args.w)
    print(f"\ndeviation bound, w={args.w} (P(w)={cylinder_probability(pct, w):.6g})")
    print("n\t" + "\t".join(f"t={t}" for t in args.t))
    for n in args.n:
        cells = []
        for t in args.t:
            try:
                cells.append(f"{deviation_bound_for(pct, w, t, n):.4g}")
            except PreconditionError:
                cells.append("n/a")
        print(f"{n}\t" + "\t".join(cells))

    for k in args.k:
        gap = d_m(pct, k)
        deltas = [gap / 4, gap / 2, 3 * gap / 4]
        print(f"\nrecovery bound, K={args.K}, k={k}")
        print("n\t" + "\t".join(f"delta={d:.4g}" for d in deltas))
        for n in args.n:
            cells = []
            for d in deltas:
                try:
                    cells.append(f"{recovery_bound_for(pct, n, k, args.K, d):.4g}")
                except PreconditionError:
                    cells.append("n/a")
            print(f"{n}\t" + "\t".join(cells))


if __name__ == "__main__":
    main()
