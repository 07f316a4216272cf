"""Command line entry point: ``vlmc <subcommand> ...``.

Exit status is 0 on success, 1 when an input violates a precondition and
2 on I/O failures.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness, theory
from .core import Alphabet, ProbabilisticContextTree, compare_trees, format_tree, read_tree, write_tree
from .counts import CountTrie
from .estimators import ContextConfig, DeltaConfig, empirical_tree_rissanen, estimate_tree_delta
from .sampler import read_sample, sample_path, write_sample


def _alphabet(arg: str | None) -> Alphabet | None:
    return Alphabet(tuple(arg.split())) if arg else None


def _load_tree(spec: str) -> ProbabilisticContextTree:
    if spec in ("REF", "iid") or spec.startswith("renewal:"):
        return harness.resolve_source(spec)
    return read_tree(spec)


def cmd_simulate(args) -> None:
    pct = _load_tree(args.tree)
    seq = sample_path(pct, args.length, args.seed, tuple(args.stream))
    write_sample(args.out, pct.alphabet, seq)


def cmd_estimate(args) -> None:
    alphabet, seq = read_sample(args.sample, _alphabet(args.alphabet))
    if args.algo == "delta":
        if args.delta is None or args.k is None:
            raise ValueError("the delta algorithm needs --delta and --k")
        est = estimate_tree_delta(seq, DeltaConfig(args.delta, args.k), alphabet.size)
    else:
        cfg = ContextConfig(
            args.c1, args.c2_count, args.c2_prune,
            "random" if args.algo == "context" else "deterministic",
        )
        est = empirical_tree_rissanen(seq, cfg, alphabet.size)
    contexts = list(est)
    depth = min(max((len(c) for c in contexts), default=0) + 1, len(seq))
    trie = CountTrie(seq, max(depth, 1), alphabet.size)
    probs = np.array([trie.p_hat_row(c) for c in contexts]).reshape(len(contexts), alphabet.size)
    write_tree(ProbabilisticContextTree(alphabet, tuple(contexts), probs), args.tree_out)


def cmd_inspect(args) -> None:
    alphabet, seq = read_sample(args.sample, _alphabet(args.alphabet))
    trie = CountTrie(seq, args.depth, alphabet.size)
    if args.string is not None:
        w = alphabet.parse(args.string)
        print(f"{args.string}\t{trie.count(w)}")
        return
    lines = sorted((alphabet.format(w), c) for w, c in trie.items())
    sys.stdout.write("".join(f"{s}\t{c}\n" for s, c in lines))


def _record(quantity: str, params: dict, value) -> str:
    fields = [f"quantity={quantity}"] + [f"{k}={v}" for k, v in params.items() if v is not None]
    return " ".join(fields) + f" value={value}"


def cmd_theory(args) -> None:
    pct = _load_tree(args.tree)
    q = args.quantity

    def need(*names):
        missing = [n for n in names if getattr(args, n.replace("-", "_")) is None]
        if missing:
            raise ValueError(f"quantity {q} needs --{' --'.join(missing)}")

    if q == "dm":
        need("m")
        print(_record(q, {"m": args.m}, repr(theory.d_m(pct, args.m))))
    elif q == "eps":
        need("m")
        print(_record(q, {"m": args.m, "strings": args.strings}, repr(theory.epsilon_m(pct, args.m, args.strings))))
    elif q == "alpha":
        st = theory.alpha_stats(pct, args.n_max)
        print(_record("alpha0", {}, repr(st.alpha0)))
        print(_record("alpha", {"n_max": args.n_max}, repr(st.alpha)))
        print(_record("mixing-sum-bound", {}, repr(st.mixing_sum_bound)))
    elif q == "beta":
        need("k")
        print(_record(q, {"k": args.k}, repr(theory.beta_k(pct, args.k))))
    elif q == "min-k":
        need("K")
        print(_record(q, {"K": args.K}, theory.min_k_condition(pct, args.K)))
    elif q == "canonical":
        need("k")
        sys.stdout.write(format_tree(theory.canonical_approximation(pct, args.k)))
    elif q == "deviation-bound":
        need("w", "t", "n")
        w = pct.alphabet.parse(args.w)
        value = theory.deviation_bound_for(pct, w, args.t, args.n)
        print(_record(q, {"w": args.w, "t": args.t, "n": args.n}, repr(value)))
    elif q == "recovery-bound":
        need("n", "k", "K", "delta")
        value = theory.recovery_bound_for(pct, args.n, args.k, args.K, args.delta)
        print(_record(q, {"n": args.n, "k": args.k, "K": args.K, "delta": args.delta}, repr(value)))


def cmd_experiment(args) -> None:
    cfg = harness.load_config(args.config)
    if args.workers is not None:
        cfg = harness.ExperimentConfig(**{**vars(cfg), "workers": args.workers})
    report = harness.run_recovery_experiment(cfg, out=args.out)
    print(harness.summarize(report))


def cmd_compare(args) -> None:
    a, b = read_tree(args.tree_a), read_tree(args.tree_b)
    diff = compare_trees(a, b, args.truncate)
    if diff.equal:
        print("equal")
        return
    fmt = a.alphabet.format
    for w in sorted(diff.missing, key=lambda c: (len(c), c)):
        print(f"missing\t{fmt(w)}")
    for w in sorted(diff.extra, key=lambda c: (len(c), c)):
        print(f"extra\t{fmt(w)}")


def cmd_ingest(args) -> None:
    alphabet, seq = harness.ingest_text(args.input, args.mode)
    write_sample(args.out, alphabet, seq)
    mapping = args.mapping or f"{args.out}.map"
    harness.write_mapping(alphabet, mapping)
    print(f"units={len(seq)} alphabet_size={alphabet.size}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vlmc", description="Variable length Markov chain toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="draw a stationary sample from a tree")
    s.add_argument("--tree", required=True, help="tree file, REF, iid or renewal:<q>")
    s.add_argument("--length", type=int, required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--stream", type=int, nargs="*", default=[])
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("estimate", help="estimate a context tree from a sample")
    s.add_argument("--algo", choices=harness.ALGOS, required=True)
    s.add_argument("--sample", required=True)
    s.add_argument("--tree-out", required=True)
    s.add_argument("--alphabet", help="symbol labels in order, space separated")
    s.add_argument("--c1", type=float, default=1.0)
    s.add_argument("--c2-count", type=float, default=0.1)
    s.add_argument("--c2-prune", type=float, default=1.0)
    s.add_argument("--delta", type=float)
    s.add_argument("--k", type=int)
    s.set_defaults(func=cmd_estimate)

    s = sub.add_parser("inspect", help="dump window counts")
    s.add_argument("--sample", required=True)
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--string")
    s.add_argument("--alphabet")
    s.set_defaults(func=cmd_inspect)

    s = sub.add_parser("theory", help="evaluate explicit constants and bounds")
    s.add_argument("--tree", required=True)
    s.add_argument("--quantity", required=True, choices=[
        "dm", "eps", "alpha", "beta", "canonical", "deviation-bound", "recovery-bound", "min-k"])
    s.add_argument("--m", type=int)
    s.add_argument("--k", type=int)
    s.add_argument("--K", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--t", type=float)
    s.add_argument("--w")
    s.add_argument("--delta", type=float)
    s.add_argument("--strings", choices=["tree", "all"], default="tree")
    s.add_argument("--n-max", type=int, default=10)
    s.set_defaults(func=cmd_theory)

    s = sub.add_parser("experiment", help="run a Monte Carlo recovery experiment")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_experiment)

    s = sub.add_parser("compare", help="compare two (truncated) context trees")
    s.add_argument("--tree-a", required=True)
    s.add_argument("--tree-b", required=True)
    s.add_argument("--truncate", type=int)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("ingest", help="turn a text file into a sample file")
    s.add_argument("--input", required=True)
    s.add_argument("--mode", choices=["bytes", "chars", "tokens", "token-list"], default="chars")
    s.add_argument("--out", required=True)
    s.add_argument("--mapping")
    s.set_defaults(func=cmd_ingest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
