"""Context-tree estimators.

* algorithm Context with the log-likelihood-ratio gain, either with a random
  candidate depth M(n) or a deterministic depth floor(C1 log n);
* the empirical tree built from the max-difference gain with threshold delta.

All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.sparse import diags

from .counts import CountTrie, DepthExceeded

DEPTH_MODES = ("random", "deterministic")


@dataclass(frozen=True)
class ContextConfig:
    c1: float = 1.0
    c2_count: float = 0.1
    c2_prune: float = 1.0
    depth_mode: str = "random"

    def __post_init__(self):
        for name in ("c1", "c2_count", "c2_prune"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.depth_mode not in DEPTH_MODES:
            raise ValueError(f"depth_mode must be one of {DEPTH_MODES}")


@dataclass(frozen=True)
class DeltaConfig:
    delta: float
    k: int

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.k < 1:
            raise ValueError("k must be >= 1")


@dataclass(frozen=True)
class EstimatedTree:
    contexts: frozenset
    algo: str
    params: dict = field(default_factory=dict, compare=False)

    def __len__(self):
        return len(self.contexts)

    def __iter__(self):
        return iter(sorted(self.contexts, key=lambda c: (len(c), c)))

    def context_of(self, past: Sequence[int]) -> tuple | None:
        """Shortest estimated context that is a suffix of ``past``."""
        deepest = max((len(c) for c in self.contexts), default=0)
        past = tuple(int(v) for v in past[len(past) - min(deepest, len(past)):])
        for k in range(1, len(past) + 1):
            if past[-k:] in self.contexts:
                return past[-k:]
        return None


# -- log-likelihood ratio gain -------------------------------------------------


def _lambda(count: Callable, w: tuple, size: int) -> float:
    n_w = [count(w + (a,)) for a in range(size)]
    tot_w = sum(n_w)
    if tot_w == 0:
        return 0.0
    log_tot_w = math.log(tot_w)
    total = 0.0
    for y in range(size):
        n_yw = [count((y,) + w + (a,)) for a in range(size)]
        tot_yw = sum(n_yw)
        if tot_yw == 0:
            continue
        log_tot_yw = math.log(tot_yw)
        for a, c in enumerate(n_yw):
            if c:
                # c <= n_w[a], so the denominator is positive
                total += c * (math.log(c) - log_tot_yw - math.log(n_w[a]) + log_tot_w)
    return 2.0 * total


def lambda_stat(trie: CountTrie, w: Sequence[int]) -> float:
    """Lambda_n(w) = 2 sum_y sum_a N(ywa) log[p_hat(a|yw) / p_hat(a|w)]."""
    w = tuple(int(v) for v in w)
    if len(w) + 2 > trie.depth:
        raise DepthExceeded(f"depth exceeded: lambda of a length-{len(w)} string needs depth {len(w) + 2}")
    return _lambda(trie.count, w, trie.size)


# -- algorithm Context -----------------------------------------------------------


def _check_n(n: int):
    if n < 3:
        raise ValueError("algorithm Context needs n >= 3")


def _max_depth(n: int, cfg: ContextConfig) -> int:
    return int(math.floor(cfg.c1 * math.log(n)))


def _max_candidate(count: Callable, x: Sequence[int], n: int, cfg: ContextConfig) -> int:
    threshold = cfg.c2_count * n / math.sqrt(math.log(n))
    best = 0
    for i in range(0, min(_max_depth(n, cfg), n) + 1):
        if count(tuple(x[n - i:n])) > threshold:
            best = i
    return best


def max_candidate_length(trie: CountTrie, sample: Sequence[int], cfg: ContextConfig) -> int:
    """M(n): the longest suffix of the sample, up to floor(C1 log n), occurring
    more than C2_count * n / sqrt(log n) times; 0 if none does."""
    n = len(sample)
    _check_n(n)
    need = min(_max_depth(n, cfg), n)
    if need > trie.depth:
        raise DepthExceeded(f"depth exceeded: M(n) needs depth {need}, trie has {trie.depth}")
    x = _Tail([int(v) for v in np.asarray(sample)[n - need:]], n)
    return _max_candidate(trie.count, x, n, cfg)


class _Tail:
    """Indexable view of the last symbols of a length-n sample."""

    def __init__(self, tail: list, n: int):
        self.tail, self.offset = tail, n - len(tail)

    def __getitem__(self, sl: slice):
        start = sl.start - self.offset
        if start < 0:
            raise IndexError("suffix longer than the stored tail")
        return self.tail[start:sl.stop - self.offset]


def _ell_hat(count: Callable, x, n: int, size: int, cfg: ContextConfig) -> int:
    if cfg.depth_mode == "random":
        d = _max_candidate(count, x, n, cfg)
    else:
        d = _max_depth(n, cfg)
    threshold = cfg.c2_prune * math.log(n)
    best = 0
    # Lambda at suffix length i needs windows of length i + 2
    for i in range(1, min(d - 1, n - 2) + 1):
        if _lambda(count, tuple(x[n - i:n]), size) > threshold:
            best = i
    return 1 + best


def ell_hat(sample: Sequence[int], cfg: ContextConfig, size: int | None = None, trie: CountTrie | None = None) -> int:
    """Estimated length of the context of the next symbol after ``sample``."""
    n = len(sample)
    _check_n(n)
    depth = min(_max_depth(n, cfg) + 1, n)
    if trie is None:
        trie = CountTrie(sample, max(depth, 1), size)
    elif trie.depth < depth:
        raise DepthExceeded(f"depth exceeded: ell_hat needs depth {depth}, trie has {trie.depth}")
    x = _Tail([int(v) for v in np.asarray(sample)[n - depth:]], n)
    return _ell_hat(trie.count, x, n, trie.size, cfg)


class _PrefixCounts:
    """Window counts of a growing prefix, keyed per level by the base-|A| code."""

    def __init__(self, size: int, depth: int):
        self.size, self.depth = size, depth
        self.levels = [dict() for _ in range(depth + 1)]
        self.x: list[int] = []

    def push(self, a: int):
        self.x.append(a)
        j = len(self.x) - 1
        code, scale = 0, 1
        for level in range(1, min(self.depth, j + 1) + 1):
            code += self.x[j - level + 1] * scale
            scale *= self.size
            d = self.levels[level]
            d[code] = d.get(code, 0) + 1

    def count(self, w: tuple) -> int:
        if not w:
            return len(self.x) + 1
        if len(w) > self.depth:
            return 0
        code = 0
        for v in w:
            code = code * self.size + v
        return self.levels[len(w)].get(code, 0)


def empirical_tree_rissanen(sample: Sequence[int], cfg: ContextConfig, size: int | None = None) -> EstimatedTree:
    """Collect the estimated context of every prefix X_0^{j-1}, j = ceil(n/2)..n."""
    x = [int(v) for v in sample]
    n = len(x)
    if n < 6:
        raise ValueError("the empirical tree needs n >= 6")
    size = size or max(max(x) + 1, 2)
    counter = _PrefixCounts(size, min(_max_depth(n, cfg) + 1, n))
    start = -(-n // 2)
    for a in x[:start]:
        counter.push(a)
    found = set()
    for j in range(start, n + 1):
        ell = _ell_hat(counter.count, counter.x, j, size, cfg)
        found.add(tuple(x[j - ell:j]))
        if j < n:
            counter.push(x[j])
    algo = "context" if cfg.depth_mode == "random" else "context-fixed"
    return EstimatedTree(frozenset(found), algo, _params(cfg))


def _params(cfg) -> dict:
    return dict(vars(cfg))


# -- max-difference gain and the delta empirical tree ----------------------------


def delta_stat(trie: CountTrie, w: Sequence[int]) -> float:
    """Delta_n(w) = max_a |p_hat(a|w) - p_hat(a|w minus its oldest symbol)|."""
    w = tuple(int(v) for v in w)
    if len(w) < 1:
        raise ValueError("delta_stat needs a non-empty string")
    if len(w) + 1 > trie.depth:
        raise DepthExceeded(f"depth exceeded: delta of a length-{len(w)} string needs depth {len(w) + 1}")
    return float(np.max(np.abs(trie.p_hat_row(w) - trie.p_hat_row(w[1:]))))


def _level_laws(trie: CountTrie, level: int):
    """Row-normalised follower counts, plus the id of the node that is never
    followed (only the final window can be), or -1."""
    f = trie.followers(level)
    totals = np.asarray(f.sum(axis=1)).ravel()
    inv = np.divide(1.0, totals, out=np.zeros_like(totals), where=totals > 0)
    laws = (diags(inv) @ f).tocsr()
    dead = np.flatnonzero(totals == 0)
    return laws, (int(dead[0]) if len(dead) else -1)


def _dense_row(laws, i: int, dead: int, size: int) -> np.ndarray:
    if i == dead:
        return np.full(size, 1.0 / size)
    return laws[i].toarray().ravel()


def delta_table(trie: CountTrie, k: int):
    """Delta on every observed node of levels 1..k, and the common Delta of the
    unobserved one-step extensions of each node of levels 0..k-1.

    Returns ``(observed, unobserved)``, lists indexed by level.
    """
    size = trie.size
    u = 1.0 / size
    laws = [_level_laws(trie, r) for r in range(k + 1)]
    observed = [None]
    unobserved = []
    for r in range(0, k):
        P, dead = laws[r]
        # an unobserved y w is never followed, so its law is uniform
        support = np.diff(P.indptr)
        dev = np.zeros(P.shape[0])
        if P.nnz:
            vals = np.abs(P.data - u)
            rows = np.repeat(np.arange(P.shape[0]), support)
            np.maximum.at(dev, rows, vals)
        dev = np.where(support < size, np.maximum(dev, u), dev)
        if dead >= 0:
            dev[dead] = 0.0
        unobserved.append(dev)
    for r in range(1, k + 1):
        P, dead = laws[r]
        Q, qdead = laws[r - 1]
        parents = trie.parents(r)
        diff = abs(P - Q[parents])
        d = np.asarray(diff.max(axis=1).toarray()).ravel()
        if dead >= 0:
            p = int(parents[dead])
            d[dead] = 0.0 if p == qdead else float(np.max(np.abs(u - _dense_row(Q, p, qdead, size))))
        observed.append(d)
    return observed, unobserved


def estimate_tree_delta(sample: Sequence[int], cfg: DeltaConfig, size: int | None = None) -> EstimatedTree:
    """Strings x of length 1..k with Delta(x) > delta and Delta <= delta on every
    extension of x into the past up to length k.

    Strings that never occur are included too when they qualify: their
    empirical law is uniform by convention.
    """
    n = len(sample)
    k = cfg.k
    if k >= n:
        raise ValueError(f"k must be smaller than the sample length (k={k}, n={n})")
    trie = CountTrie(sample, k, size)
    size = trie.size
    observed, unobserved = delta_table(trie, k)
    delta = cfg.delta

    # ext[r][i]: max Delta over strict extensions of node i at level r, up to level k
    ext = [None] * (k + 1)
    ext[k] = np.zeros(len(observed[k]))
    for r in range(k - 1, 0, -1):
        e = np.zeros(len(observed[r]))
        parents = trie.parents(r + 1)
        np.maximum.at(e, parents, np.maximum(observed[r + 1], ext[r + 1]))
        n_children = np.bincount(parents, minlength=len(e))
        e = np.where(n_children < size, np.maximum(e, unobserved[r]), e)
        ext[r] = e

    found = set()
    for r in range(1, k + 1):
        strings = trie.strings(r)
        for i in np.flatnonzero((observed[r] > delta) & (ext[r] <= delta)):
            found.add(strings[i])
        # unobserved strings y w, w observed at level r - 1; nothing extends them
        above = trie.strings(r - 1)
        parents, symbols = trie.parents(r), trie.symbols(r)
        for p in np.flatnonzero(unobserved[r - 1] > delta):
            lo, hi = np.searchsorted(parents, [p, p + 1])
            seen = set(symbols[lo:hi].tolist())
            for y in range(size):
                if y not in seen:
                    found.add((y,) + above[p])
    return EstimatedTree(frozenset(found), "delta", _params(cfg))
