"""Window counts N_n(w) and empirical transition probabilities.

Counts live in a suffix-keyed trie: the children of the node for ``w`` are
the strings ``yw`` reaching one symbol further into the past. Each level is
a sorted array of keys ``parent_id * |A| + y``; a node's id is its position
in that array, so a child lookup is one binary search.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix


class DepthExceeded(ValueError):
    pass


class CountTrie:
    """All window counts of a sample up to ``depth``. Immutable once built."""

    def __init__(self, sample: Sequence[int], depth: int, size: int | None = None):
        x = np.asarray(sample, dtype=np.int64)
        n = len(x)
        if depth < 1 or depth > n:
            raise ValueError(f"depth must satisfy 1 <= depth <= n (got depth={depth}, n={n})")
        if size is None:
            size = max(int(x.max()) + 1, 2)
        if x.min() < 0 or x.max() >= size:
            raise ValueError("sample symbol outside the alphabet")
        self.n, self.depth, self.size = n, depth, size
        self.sample = x
        self.sample.setflags(write=False)
        self._keys = [np.zeros(1, dtype=np.int64)]
        self._counts = [np.array([n + 1], dtype=np.int64)]
        self._ids = [np.zeros(n + 1, dtype=np.int64)]
        for level in range(1, depth + 1):
            # window starting at t: its most recent level-1 symbols start at t+1
            keys = self._ids[-1][1:n - level + 2] * size + x[:n - level + 1]
            uniq, inv, cnt = np.unique(keys, return_inverse=True, return_counts=True)
            self._keys.append(uniq)
            self._counts.append(cnt)
            self._ids.append(inv.reshape(-1))
        self._followers = {}
        self._strings = {}

    def __repr__(self):
        return f"CountTrie(n={self.n}, depth={self.depth}, size={self.size})"

    def _check(self, length: int, extra: int = 0):
        if length + extra > self.depth:
            raise DepthExceeded(f"depth exceeded: need depth {length + extra}, trie has {self.depth}")

    def child(self, level: int, node: int, y: int) -> int | None:
        """Id of ``y w`` at ``level`` given the id of ``w`` one level up."""
        keys = self._keys[level]
        key = node * self.size + y
        i = int(np.searchsorted(keys, key))
        if i < len(keys) and keys[i] == key:
            return i
        return None

    def node(self, w: Sequence[int]) -> int | None:
        self._check(len(w))
        node = 0
        for level, y in enumerate(reversed(w), 1):
            node = self.child(level, node, int(y))
            if node is None:
                return None
        return node

    def count(self, w: Sequence[int]) -> int:
        """N_n(w); the empty string counts n + 1 windows."""
        node = self.node(w)
        return 0 if node is None else int(self._counts[len(w)][node])

    def counts_at(self, level: int) -> np.ndarray:
        return self._counts[level]

    def parents(self, level: int) -> np.ndarray:
        return self._keys[level] // self.size

    def symbols(self, level: int) -> np.ndarray:
        return self._keys[level] % self.size

    def strings(self, level: int) -> list[tuple[int, ...]]:
        """Strings of the observed nodes at ``level`` in node-id order."""
        if level == 0:
            return [()]
        if level not in self._strings:
            above = self.strings(level - 1)
            self._strings[level] = [
                (int(y),) + above[p] for p, y in zip(self.parents(level), self.symbols(level))
            ]
        return self._strings[level]

    def items(self):
        """(string, count) for every observed string of length 1..depth."""
        for level in range(1, self.depth + 1):
            yield from zip(self.strings(level), self._counts[level].tolist())

    def followers(self, level: int) -> csr_matrix:
        """Row ``i``: how often the level-``level`` node ``i`` is followed by each symbol."""
        if level not in self._followers:
            n = self.n
            if level == 0:
                ids = np.zeros(n, dtype=np.int64)
                nxt = self.sample
            else:
                ids = self._ids[level][: n - level]
                nxt = self.sample[level:]
            shape = (len(self._keys[level]), self.size)
            m = csr_matrix((np.ones(len(ids)), (ids, nxt)), shape=shape)
            m.sum_duplicates()
            self._followers[level] = m
        return self._followers[level]

    def p_hat_row(self, w: Sequence[int]) -> np.ndarray:
        """Empirical next-symbol law after ``w``; uniform when ``w`` is never followed."""
        self._check(len(w), 1)
        w = tuple(w)
        row = np.array([self.count(w + (a,)) for a in range(self.size)], dtype=np.float64)
        total = row.sum()
        if total == 0:
            return np.full(self.size, 1.0 / self.size)
        return row / total


def build_counts(sample: Sequence[int], max_depth: int, size: int | None = None) -> CountTrie:
    return CountTrie(sample, max_depth, size)


def n_count(trie: CountTrie, w: Sequence[int]) -> int:
    return trie.count(w)


def p_hat(trie: CountTrie, a: int, w: Sequence[int]) -> float:
    """N(wa) / sum_b N(wb), or 1/|A| when the denominator vanishes."""
    return float(trie.p_hat_row(w)[a])

