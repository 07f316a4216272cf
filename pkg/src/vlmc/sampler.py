"""Stationary simulation of chains compatible with a probabilistic context tree."""
from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .core import (
    Alphabet,
    ProbabilisticContextTree,
    RenewalSpec,
    renewal_pct,
)

EXACT_SOLVE_MAX_STATES = 4096
RESIDUAL_TOL = 1e-12


class NoStationaryRegime(ValueError):
    """The chain has no unique, aperiodic stationary law."""


def make_rng(seed: int, stream: Sequence[int] = ()) -> np.random.Generator:
    """Counter-based generator for stream ``(seed, *stream)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(s) for s in stream))
    return np.random.Generator(np.random.Philox(ss))


def encode(w: Sequence[int], size: int) -> int:
    code = 0
    for x in w:
        code = code * size + int(x)
    return code


def decode(code: int, size: int, length: int) -> tuple[int, ...]:
    out = [0] * length
    for i in range(length - 1, -1, -1):
        code, out[i] = divmod(code, size)
    return tuple(out)


@dataclass(frozen=True)
class StationaryLaw:
    """Law of the window of the last ``order`` symbols; states are coded
    base-|A| with the oldest symbol most significant."""

    order: int
    size: int
    probs: np.ndarray

    @property
    def n_states(self) -> int:
        return self.size ** self.order

    def prob(self, state: Sequence[int]) -> float:
        return float(self.probs[encode(state, self.size)])


def _state_rows(pct: ProbabilisticContextTree) -> np.ndarray:
    """Row index (into ``pct.probs``) of the context of every length-K state."""
    K, s = pct.height, pct.size
    states = np.arange(s ** K)
    rows = np.full(s ** K, -1, dtype=np.int64)
    # longest contexts last so that, on malformed trees, the deepest match wins
    for i, c in sorted(enumerate(pct.contexts), key=lambda ic: len(ic[1])):
        mask = states % (s ** len(c)) == encode(c, s)
        rows[mask] = i
    if np.any(rows < 0):
        bad = decode(int(np.flatnonzero(rows < 0)[0]), s, K)
        raise ValueError(f"tree does not cover the past {pct.alphabet.format(bad)!r}")
    return rows


def transition_matrix(pct: ProbabilisticContextTree) -> csr_matrix:
    """Order-K transition operator on A^K induced by the tree."""
    K, s = pct.height, pct.size
    n_states = s ** K
    rows = _state_rows(pct)
    src = np.repeat(np.arange(n_states), s)
    sym = np.tile(np.arange(s), n_states)
    dst = (src * s + sym) % n_states
    vals = pct.probs[rows].ravel()
    keep = vals > 0
    return csr_matrix((vals[keep], (src[keep], dst[keep])), shape=(n_states, n_states))


def _period(P: csr_matrix, members: np.ndarray) -> int:
    sub = P[members][:, members]
    order, _ = breadth_first_order(sub, 0, directed=True, return_predecessors=True)
    dist = np.full(len(members), -1)
    dist[0] = 0
    # BFS order guarantees parents are labelled before children
    indptr, indices = sub.indptr, sub.indices
    for u in order:
        for v in indices[indptr[u]:indptr[u + 1]]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
    g = 0
    coo = sub.tocoo()
    for u, v in zip(coo.row, coo.col):
        g = math.gcd(g, int(dist[u] + 1 - dist[v]))
    return g


def stationary_law(pct: ProbabilisticContextTree) -> StationaryLaw:
    """Unique stationary law of the order-K embedding of a bounded tree.

    Raises NoStationaryRegime when the embedding has more than one closed
    class or its closed class is periodic.
    """
    if not pct.bounded:
        raise ValueError("stationary_law needs a bounded tree")
    K, s = pct.height, pct.size
    P = transition_matrix(pct)
    n_states = s ** K
    n_comp, labels = connected_components(P, directed=True, connection="strong")
    coo = P.tocoo()
    leaving = np.zeros(n_comp, dtype=bool)
    cross = labels[coo.row] != labels[coo.col]
    leaving[labels[coo.row[cross]]] = True
    closed = [c for c in range(n_comp) if not leaving[c]]

    def name(c, limit=6):
        idx = np.flatnonzero(labels == c)
        shown = ", ".join(pct.alphabet.format(decode(int(i), s, K)) for i in idx[:limit])
        return "{" + shown + (", ..." if len(idx) > limit else "") + "}"

    if len(closed) != 1:
        raise NoStationaryRegime(
            "reducible embedding: closed communicating classes " + " ".join(name(c) for c in closed)
        )
    members = np.flatnonzero(labels == closed[0])
    period = _period(P, members)
    if period != 1:
        raise NoStationaryRegime(f"periodic embedding (period {period}) on class {name(closed[0])}")

    Q = P[members][:, members]
    m = len(members)
    if n_states <= EXACT_SOLVE_MAX_STATES:
        A = Q.toarray().T - np.eye(m)
        A[-1, :] = 1.0
        b = np.zeros(m)
        b[-1] = 1.0
        pi_c = np.linalg.solve(A, b)
        pi_c = np.clip(pi_c, 0.0, None)
        pi_c /= pi_c.sum()
        for _ in range(5):
            nxt = Q.T @ pi_c
            if np.abs(nxt - pi_c).sum() <= RESIDUAL_TOL * 1e-1:
                break
            pi_c = nxt / nxt.sum()
    else:
        pi_c = np.full(m, 1.0 / m)
        for _ in range(1_000_000):
            nxt = Q.T @ pi_c
            nxt /= nxt.sum()
            done = np.abs(nxt - pi_c).sum() <= RESIDUAL_TOL * 1e-1
            pi_c = nxt
            if done:
                break
    pi = np.zeros(n_states)
    pi[members] = pi_c
    residual = np.abs(P.T @ pi - pi).sum()
    if residual > RESIDUAL_TOL:
        raise ArithmeticError(f"stationary solve residual {residual:.3g} above {RESIDUAL_TOL}")
    pi.setflags(write=False)
    return StationaryLaw(K, s, pi)


# -- renewal family -------------------------------------------------------


def check_renewal_recurrence(spec: RenewalSpec) -> bool:
    """True iff sum_k q_k = infinity, decided from the tail rule."""
    if not isinstance(spec, RenewalSpec):
        raise TypeError(f"unsupported tail rule {spec!r}")
    return spec.recurrent()


def renewal_tree(spec: RenewalSpec, depth: int) -> ProbabilisticContextTree:
    """Contexts 1, 10, ..., 10^(depth-1) with p(1|10^k) = q_k; flagged unbounded."""
    return renewal_pct(spec, depth)


def _renewal_path(spec: RenewalSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    if not spec.recurrent():
        raise NoStationaryRegime("transient: no stationary regime (sum of q_k is finite)")
    burn = max(10_000, math.ceil(100 * spec.mean_gap()))
    h = len(spec.head)
    c = spec.constant_tail
    q = list(spec.head)
    u = rng.random(burn + n).tolist()
    out = bytearray(n)
    age = 0  # start right after a 1
    for t in range(burn + n):
        p = q[age] if age < h else c
        if u[t] < p:
            x, age = 1, 0
        else:
            x, age = 0, age + 1
        if t >= burn:
            out[t - burn] = x
    return np.frombuffer(bytes(out), dtype=np.uint8).astype(np.int64)


# -- bounded trees ----------------------------------------------------------


class ChainSampler:
    """Precomputed simulation tables for one tree; reuse across replicas."""

    def __init__(self, source):
        if isinstance(source, RenewalSpec):
            source = renewal_pct(source, 1)
        self.pct = source
        self.alphabet = source.alphabet
        if source.family is not None:
            self.law = None
            if not source.family.recurrent():
                raise NoStationaryRegime("transient: no stationary regime (sum of q_k is finite)")
            return
        self.law = stationary_law(source)
        s, K = source.size, source.height
        self.size, self.order = s, K
        self.n_states = s ** K
        cum = np.cumsum(self.law.probs)
        self._init_cdf = cum / cum[-1]
        rows = _state_rows(source)
        self._thresholds = [self._row_thresholds(r) for r in source.probs]
        self._state_row = rows.tolist()

    @staticmethod
    def _row_thresholds(row) -> list[float]:
        cum = np.cumsum(row) / row.sum()
        last = int(np.flatnonzero(row > 0)[-1])
        cum[last:] = 1.0
        return cum[:-1].tolist()

    def path(self, n: int, seed: int, stream: Sequence[int] = ()) -> np.ndarray:
        if n < 0:
            raise ValueError("n must be >= 0")
        rng = make_rng(seed, stream)
        if self.law is None:
            return _renewal_path(self.pct.family, n, rng)
        s, K, n_states = self.size, self.order, self.n_states
        state = int(np.searchsorted(self._init_cdf, rng.random(), side="right"))
        state = min(state, n_states - 1)
        head = decode(state, s, K)
        if n <= K:
            return np.array(head[:n], dtype=np.int64)
        out = list(head) + [0] * (n - K)
        us = rng.random(n - K).tolist()
        thresholds, state_row = self._thresholds, self._state_row
        if s == 2:
            cut = [thresholds[state_row[st]][0] for st in range(n_states)]
            for t, u in enumerate(us, K):
                a = 1 if u >= cut[state] else 0
                out[t] = a
                state = (state * 2 + a) % n_states
        else:
            for t, u in enumerate(us, K):
                a = bisect_right(thresholds[state_row[state]], u)
                out[t] = a
                state = (state * s + a) % n_states
        return np.array(out, dtype=np.int64)


def sample_path(source, n: int, seed: int, stream: Sequence[int] = ()) -> np.ndarray:
    """Length-``n`` stationary sample, reproducible from ``(source, n, seed, stream)``.

    ``source`` is a bounded tree, a renewal-family tree or a RenewalSpec.
    """
    return ChainSampler(source).path(n, seed, stream)


# -- sample files -----------------------------------------------------------


def format_sample(alphabet: Alphabet, seq: Sequence[int]) -> str:
    if alphabet.single_char:
        return "".join(alphabet.symbols[int(i)] for i in seq) + "\n"
    return " ".join(alphabet.symbols[int(i)] for i in seq) + "\n"


def parse_sample(text: str, alphabet: Alphabet | None = None) -> tuple[Alphabet, np.ndarray]:
    """Whitespace-separated tokens if the text has inner whitespace, else characters.

    Without an explicit alphabet the distinct labels are sorted.
    """
    body = text.strip()
    units = body.split() if any(ch.isspace() for ch in body) else list(body)
    if alphabet is None:
        labels = sorted(set(units))
        if set(labels) <= {"0", "1"}:
            labels = ["0", "1"]
        alphabet = Alphabet(tuple(labels))
    idx = alphabet._lookup
    try:
        seq = np.fromiter((idx[u] for u in units), dtype=np.int64, count=len(units))
    except KeyError as e:
        raise ValueError(f"sample symbol {e.args[0]!r} not in alphabet") from None
    return alphabet, seq


def write_sample(path, alphabet: Alphabet, seq: Sequence[int]) -> None:
    Path(path).write_text(format_sample(alphabet, seq))


def read_sample(path, alphabet: Alphabet | None = None) -> tuple[Alphabet, np.ndarray]:
    return parse_sample(Path(path).read_text(), alphabet)

