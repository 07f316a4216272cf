"""Alphabets, context trees and the structural operations on them.

Contexts are tuples of symbol indices written in time order: the leftmost
entry is the oldest symbol, the rightmost the most recent one. A tree of
contexts is stored as a set of such tuples; lookups walk the past from the
most recent symbol backwards.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

PROB_TOL = 1e-9

Context = tuple[int, ...]


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(str(s) for s in self.symbols))
        if len(self.symbols) < 2:
            raise ValueError("an alphabet needs at least two symbols")
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError(f"duplicate symbol labels in {self.symbols}")
        for s in self.symbols:
            if not s or any(ch.isspace() for ch in s):
                raise ValueError(f"symbol label {s!r} is empty or contains whitespace")

    @property
    def size(self) -> int:
        return len(self.symbols)

    @property
    def single_char(self) -> bool:
        return all(len(s) == 1 for s in self.symbols)

    def index(self, label: str) -> int:
        try:
            return self._lookup[label]
        except KeyError:
            raise ValueError(f"unknown symbol {label!r}") from None

    @property
    def _lookup(self) -> dict[str, int]:
        # cached lazily; frozen dataclass so go through __dict__
        d = self.__dict__.get("_index")
        if d is None:
            d = {s: i for i, s in enumerate(self.symbols)}
            self.__dict__["_index"] = d
        return d

    def format(self, w: Sequence[int]) -> str:
        """Render a string of symbol indices (time order)."""
        if self.single_char:
            return "".join(self.symbols[i] for i in w)
        return "/".join(self.symbols[i] for i in w)

    def parse(self, text: str) -> Context:
        if text == "":
            return ()
        if self.single_char:
            return tuple(self.index(ch) for ch in text)
        return tuple(self.index(tok) for tok in text.split("/"))


BINARY = Alphabet(("0", "1"))


@dataclass(frozen=True)
class RenewalSpec:
    """Transition rule of the binary renewal chain.

    ``q(k)`` is the probability of emitting ``1`` when the last ``k`` symbols
    are zeros preceded by a ``1``. The first ``len(head)`` values are listed
    explicitly; beyond that the tail is either constant (``q_k = c``) or
    geometric (``q_k = c * r**k``, with ``k`` the absolute index).
    """

    head: tuple[float, ...] = ()
    tail: str = "constant"
    c: float = 0.5
    r: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "head", tuple(float(v) for v in self.head))
        if self.tail not in ("constant", "geometric"):
            raise ValueError(f"unsupported tail rule {self.tail!r}")
        for v in self.head:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"q value {v} outside [0, 1]")
        if not 0.0 <= self.c <= 1.0:
            raise ValueError(f"tail constant {self.c} outside [0, 1]")
        if self.tail == "geometric" and not (0.0 <= self.r <= 1.0):
            raise ValueError(f"geometric ratio {self.r} outside [0, 1]")

    def q(self, k: int) -> float:
        if k < 0:
            raise ValueError("k must be non-negative")
        if k < len(self.head):
            return self.head[k]
        if self.tail == "constant":
            return self.c
        return self.c * self.r ** k

    @property
    def constant_tail(self) -> float | None:
        """Value the rule settles on for ``k >= len(head)``, if it is constant."""
        if self.tail == "constant" or self.r == 1.0:
            return self.c
        if self.c == 0.0:
            return 0.0
        if self.r == 0.0:
            # c * 0**k vanishes for k >= 1; k = 0 may still be in the tail
            return 0.0 if self.head else None
        return None

    def recurrent(self) -> bool:
        """True iff sum_k q_k diverges."""
        tail = self.constant_tail
        if tail is not None:
            return tail > 0.0
        # geometric with 0 < r < 1: summable
        return False

    def survival(self, j: int) -> float:
        """Probability that ``j`` zeros follow a one: prod_{i<j} (1 - q_i)."""
        s = 1.0
        for i in range(j):
            s *= 1.0 - self.q(i)
        return s

    def tail_mass(self, j: int) -> float:
        """sum_{i >= j} survival(i); finite only for recurrent rules."""
        c = self.constant_tail
        if c is None or c == 0.0:
            raise ValueError("transient renewal rule: no stationary regime")
        h = len(self.head)
        if j >= h:
            return self.survival(j) / c
        total = 0.0
        s = self.survival(j)
        for i in range(j, h):
            total += s
            s *= 1.0 - self.q(i)
        return total + s / c

    def mean_gap(self) -> float:
        return self.tail_mass(0)

    def describe(self) -> str:
        head = ",".join(repr(v) for v in self.head)
        return f"renewal tail={self.tail} c={self.c!r} r={self.r!r} head={head}"


def renewal_contexts(depth: int) -> list[Context]:
    """Contexts 1, 10, ..., 10^(depth-1) of the renewal tree."""
    return [(1,) + (0,) * k for k in range(depth)]


@dataclass(frozen=True)
class ContextTree:
    contexts: frozenset
    family: RenewalSpec | None = None

    @property
    def bounded(self) -> bool:
        return self.family is None

    @property
    def height(self) -> int | None:
        if not self.bounded:
            return None
        return max((len(c) for c in self.contexts), default=0)

    def __len__(self):
        return len(self.contexts)


@dataclass(frozen=True)
class ProbabilisticContextTree:
    """A context tree with one next-symbol distribution per context.

    For the renewal family, ``contexts``/``probs`` hold a finite
    materialization and ``family`` carries the closed-form rule for the rest.
    """

    alphabet: Alphabet
    contexts: tuple
    probs: np.ndarray
    family: RenewalSpec | None = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        ctxs = tuple(tuple(int(x) for x in c) for c in self.contexts)
        probs = np.array(self.probs, dtype=np.float64)
        if probs.ndim != 2 or probs.shape != (len(ctxs), self.alphabet.size):
            raise ValueError(
                f"probability table has shape {probs.shape}, expected "
                f"({len(ctxs)}, {self.alphabet.size})"
            )
        probs.setflags(write=False)
        object.__setattr__(self, "contexts", ctxs)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(ctxs)})

    @classmethod
    def from_dict(cls, alphabet: Alphabet, rows: dict, family=None):
        """Build from ``{"10": [p0, p1], ...}`` or tuple keys."""
        ctxs, probs = [], []
        for key, row in rows.items():
            ctxs.append(alphabet.parse(key) if isinstance(key, str) else tuple(key))
            probs.append(row)
        return cls(alphabet, tuple(ctxs), np.array(probs, dtype=float), family)

    @property
    def size(self) -> int:
        return self.alphabet.size

    @property
    def bounded(self) -> bool:
        return self.family is None

    @property
    def height(self) -> int:
        if not self.bounded:
            raise ValueError("unbounded tree has no height")
        return max(len(c) for c in self.contexts)

    @property
    def tree(self) -> ContextTree:
        return ContextTree(frozenset(self.contexts), self.family)

    def row(self, ctx: Context) -> np.ndarray:
        i = self._index.get(tuple(ctx))
        if i is not None:
            return self.probs[i]
        if self.family is not None and is_renewal_context(ctx):
            q = self.family.q(len(ctx) - 1)
            return np.array([1.0 - q, q])
        raise KeyError(f"{ctx} is not a context")

    def rows(self) -> dict:
        return {c: self.probs[i] for i, c in enumerate(self.contexts)}


def is_renewal_context(ctx: Sequence[int]) -> bool:
    return len(ctx) >= 1 and ctx[0] == 1 and all(x == 0 for x in ctx[1:])


def ref_tree() -> ProbabilisticContextTree:
    """tau = {1, 10, 00} with p(1|1)=0.3, p(1|10)=0.8, p(1|00)=0.2."""
    return ProbabilisticContextTree.from_dict(
        BINARY, {"1": [0.7, 0.3], "10": [0.2, 0.8], "00": [0.8, 0.2]}
    )


def iid_tree(probs: Sequence[float] = (0.5, 0.5), alphabet: Alphabet | None = None):
    """Order-one tree whose rows all equal ``probs`` (an i.i.d. source)."""
    alphabet = alphabet or Alphabet(tuple(str(i) for i in range(len(probs))))
    rows = np.tile(np.asarray(probs, dtype=float), (alphabet.size, 1))
    return ProbabilisticContextTree(alphabet, tuple((a,) for a in range(alphabet.size)), rows)


def renewal_pct(spec: RenewalSpec, depth: int) -> ProbabilisticContextTree:
    if depth < 1:
        raise ValueError("depth must be >= 1")
    ctxs = renewal_contexts(depth)
    probs = np.array([[1.0 - spec.q(k), spec.q(k)] for k in range(depth)])
    return ProbabilisticContextTree(BINARY, tuple(ctxs), probs, family=spec)


# -- validation ------------------------------------------------------------


@dataclass
class ValidationReport:
    suffix_violations: list = field(default_factory=list)  # (shorter, longer)
    probability_violations: list = field(default_factory=list)  # (context, reason)

    @property
    def ok(self) -> bool:
        return not self.suffix_violations and not self.probability_violations

    def __bool__(self):
        return self.ok


def suffix_violations(contexts: Iterable[Context]) -> list:
    ctxs = set(map(tuple, contexts))
    bad = []
    for c in sorted(ctxs, key=lambda c: (len(c), c)):
        for j in range(1, len(c)):
            if c[-j:] in ctxs:
                bad.append((c[-j:], c))
    return bad


def validate_tree(pct: ProbabilisticContextTree, renormalize: bool = False):
    """Check the suffix property and every probability row.

    Returns a report; nothing is raised. With ``renormalize=True`` a tuple
    ``(report, fixed_tree)`` is returned where rows with a positive sum are
    rescaled to sum to one.
    """
    report = ValidationReport()
    for c in pct.contexts:
        if len(c) < 1:
            report.probability_violations.append((c, "empty context"))
        if any(not 0 <= x < pct.size for x in c):
            report.probability_violations.append((c, "symbol index out of range"))
    report.suffix_violations.extend(suffix_violations(pct.contexts))
    for c, row in zip(pct.contexts, pct.probs):
        if not np.all(np.isfinite(row)) or np.any(row < 0):
            report.probability_violations.append((c, "negative or non-finite entry"))
        elif abs(math.fsum(row) - 1.0) > PROB_TOL:
            report.probability_violations.append((c, f"row sums to {math.fsum(row)!r}"))
    if not renormalize:
        return report
    sums = pct.probs.sum(axis=1, keepdims=True)
    fixed = np.where(sums > 0, pct.probs / np.where(sums > 0, sums, 1.0), pct.probs)
    return report, ProbabilisticContextTree(pct.alphabet, pct.contexts, fixed, pct.family)


# -- lookup, truncation, comparison ----------------------------------------


def context_of(pct: ProbabilisticContextTree, past: Sequence[int]) -> Context | None:
    """The context that is a suffix of ``past`` (most recent symbol last).

    Returns None when no context fits within ``len(past)`` symbols.
    """
    past = tuple(int(x) for x in past)
    if pct.family is not None:
        for k in range(1, len(past) + 1):
            if past[-k] == 1:
                return past[-k:]
        return None
    idx = pct._index
    for k in range(1, min(len(past), pct.height) + 1):
        if past[-k:] in idx:
            return past[-k:]
    return None


def truncate_contexts(contexts: Iterable[Context], K: int) -> frozenset:
    if K < 1:
        raise ValueError("truncation level K must be >= 1")
    return frozenset(c if len(c) <= K else c[-K:] for c in map(tuple, contexts))


def truncate_tree(tree, K: int) -> ContextTree:
    """tau|_K: contexts of length <= K plus the last K symbols of longer ones."""
    if isinstance(tree, ProbabilisticContextTree):
        tree = tree.tree
    if K < 1:
        raise ValueError("truncation level K must be >= 1")
    if tree.family is not None:
        return ContextTree(frozenset(renewal_contexts(K)) | {(0,) * K})
    return ContextTree(truncate_contexts(tree.contexts, K))


@dataclass(frozen=True)
class TreeDiff:
    missing: tuple  # in the second tree, absent from the first
    extra: tuple  # in the first tree, absent from the second

    @property
    def equal(self) -> bool:
        return not self.missing and not self.extra


def _context_set(tree) -> frozenset:
    if isinstance(tree, ProbabilisticContextTree):
        tree = tree.tree
    if isinstance(tree, ContextTree):
        if tree.family is not None:
            raise ValueError("unbounded tree: pass a truncation level K")
        return tree.contexts
    if hasattr(tree, "contexts"):
        return frozenset(tree.contexts)
    return frozenset(map(tuple, tree))


def compare_trees(a, b, K: int | None = None) -> TreeDiff:
    """Set difference of two context sets, seen from ``a``."""
    if K is not None:
        a = truncate_tree(a, K) if _is_tree(a) else truncate_contexts(_context_set(a), K)
        b = truncate_tree(b, K) if _is_tree(b) else truncate_contexts(_context_set(b), K)
    sa, sb = _context_set(a), _context_set(b)
    order = lambda c: (len(c), c)  # noqa: E731
    return TreeDiff(tuple(sorted(sb - sa, key=order)), tuple(sorted(sa - sb, key=order)))


def _is_tree(t) -> bool:
    return isinstance(t, (ContextTree, ProbabilisticContextTree))


# -- tree file format --------------------------------------------------------
#
#   alphabet 0 1
#   family renewal constant 0.5 1.0 [head values...]     (optional)
#   1   0.69999999999999996 0.29999999999999999
#   10  0.20000000000000001 0.80000000000000004
#
# Blank lines and lines starting with '#' are ignored.


def format_tree(pct: ProbabilisticContextTree) -> str:
    lines = ["alphabet " + " ".join(pct.alphabet.symbols)]
    if pct.family is not None:
        f = pct.family
        head = "".join(" " + format(v, ".17g") for v in f.head)
        lines.append(f"family renewal {f.tail} {f.c:.17g} {f.r:.17g}{head}")
    for c, row in zip(pct.contexts, pct.probs):
        lines.append(pct.alphabet.format(c) + " " + " ".join(format(float(p), ".17g") for p in row))
    return "\n".join(lines) + "\n"


def parse_tree(text: str) -> ProbabilisticContextTree:
    alphabet = family = None
    ctxs, probs = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "alphabet":
            alphabet = Alphabet(tuple(parts[1:]))
            continue
        if parts[0] == "family":
            if len(parts) < 5 or parts[1] != "renewal":
                raise ValueError(f"line {lineno}: bad family record {line!r}")
            family = RenewalSpec(tuple(float(v) for v in parts[5:]), parts[2], float(parts[3]), float(parts[4]))
            continue
        if alphabet is None:
            raise ValueError(f"line {lineno}: context record before the alphabet line")
        if len(parts) != alphabet.size + 1:
            raise ValueError(f"line {lineno}: expected {alphabet.size} probabilities")
        ctxs.append(alphabet.parse(parts[0]))
        probs.append([float(v) for v in parts[1:]])
    if alphabet is None:
        raise ValueError("missing alphabet line")
    return ProbabilisticContextTree(alphabet, tuple(ctxs), np.array(probs, dtype=float).reshape(len(ctxs), alphabet.size), family)


def write_tree(pct: ProbabilisticContextTree, path) -> None:
    Path(path).write_text(format_tree(pct))


def read_tree(path) -> ProbabilisticContextTree:
    return parse_tree(Path(path).read_text())
