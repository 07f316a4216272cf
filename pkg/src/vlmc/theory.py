"""Closed-form quantities attached to a probabilistic context tree.

Everything here is exact given the tree: stationary cylinder probabilities,
conditional laws of finite pasts, the canonical order-k approximation, the
distinguishability and non-nullness constants, and the explicit right-hand
sides of the deviation and tree-recovery bounds.

Supported trees are bounded ones (through their stationary law) and the
renewal family (through its closed form).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from .core import (
    ProbabilisticContextTree,
    RenewalSpec,
    context_of,
    renewal_contexts,
    truncate_tree,
)
from .sampler import encode, stationary_law

E_1_OVER_E = math.exp(1.0 / math.e)


class PreconditionError(ValueError):
    """A theorem's hypothesis does not hold for the given inputs."""


def _law(pct: ProbabilisticContextTree):
    law = pct.__dict__.get("_stationary")
    if law is None:
        law = stationary_law(pct)
        pct.__dict__["_stationary"] = law
    return law


def _tuple(w) -> tuple[int, ...]:
    return tuple(int(v) for v in w)


# -- cylinders and conditionals -------------------------------------------------


def _renewal_cylinder(spec: RenewalSpec, w: tuple) -> float:
    mu = spec.mean_gap()
    if 1 not in w:
        return spec.tail_mass(len(w)) / mu
    first = w.index(1)
    prob = spec.survival(first) / mu
    age = 0
    for x in w[first + 1:]:
        q = spec.q(age)
        if x == 1:
            prob *= q
            age = 0
        else:
            prob *= 1.0 - q
            age += 1
    return prob


def cylinder_probability(pct: ProbabilisticContextTree, w: Sequence[int]) -> float:
    """Stationary probability that a window reads ``w``."""
    w = _tuple(w)
    if not w:
        return 1.0
    if pct.family is not None:
        return _renewal_cylinder(pct.family, w)
    law = _law(pct)
    K, s = law.order, law.size
    if len(w) <= K:
        states = np.arange(law.n_states)
        return float(law.probs[states % s ** len(w) == encode(w, s)].sum())
    prob = float(law.probs[encode(w[:K], s)])
    for t in range(K, len(w)):
        if prob == 0.0:
            return 0.0
        prob *= float(pct.row(context_of(pct, w[:t]))[w[t]])
    return prob


def conditional_law(pct: ProbabilisticContextTree, w: Sequence[int]) -> np.ndarray:
    """Law of the next symbol given that the last symbols read ``w``."""
    w = _tuple(w)
    ctx = context_of(pct, w) if w else None
    if ctx is not None:
        return np.array(pct.row(ctx), dtype=float)
    if pct.family is not None:
        spec = pct.family
        q = spec.survival(len(w)) / spec.tail_mass(len(w))
        return np.array([1.0 - q, q])
    pw = cylinder_probability(pct, w)
    if pw <= 0.0:
        raise ValueError(f"conditioning string {pct.alphabet.format(w)!r} has probability zero")
    row = np.array([cylinder_probability(pct, w + (a,)) for a in range(pct.size)]) / pw
    return row / math.fsum(row)


def canonical_approximation(pct: ProbabilisticContextTree, k: int) -> ProbabilisticContextTree:
    """Order-k truncation with exact conditional laws at the cut branches."""
    truncated = truncate_tree(pct.tree, k).contexts
    if pct.family is not None:
        originals = [c for c in renewal_contexts(k)]
    else:
        originals = [c for c in pct.contexts if len(c) <= k]
    stubs = sorted(truncated - set(originals), key=lambda c: (len(c), c))
    ctxs = originals + stubs
    rows = [pct.row(c) for c in originals] + [conditional_law(pct, c) for c in stubs]
    return ProbabilisticContextTree(pct.alphabet, tuple(ctxs), np.array(rows, dtype=float))


# -- distinguishability and cylinder floor ----------------------------------------


def _contexts_up_to(pct: ProbabilisticContextTree, m: int) -> list:
    if pct.family is not None:
        return renewal_contexts(m)
    return [c for c in pct.contexts if len(c) <= m]


def d_m(pct: ProbabilisticContextTree, m: int) -> float:
    """Smallest gap, over contexts of length <= m, between a context's law and
    the law given the context with its oldest symbol dropped."""
    ctxs = _contexts_up_to(pct, m)
    if not ctxs:
        raise ValueError(f"no context of length <= {m}")
    return min(
        float(np.max(np.abs(pct.row(c) - conditional_law(pct, c[1:])))) for c in ctxs
    )


def tree_nodes(pct: ProbabilisticContextTree, m: int) -> set:
    """Contexts of length <= m and the cut branches of every tau|_j, j <= m."""
    if pct.family is not None:
        return set(renewal_contexts(m)) | {(0,) * i for i in range(1, m + 1)}
    return {c[-j:] for c in pct.contexts for j in range(1, min(len(c), m) + 1)}


def epsilon_m(pct: ProbabilisticContextTree, m: int, strings: str = "tree") -> float:
    """Minimal positive cylinder probability over strings of length <= m.

    ``strings="tree"`` ranges over contexts and truncation stubs;
    ``strings="all"`` over every string in A^1..A^m.
    """
    if strings == "tree":
        pool = tree_nodes(pct, m)
    elif strings == "all":
        pool = (w for j in range(1, m + 1) for w in product(range(pct.size), repeat=j))
    else:
        raise ValueError("strings must be 'tree' or 'all'")
    probs = [p for p in (cylinder_probability(pct, w) for w in pool) if p > 0]
    return min(probs)


# -- non-nullness and continuity ---------------------------------------------------


@dataclass(frozen=True)
class AlphaStats:
    alpha0: float
    alphas: tuple  # alpha_1 .. alpha_{n_max}
    alpha: float

    @property
    def c(self) -> float:
        """Constant of the exponential bounds, alpha0 / (8e(alpha + alpha0))."""
        return self.alpha0 / (8.0 * math.e * (self.alpha + self.alpha0))

    @property
    def mixing_sum_bound(self) -> float:
        return 1.0 + 2.0 * self.alpha / self.alpha0


def _groups(pct: ProbabilisticContextTree, n: int) -> dict:
    """Bounded tree: contexts of length >= n keyed by their last n symbols."""
    groups: dict = {}
    for c in pct.contexts:
        if len(c) >= n:
            groups.setdefault(c[len(c) - n:], []).append(pct.row(c))
    return groups


def _renewal_q_range(spec: RenewalSpec, start: int) -> tuple[float, float]:
    """(inf, sup) of q_j over j >= start."""
    h = len(spec.head)
    m = max(start, h)
    vals = [spec.q(j) for j in range(start, h)] + [spec.q(m)]
    if spec.tail == "geometric" and spec.r < 1.0:
        vals.append(0.0)  # c r^j decreases to 0 without reaching it
    return min(vals), max(vals)


def alpha_stats(pct: ProbabilisticContextTree, n_max: int = 10) -> AlphaStats:
    if pct.family is not None:
        spec = pct.family
        lo, hi = _renewal_q_range(spec, 0)
        alpha0 = lo + (1.0 - hi)
        osc = []
        for n in range(1, n_max + 1):
            lo, hi = _renewal_q_range(spec, n)
            osc.append(hi - lo)
        alphas = tuple(1.0 - o for o in osc)
        h = len(spec.head)
        tail_start = max(h, 1)
        total = sum(hi - lo for lo, hi in (_renewal_q_range(spec, n) for n in range(1, tail_start)))
        if spec.tail == "geometric" and spec.r < 1.0 and spec.c > 0.0:
            total += spec.c * spec.r ** tail_start / (1.0 - spec.r)
        return AlphaStats(alpha0, alphas, (1.0 - alpha0) + total)
    probs = pct.probs
    alpha0 = float(probs.min(axis=0).sum())

    def alpha_n(n):
        groups = _groups(pct, n)
        if not groups:
            return 1.0
        return min(float(np.min(rows, axis=0).sum()) for rows in groups.values())

    alphas = tuple(alpha_n(n) for n in range(1, n_max + 1))
    alpha = (1.0 - alpha0) + sum(1.0 - alpha_n(n) for n in range(1, pct.height + 1))
    return AlphaStats(alpha0, alphas, alpha)


def beta_k(pct: ProbabilisticContextTree, k: int) -> float:
    """Continuity rate: worst disagreement between contexts sharing their last
    k symbols (k = 0: contexts whose last symbols differ)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if pct.family is not None:
        spec = pct.family
        if k == 0:
            lo, hi = _renewal_q_range(spec, 1)
            q0 = spec.q(0)
            return max(q0 - lo, hi - q0, 0.0)
        lo, hi = _renewal_q_range(spec, k)
        return hi - lo
    if k == 0:
        worst = 0.0
        for c1, r1 in pct.rows().items():
            for c2, r2 in pct.rows().items():
                if c1[-1] != c2[-1]:
                    worst = max(worst, float(np.max(np.abs(r1 - r2))))
        return worst
    worst = 0.0
    for rows in _groups(pct, k).values():
        rows = np.array(rows)
        worst = max(worst, float(np.max(rows.max(axis=0) - rows.min(axis=0))))
    return worst


def min_k_condition(pct: ProbabilisticContextTree, K: int) -> int:
    """Smallest estimator depth k admissible for truncation level K: one more
    than the largest, over elements x of tau|_K, of the shortest true context
    ending in x."""
    if pct.family is not None:
        return K + 2
    worst = 0
    for x in truncate_tree(pct.tree, K).contexts:
        worst = max(worst, min(len(c) for c in pct.contexts if c[len(c) - len(x):] == x))
    return worst + 1


# -- explicit bounds ----------------------------------------------------------------


def deviation_bound(n: int, k: int, t: float, p_w: float, size: int, alpha0: float, alpha: float) -> float:
    """Right-hand side of the exponential bound on P(|p_hat(a|w) - p(a|w)| > t)
    for a string w of length k with stationary probability p_w."""
    if not (t > 0 and p_w > 0):
        raise PreconditionError("theorem precondition not met: need t > 0 and p_w > 0")
    if not n > (size + 1) / (t * p_w) + k:
        raise PreconditionError(
            f"theorem precondition not met: n={n} <= (|A|+1)/(t p_w) + k = {(size + 1) / (t * p_w) + k:.6g}"
        )
    c = alpha0 / (8.0 * math.e * (alpha + alpha0))
    gap = t - (size + 1) / ((n - k) * p_w)
    exponent = (n - k) * gap ** 2 * p_w ** 2 * c / (4.0 * size ** 2 * (k + 1))
    return 2.0 * size * E_1_OVER_E * math.exp(-exponent)


def deviation_bound_for(pct: ProbabilisticContextTree, w: Sequence[int], t: float, n: int) -> float:
    stats = alpha_stats(pct, max(len(w), 1))
    return deviation_bound(n, len(w), t, cylinder_probability(pct, w), pct.size, stats.alpha0, stats.alpha)


@dataclass(frozen=True)
class BoundInputs:
    n: int
    k: int
    K: int
    delta: float
    size: int
    d_k: float
    eps_k: float
    alpha0: float
    alpha: float
    k_min: int | None = None

    def n_lower_bound(self) -> float:
        return 2.0 * (self.size + 1) / (min(self.delta, self.d_k - self.delta) * self.eps_k) + self.k


def recovery_bound(inputs: BoundInputs) -> float:
    """Right-hand side of the bound on P(estimated tree|_K != tree|_K)."""
    b = inputs
    if b.k_min is not None and b.k < b.k_min:
        raise PreconditionError(f"theorem precondition not met: depth k={b.k} below the admissible minimum {b.k_min}")
    if not 0 < b.delta < b.d_k:
        raise PreconditionError(f"theorem precondition not met: need 0 < delta={b.delta} < D_k={b.d_k:.6g}")
    if not b.eps_k > 0:
        raise PreconditionError("theorem precondition not met: eps_k must be positive")
    if not b.n > b.n_lower_bound():
        raise PreconditionError(f"theorem precondition not met: n={b.n} <= {b.n_lower_bound():.6g}")
    c = b.alpha0 / (8.0 * math.e * (b.alpha + b.alpha0))
    m = b.n - b.k
    gap = min(b.delta / 2.0, (b.d_k - b.delta) / 2.0) - (b.size + 1) / (m * b.eps_k)
    exponent = m * gap ** 2 * b.eps_k ** 2 * c / (4.0 * b.size ** 2 * (b.k + 1))
    return 4.0 * E_1_OVER_E * b.size ** (b.k + 2) * math.exp(-exponent)


def bound_inputs_for(pct: ProbabilisticContextTree, n: int, k: int, K: int, delta: float) -> BoundInputs:
    stats = alpha_stats(pct, k)
    return BoundInputs(
        n=n, k=k, K=K, delta=delta, size=pct.size,
        d_k=d_m(pct, k), eps_k=epsilon_m(pct, k),
        alpha0=stats.alpha0, alpha=stats.alpha, k_min=min_k_condition(pct, K),
    )


def recovery_bound_for(pct: ProbabilisticContextTree, n: int, k: int, K: int, delta: float) -> float:
    return recovery_bound(bound_inputs_for(pct, n, k, K, delta))
