"""Acceptance checks, one per criterion, each printing a PASS/FAIL line.

Run under pytest (the lines are repeated in the terminal summary) or
directly with ``python tests/test_acceptance.py``.
"""
from __future__ import annotations

import math
import sys
import time
from collections import Counter
from pathlib import Path

import numpy as np
from scipy import stats

sys.path.insert(0, str(Path(__file__).parent))

from oracles import brute_truncate  # noqa: E402
from vlmc.core import (  # noqa: E402
    BINARY,
    Alphabet,
    ProbabilisticContextTree,
    RenewalSpec,
    context_of,
    ref_tree,
    truncate_tree,
)
from vlmc.counts import CountTrie  # noqa: E402
from vlmc.estimators import ContextConfig, DeltaConfig, ell_hat  # noqa: E402
from vlmc.harness import CalibrationConfig, ExperimentConfig, run_null_calibration, run_recovery_experiment  # noqa: E402
from vlmc.sampler import ChainSampler, NoStationaryRegime, sample_path  # noqa: E402
from vlmc.theory import (  # noqa: E402
    alpha_stats,
    canonical_approximation,
    conditional_law,
    cylinder_probability,
    d_m,
    deviation_bound,
)

RESULTS: list[str] = []


def report(num: int, ok: bool, label: str, detail: str, elapsed: float) -> bool:
    line = f"{'PASS' if ok else 'FAIL'}  criterion {num}: {label}  [{detail}; {elapsed:.1f}s]"
    RESULTS.append(line)
    print(line)
    return ok


def binom_se(p: float, m: int) -> float:
    return math.sqrt(p * (1 - p) / m)


# -- 1 -----------------------------------------------------------------------------


def window_scan(x, d):
    """All windows of length 1..d by direct slicing."""
    return {j: Counter(tuple(x[t:t + j]) for t in range(len(x) - j + 1)) for j in range(1, d + 1)}


def criterion_1() -> bool:
    start = time.perf_counter()
    rng = np.random.default_rng(20240101)
    mismatches = 0
    for _ in range(1000):
        size = int(rng.integers(2, 5))
        n = int(rng.integers(1, 201))
        d = int(rng.integers(1, min(8, n) + 1))
        x = rng.integers(0, size, n).tolist()
        trie = CountTrie(x, d, size)
        naive = window_scan(x, d)
        got = {j: {} for j in range(1, d + 1)}
        for w, c in trie.items():
            got[len(w)][w] = c
        mismatches += sum(got[j] != dict(naive[j]) for j in range(1, d + 1))
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and elapsed < 10
    return report(1, ok, "window counts equal a naive scan", f"{mismatches} mismatching levels", elapsed)


# -- 2 -----------------------------------------------------------------------------


def criterion_2() -> bool:
    start = time.perf_counter()
    rep = run_null_calibration(CalibrationConfig(tree="iid", n=10_000, replicas=500, node=(0,), seed=2))
    elapsed = time.perf_counter() - start
    ok = rep.ks is not None and rep.ks <= 0.08 and elapsed < 120
    return report(2, ok, "Lambda null law vs chi-square(1)", f"KS={rep.ks:.4f} (<= 0.08), mean={rep.mean:.3f}", elapsed)


# -- 3 -----------------------------------------------------------------------------


def criterion_3() -> bool:
    start = time.perf_counter()
    pct = ref_tree()
    sampler = ChainSampler(pct)
    cfg = ContextConfig(c1=1.0, c2_prune=1.0, depth_mode="deterministic")
    grid, R = (1_000, 10_000, 100_000), 200
    rates = []
    for i, n in enumerate(grid):
        wrong = 0
        for r in range(R):
            x = sampler.path(n, 3, (i, r))
            wrong += ell_hat(x, cfg, 2) != len(context_of(pct, x))
        rates.append(wrong / R)
    elapsed = time.perf_counter() - start
    monotone = all(
        b <= a + 2 * math.hypot(binom_se(a, R), binom_se(b, R)) for a, b in zip(rates, rates[1:])
    )
    ok = monotone and rates[-1] <= 0.10 and elapsed < 600
    detail = "P(ell_hat != ell) = " + ", ".join(f"{r:.3f}" for r in rates)
    return report(3, ok, "context length estimate consistency", detail, elapsed)


# -- 4 -----------------------------------------------------------------------------


def criterion_4() -> bool:
    start = time.perf_counter()
    delta, k, n, R = 0.15, 4, 100_000, 100
    gap = d_m(ref_tree(), k)
    precheck = delta < gap
    ref_cfg = ExperimentConfig(tree="REF", n_grid=(n,), replicas=R, algo="delta",
                               delta=DeltaConfig(delta, k), truncate=2, seed=4)
    ref_hits = sum(bool(r.recovered) for r in run_recovery_experiment(ref_cfg).rows)
    null_cfg = ExperimentConfig(tree="iid", n_grid=(n,), replicas=R, algo="delta",
                                delta=DeltaConfig(delta, k), truncate=2, seed=5)
    null_hits = sum(r.tree_size == 0 for r in run_recovery_experiment(null_cfg).rows)
    elapsed = time.perf_counter() - start
    ok = precheck and ref_hits >= 95 and null_hits >= 95 and elapsed < 600
    detail = (f"delta={delta} vs D_{k}={gap:.5f} ({'ok' if precheck else 'precheck fails'}); "
              f"REF exact recovery {ref_hits}/{R}; iid empty {null_hits}/{R}")
    return report(4, ok, "threshold estimator recovery", detail, elapsed)


# -- 5 -----------------------------------------------------------------------------


def criterion_5() -> bool:
    start = time.perf_counter()
    pct = ref_tree()
    w, R = (1, 0), 1000
    p_w = cylinder_probability(pct, w)
    true_p1 = pct.row(w)[1]
    st_ = alpha_stats(pct, len(w))
    sampler = ChainSampler(pct)
    checked, vacuous, ok = 0, 0, True
    notes = []
    for i, n in enumerate((10_000, 100_000)):
        devs = np.empty(R)
        for r in range(R):
            x = sampler.path(n, 6, (i, r))
            devs[r] = abs(CountTrie(x, 3, 2).p_hat_row(w)[1] - true_p1)
        for t in (0.02, 0.05, 0.1):
            bound = deviation_bound(n, len(w), t, p_w, 2, st_.alpha0, st_.alpha)
            freq = float(np.mean(devs > t))
            notes.append(f"n={n} t={t}: bound={bound:.3g} freq={freq:.3f}")
            if bound < 1:
                checked += 1
                ok &= freq <= bound + 3 * binom_se(freq, R)
            else:
                vacuous += 1
    elapsed = time.perf_counter() - start
    ok &= elapsed < 900
    detail = f"{checked} grid points checked, {vacuous} with bound >= 1 (vacuous); " + "; ".join(notes)
    label = "deviation bound dominates Monte Carlo frequency"
    if checked == 0:
        label += " (VACUOUS: bound >= 1 on the whole grid)"
    return report(5, ok, label, detail, elapsed)


# -- 6 -----------------------------------------------------------------------------


def gap_pvalue(seed: int, n_gaps: int = 10_000) -> float:
    x = sample_path(RenewalSpec(c=0.5), 2 * n_gaps + 2000, seed)
    gaps = np.diff(np.flatnonzero(x == 1))[:n_gaps]
    assert len(gaps) == n_gaps
    top = 11
    observed = np.array([np.sum(gaps == v) for v in range(1, top)] + [np.sum(gaps >= top)])
    geom = stats.geom(0.5)
    expected = n_gaps * np.append(geom.pmf(np.arange(1, top)), geom.sf(top - 1))
    return float(stats.chisquare(observed, expected).pvalue)


def criterion_6() -> bool:
    start = time.perf_counter()
    passed = sum(gap_pvalue(seed) >= 0.01 for seed in range(100))
    try:
        sample_path(RenewalSpec(tail="geometric", c=1.0, r=0.5), 1000, 0)
        rejected = False
    except NoStationaryRegime:
        rejected = True
    elapsed = time.perf_counter() - start
    ok = passed >= 95 and rejected
    detail = f"{passed}/100 seeds not rejected at 0.01; q_k = 2^-k {'rejected' if rejected else 'ACCEPTED'}"
    return report(6, ok, "renewal gaps are geometric, transient rule refused", detail, elapsed)


# -- 7 -----------------------------------------------------------------------------


def random_tree(rng, size: int, max_depth: int) -> ProbabilisticContextTree:
    leaves = [(a,) for a in range(size)]
    for _ in range(int(rng.integers(0, 6))):
        splittable = [c for c in leaves if len(c) < max_depth]
        if not splittable:
            break
        c = splittable[int(rng.integers(len(splittable)))]
        leaves.remove(c)
        leaves.extend((y,) + c for y in range(size))
    probs = rng.dirichlet(np.full(size, 2.0), len(leaves)) * 0.9 + 0.1 / size
    alphabet = BINARY if size == 2 else Alphabet(tuple("abcd"[:size]))
    return ProbabilisticContextTree(alphabet, tuple(leaves), probs)


def criterion_7() -> bool:
    start = time.perf_counter()
    rng = np.random.default_rng(7)
    trunc_bad = canon_bad = 0
    worst_norm = 0.0
    for _ in range(200):
        size = int(rng.choice([2, 2, 3]))
        pct = random_tree(rng, size, 5 if size == 2 else 3)
        for K in range(1, pct.height + 2):
            trunc_bad += truncate_tree(pct, K).contexts != brute_truncate(pct.contexts, K)
        can = canonical_approximation(pct, pct.height)
        canon_bad += not (can.contexts == pct.contexts and np.array_equal(can.probs, pct.probs))
        for k in range(1, pct.height):
            worst_norm = max(worst_norm, float(np.max(np.abs(canonical_approximation(pct, k).probs.sum(axis=1) - 1))))
        for c in pct.contexts:
            for j in range(0, len(c) + 1):
                worst_norm = max(worst_norm, abs(float(conditional_law(pct, c[j:]).sum()) - 1))
        for j in range(1, 4):
            total = math.fsum(cylinder_probability(pct, w) for w in _strings(size, j))
            worst_norm = max(worst_norm, abs(total - 1))
    elapsed = time.perf_counter() - start
    ok = trunc_bad == 0 and canon_bad == 0 and worst_norm <= 1e-12
    detail = f"truncation mismatches={trunc_bad}, canonical changes={canon_bad}, max |sum-1|={worst_norm:.2e}"
    return report(7, ok, "structural identities", detail, elapsed)


def _strings(size, j):
    from itertools import product
    return product(range(size), repeat=j)


# -- 8 -----------------------------------------------------------------------------


def criterion_8(tmp: Path) -> bool:
    start = time.perf_counter()
    cfg = ExperimentConfig(tree="REF", n_grid=(1_000, 5_000), replicas=5, algo="delta",
                           delta=DeltaConfig(0.08, 4), truncate=2, seed=8)
    a, b = tmp / "run_a.csv", tmp / "run_b.csv"
    run_recovery_experiment(cfg, out=a)
    run_recovery_experiment(cfg, out=b)
    same = a.read_bytes() == b.read_bytes()
    elapsed = time.perf_counter() - start
    return report(8, same, "experiment CSV is byte-identical across runs", f"{len(a.read_bytes())} bytes", elapsed)


# -- pytest entry points ----------------------------------------------------------------


def test_criterion_1_counting_oracle():
    assert criterion_1()


def test_criterion_2_null_calibration():
    assert criterion_2()


def test_criterion_3_context_length_consistency():
    assert criterion_3()


def test_criterion_4_threshold_recovery():
    assert criterion_4()


def test_criterion_5_deviation_domination():
    assert criterion_5()


def test_criterion_6_renewal():
    assert criterion_6()


def test_criterion_7_structure():
    assert criterion_7()


def test_criterion_8_determinism(tmp_path):
    assert criterion_8(tmp_path)


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        results = [criterion_1(), criterion_2(), criterion_3(), criterion_4(),
                   criterion_5(), criterion_6(), criterion_7(), criterion_8(Path(d))]
    sys.exit(0 if all(results) else 1)
