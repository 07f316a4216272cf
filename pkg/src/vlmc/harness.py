"""Monte Carlo experiments, text ingestion and report serialization."""
from __future__ import annotations

import configparser
import io
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import stats

from .core import (
    Alphabet,
    ProbabilisticContextTree,
    RenewalSpec,
    compare_trees,
    context_of,
    iid_tree,
    read_tree,
    ref_tree,
    renewal_pct,
    truncate_contexts,
    truncate_tree,
    write_tree,
)
from .counts import CountTrie
from .estimators import (
    ContextConfig,
    DeltaConfig,
    ell_hat,
    empirical_tree_rissanen,
    estimate_tree_delta,
    lambda_stat,
)
from .sampler import ChainSampler

log = logging.getLogger(__name__)

ALGOS = ("delta", "context", "context-fixed")
CSV_HEADER = "n,replica,algo,recovered,tree_size,ell_mismatch,wall_ms"
MAX_UNITS = 65_536


def resolve_source(spec: str) -> ProbabilisticContextTree:
    """``REF``, ``iid``, ``renewal:<q>`` or a tree file path."""
    if spec == "REF":
        return ref_tree()
    if spec == "iid":
        return iid_tree()
    if spec.startswith("renewal:"):
        return renewal_pct(RenewalSpec(c=float(spec.split(":", 1)[1])), 1)
    return read_tree(spec)


# -- recovery experiments --------------------------------------------------------


@dataclass(frozen=True)
class ExperimentConfig:
    tree: str = "REF"
    n_grid: tuple = (1000, 10_000)
    replicas: int = 10
    algo: str = "delta"
    delta: DeltaConfig | None = None
    context: ContextConfig | None = None
    truncate: int = 2
    seed: int = 0
    workers: int = 1
    record_time: bool = False

    def __post_init__(self):
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if not self.n_grid or any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError("n grid must be non-empty and strictly increasing")
        if self.algo not in ALGOS:
            raise ValueError(f"algo must be one of {ALGOS}")
        if self.algo == "delta" and self.delta is None:
            raise ValueError("delta algorithm needs a [delta] section")
        if self.algo != "delta" and self.context is None:
            raise ValueError(f"{self.algo} algorithm needs a [{self.algo}] section")
        if self.truncate < 1:
            raise ValueError("truncate must be >= 1")


_SECTION_KEYS = {
    "experiment": {"tree", "n_grid", "replicas", "algo", "truncate", "seed", "workers", "record_time"},
    "delta": {"delta", "k"},
    "context": {"c1", "c2_count", "c2_prune"},
    "context-fixed": {"c1", "c2_prune"},
}


def parse_config(text: str) -> ExperimentConfig:
    """Flat key/value config, one section per algorithm; unknown keys are errors."""
    cp = configparser.ConfigParser()
    cp.read_string(text)
    for section in cp.sections():
        if section not in _SECTION_KEYS:
            raise ValueError(f"unknown config section [{section}]")
        unknown = set(cp[section]) - _SECTION_KEYS[section]
        if unknown:
            raise ValueError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    if "experiment" not in cp:
        raise ValueError("config needs an [experiment] section")
    ex = cp["experiment"]
    algo = ex.get("algo", "delta")
    delta = context = None
    if algo == "delta" and "delta" in cp:
        delta = DeltaConfig(cp["delta"].getfloat("delta"), cp["delta"].getint("k"))
    elif algo in ("context", "context-fixed") and algo in cp:
        sec = cp[algo]
        kwargs = {k: sec.getfloat(k) for k in sec}
        context = ContextConfig(**kwargs, depth_mode="random" if algo == "context" else "deterministic")
    return ExperimentConfig(
        tree=ex.get("tree", "REF"),
        n_grid=tuple(int(v) for v in ex.get("n_grid", "1000").replace(",", " ").split()),
        replicas=ex.getint("replicas", 10),
        algo=algo,
        delta=delta,
        context=context,
        truncate=ex.getint("truncate", 2),
        seed=ex.getint("seed", 0),
        workers=ex.getint("workers", 1),
        record_time=ex.getboolean("record_time", False),
    )


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text())


@dataclass(frozen=True)
class ExperimentRow:
    n: int
    replica: int
    algo: str
    recovered: bool | None
    tree_size: int
    ell_mismatch: bool | None
    wall_ms: float
    error: str | None = None

    def csv(self) -> str:
        if self.error is not None:
            return f"{self.n},{self.replica},{self.algo},-1,-1,-1,{self.wall_ms:.3f}"
        return (
            f"{self.n},{self.replica},{self.algo},{int(self.recovered)},{self.tree_size},"
            f"{int(self.ell_mismatch)},{self.wall_ms:.3f}"
        )


@dataclass
class ExperimentReport:
    rows: list = field(default_factory=list)

    def summary(self) -> dict:
        """Per n: recovery frequency, its binomial standard error, ell mismatch
        frequency and empty-tree frequency over the successful replicas."""
        out = {}
        for n in sorted({r.n for r in self.rows}):
            ok = [r for r in self.rows if r.n == n and r.error is None]
            m = len(ok)
            freq = sum(r.recovered for r in ok) / m if m else float("nan")
            out[n] = {
                "replicas": m,
                "failed": sum(1 for r in self.rows if r.n == n and r.error is not None),
                "recovery": freq,
                "recovery_se": math.sqrt(freq * (1 - freq) / m) if m else float("nan"),
                "ell_mismatch": sum(r.ell_mismatch for r in ok) / m if m else float("nan"),
                "empty": sum(r.tree_size == 0 for r in ok) / m if m else float("nan"),
            }
        return out

    def to_csv(self) -> str:
        return "\n".join([CSV_HEADER] + [r.csv() for r in self.rows]) + "\n"


def estimate(sample, cfg: ExperimentConfig, size: int):
    if cfg.algo == "delta":
        return estimate_tree_delta(sample, cfg.delta, size)
    return empirical_tree_rissanen(sample, cfg.context, size)


def _run_replica(args) -> ExperimentRow:
    cfg, source, sampler, i, r = args
    n = cfg.n_grid[i]
    start = time.perf_counter()
    try:
        sample = sampler.path(n, cfg.seed, (i, r))
        est = estimate(sample, cfg, source.size)
        truth = truncate_tree(source, cfg.truncate).contexts
        recovered = truncate_contexts(est.contexts, cfg.truncate) == truth
        true_ctx = context_of(source, sample)
        if cfg.algo == "delta":
            got = est.context_of(sample)
            ell = None if got is None else len(got)
        else:
            ell = ell_hat(sample, cfg.context, source.size)
        mismatch = true_ctx is None or ell != len(true_ctx)
        wall = (time.perf_counter() - start) * 1e3 if cfg.record_time else 0.0
        return ExperimentRow(n, r, cfg.algo, recovered, len(est), mismatch, wall)
    except Exception as exc:  # one bad replica must not abort the grid
        log.warning("replica n=%d r=%d failed: %s", n, r, exc)
        wall = (time.perf_counter() - start) * 1e3 if cfg.record_time else 0.0
        return ExperimentRow(n, r, cfg.algo, None, -1, None, wall, error=str(exc))


def run_recovery_experiment(cfg: ExperimentConfig, out=None, source: ProbabilisticContextTree | None = None) -> ExperimentReport:
    """Simulate, estimate and compare on every (n, replica) of the grid.

    Replica ``r`` at grid index ``i`` draws from stream ``(seed, i, r)``, so
    extending the grid never changes existing rows. Rows come out sorted by
    (n, replica); when ``out`` is given they are written as they arrive.
    """
    source = source or resolve_source(cfg.tree)
    sampler = ChainSampler(source)
    tasks = [(cfg, source, sampler, i, r) for i in range(len(cfg.n_grid)) for r in range(cfg.replicas)]
    report = ExperimentReport()
    sink = open(out, "w") if out is not None else io.StringIO()
    with sink:
        sink.write(CSV_HEADER + "\n")
        if cfg.workers > 1:
            with ProcessPoolExecutor(cfg.workers) as pool:
                results = pool.map(_run_replica, tasks, chunksize=max(1, len(tasks) // (4 * cfg.workers)))
                for row in results:
                    report.rows.append(row)
                    sink.write(row.csv() + "\n")
        else:
            for task in tasks:
                row = _run_replica(task)
                report.rows.append(row)
                sink.write(row.csv() + "\n")
                sink.flush()
    return report


def export_report(report: ExperimentReport, path) -> None:
    Path(path).write_text(report.to_csv())


def import_tree(path) -> ProbabilisticContextTree:
    return read_tree(path)


def export_tree(pct: ProbabilisticContextTree, path) -> None:
    write_tree(pct, path)


# -- null calibration of the likelihood-ratio gain ------------------------------------


@dataclass(frozen=True)
class CalibrationConfig:
    tree: str = "iid"
    n: int = 10_000
    replicas: int = 500
    node: tuple = (0,)
    seed: int = 0


@dataclass(frozen=True)
class CalibrationReport:
    values: np.ndarray
    df: int
    ks: float | None

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))


def run_null_calibration(cfg: CalibrationConfig, source: ProbabilisticContextTree | None = None) -> CalibrationReport:
    """Lambda at a fixed node over independent replicas, against chi-square(|A| - 1)."""
    source = source or resolve_source(cfg.tree)
    sampler = ChainSampler(source)
    node = tuple(cfg.node)
    values = np.empty(cfg.replicas)
    for r in range(cfg.replicas):
        sample = sampler.path(cfg.n, cfg.seed, (r,))
        trie = CountTrie(sample, len(node) + 2, source.size)
        values[r] = lambda_stat(trie, node)
    df = source.size - 1
    ks = None
    if cfg.replicas >= 2:
        ks = float(stats.kstest(values, stats.chi2(df).cdf).statistic)
    return CalibrationReport(values, df, ks)


# -- text ingestion -------------------------------------------------------------------


def _char_label(ch: str) -> str:
    if ch.isprintable() and not ch.isspace() and ch != "/" and not ch.startswith("U+"):
        return ch
    return f"U+{ord(ch):04X}"


def _label_char(label: str) -> str:
    if len(label) > 1 and label.startswith("U+"):
        return chr(int(label[2:], 16))
    return label


def ingest_text(path, mode: str = "chars") -> tuple[Alphabet, np.ndarray]:
    """Map the units of a text file to symbol indices in first-occurrence order.

    ``mode`` is ``bytes`` (labels are two hex digits), ``chars`` (the character
    itself, or ``U+XXXX`` for whitespace and unprintables) or ``tokens``
    (whitespace-separated words).
    """
    path = Path(path)
    if mode == "bytes":
        units: Iterable[str] = [f"{b:02x}" for b in path.read_bytes()]
    elif mode == "chars":
        units = [_char_label(ch) for ch in path.read_text(encoding="utf-8")]
    elif mode in ("tokens", "token-list"):
        units = path.read_text(encoding="utf-8").split()
    else:
        raise ValueError(f"unknown ingest mode {mode!r}")
    if not units:
        raise ValueError(f"{path}: empty input")
    index: dict[str, int] = {}
    seq = np.empty(len(units), dtype=np.int64)
    for t, u in enumerate(units):
        i = index.get(u)
        if i is None:
            i = index[u] = len(index)
            if i >= MAX_UNITS:
                raise ValueError(f"{path}: more than {MAX_UNITS} distinct units")
        seq[t] = i
    return Alphabet(tuple(index)), seq


def export_text(alphabet: Alphabet, seq, path, mode: str = "chars") -> None:
    """Inverse of ingest_text."""
    labels = [alphabet.symbols[int(i)] for i in seq]
    path = Path(path)
    if mode == "bytes":
        path.write_bytes(bytes(int(v, 16) for v in labels))
    elif mode == "chars":
        path.write_text("".join(_label_char(v) for v in labels), encoding="utf-8")
    elif mode in ("tokens", "token-list"):
        path.write_text(" ".join(labels) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown ingest mode {mode!r}")


def write_mapping(alphabet: Alphabet, path) -> None:
    Path(path).write_text("".join(f"{i}\t{s}\n" for i, s in enumerate(alphabet.symbols)))


def summarize(report: ExperimentReport) -> str:
    lines = ["n\treplicas\tfailed\trecovery\tse\tell_mismatch\tempty"]
    for n, s in report.summary().items():
        lines.append(
            f"{n}\t{s['replicas']}\t{s['failed']}\t{s['recovery']:.4f}\t{s['recovery_se']:.4f}"
            f"\t{s['ell_mismatch']:.4f}\t{s['empty']:.4f}"
        )
    return "\n".join(lines)


__all__ = [
    "CalibrationConfig",
    "ExperimentConfig",
    "ExperimentReport",
    "compare_trees",
    "export_report",
    "ingest_text",
    "load_config",
    "run_null_calibration",
    "run_recovery_experiment",
]
