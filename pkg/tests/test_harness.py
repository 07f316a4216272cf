import numpy as np
import pytest

from vlmc.estimators import DeltaConfig
from vlmc.harness import (
    CSV_HEADER,
    CalibrationConfig,
    ExperimentConfig,
    ExperimentReport,
    export_report,
    export_text,
    import_tree,
    export_tree,
    ingest_text,
    parse_config,
    run_null_calibration,
    run_recovery_experiment,
)
from vlmc.core import ref_tree

CONFIG = """
[experiment]
tree = REF
n_grid = 500 2000
replicas = 3
algo = delta
truncate = 2
seed = 17

[delta]
delta = 0.08
k = 4
"""


def small_cfg(**kw):
    base = dict(tree="REF", n_grid=(500, 2000), replicas=3, algo="delta", delta=DeltaConfig(0.08, 4), seed=17)
    base.update(kw)
    return ExperimentConfig(**base)


class TestConfig:
    def test_parse(self):
        cfg = parse_config(CONFIG)
        assert cfg == small_cfg()

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="unknown key"):
            parse_config(CONFIG + "detla = 0.1\n")

    def test_unknown_section(self):
        with pytest.raises(ValueError, match="unknown config section"):
            parse_config(CONFIG + "[extra]\nx = 1\n")

    def test_context_section(self):
        cfg = parse_config("[experiment]\nalgo = context-fixed\nn_grid = 100\n[context-fixed]\nc1 = 1\nc2_prune = 2\n")
        assert cfg.context.depth_mode == "deterministic" and cfg.context.c2_prune == 2.0

    @pytest.mark.parametrize("kw", [dict(replicas=0), dict(n_grid=(100, 100)), dict(algo="context"), dict(delta=None)])
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            small_cfg(**kw)


class TestRecovery:
    def test_rows_and_order(self):
        rep = run_recovery_experiment(small_cfg())
        assert [(r.n, r.replica) for r in rep.rows] == [(n, r) for n in (500, 2000) for r in range(3)]
        for s in rep.summary().values():
            assert 0 <= s["recovery"] <= 1

    def test_byte_identical_runs(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run_recovery_experiment(small_cfg(replicas=1), out=a)
        run_recovery_experiment(small_cfg(replicas=1), out=b)
        assert a.read_bytes() == b.read_bytes()

    def test_incremental_file_matches_report(self, tmp_path):
        out = tmp_path / "r.csv"
        rep = run_recovery_experiment(small_cfg(), out=out)
        assert out.read_text() == rep.to_csv()
        assert len(out.read_text().splitlines()) == 1 + 2 * 3

    def test_workers_do_not_change_output(self):
        one = run_recovery_experiment(small_cfg()).to_csv()
        two = run_recovery_experiment(small_cfg(workers=2)).to_csv()
        assert one == two

    def test_grid_extension_keeps_rows(self):
        short = run_recovery_experiment(small_cfg(n_grid=(500,))).rows
        longer = run_recovery_experiment(small_cfg(n_grid=(500, 2000))).rows
        assert short == longer[:3]

    def test_failed_replica_recorded(self):
        rep = run_recovery_experiment(small_cfg(n_grid=(4, 500)))
        bad = [r for r in rep.rows if r.n == 4]
        assert len(bad) == 3 and all(r.error for r in bad)
        assert all(r.csv().split(",")[3:6] == ["-1", "-1", "-1"] for r in bad)
        assert all(r.error is None for r in rep.rows if r.n == 500)

    def test_wall_time_off_by_default(self):
        rep = run_recovery_experiment(small_cfg(replicas=1))
        assert all(r.csv().endswith(",0.000") for r in rep.rows)
        timed = run_recovery_experiment(small_cfg(replicas=1, record_time=True))
        assert any(r.wall_ms > 0 for r in timed.rows)

    def test_empty_report(self, tmp_path):
        export_report(ExperimentReport(), tmp_path / "e.csv")
        assert (tmp_path / "e.csv").read_text() == CSV_HEADER + "\n"


class TestCalibration:
    def test_single_replica(self):
        rep = run_null_calibration(CalibrationConfig(n=2000, replicas=1))
        assert len(rep.values) == 1 and rep.ks is None

    def test_small_run(self):
        rep = run_null_calibration(CalibrationConfig(n=5000, replicas=100))
        assert rep.df == 1 and rep.ks < 0.2
        assert 0.6 < rep.mean < 1.4


class TestIngest:
    def test_chars(self, tmp_path):
        p = tmp_path / "t.txt"
        p.write_text("abab")
        ab, seq = ingest_text(p, "chars")
        assert ab.symbols == ("a", "b") and list(seq) == [0, 1, 0, 1]

    def test_empty(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("")
        with pytest.raises(ValueError, match="empty"):
            ingest_text(p)

    def test_too_many_units(self, tmp_path):
        p = tmp_path / "big.txt"
        p.write_text(" ".join(f"w{i}" for i in range(65_537)))
        with pytest.raises(ValueError, match="65536"):
            ingest_text(p, "tokens")

    @pytest.mark.parametrize("mode,payload", [
        ("chars", "hello, world\nlines\t/ U+0041 café"),
        ("tokens", "the cat saw the dog\nthe end"),
        ("bytes", b"\x00\xffabc\n\x00"),
    ])
    def test_round_trip(self, tmp_path, mode, payload):
        src = tmp_path / "src"
        if isinstance(payload, bytes):
            src.write_bytes(payload)
        else:
            src.write_text(payload, encoding="utf-8")
        ab, seq = ingest_text(src, mode)
        out = tmp_path / "out"
        export_text(ab, seq, out, mode)
        ab2, seq2 = ingest_text(out, mode)
        assert ab2 == ab and np.array_equal(seq, seq2)

    def test_tree_round_trip(self, tmp_path):
        export_tree(ref_tree(), tmp_path / "t.txt")
        back = import_tree(tmp_path / "t.txt")
        assert np.array_equal(back.probs, ref_tree().probs)
