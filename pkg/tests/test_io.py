import math

import numpy as np
import pytest

from meg import (
    EventLog,
    GraphShape,
    IngestError,
    Kind,
    ModelSpec,
    Params,
    TauMatrix,
    ValidationError,
    ingest,
    load_params,
    save_params,
    split,
    write_events_csv,
)
from meg.io import LabelTable


class TestIngest:
    def test_three_line_file(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text("time,source,destination\n1.0,alice,bob\n2.0,bob,alice\n"
                        "3.5,alice,bob\n")
        result = ingest(path)
        assert len(result.log) == 3
        assert result.labels.src_labels == ("alice", "bob")
        assert result.shape.n_src == 2
        assert result.n_duplicates == 0
        np.testing.assert_array_equal(result.log.src, [0, 1, 0])

    def test_duplicate_triplet_dropped_and_counted(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text("time,source,destination\n1.0,a,b\n1.0,a,b\n2.0,a,b\n")
        result = ingest(path)
        assert len(result.log) == 2
        assert result.n_duplicates == 1

    def test_shuffled_times_sort_identically(self, tmp_path):
        rng = np.random.default_rng(0)
        rows = [(float(t), f"n{s}", f"n{d}") for t, s, d in
                zip(rng.uniform(0, 10, 50), rng.integers(0, 4, 50),
                    rng.integers(0, 4, 50))]
        sorted_path = tmp_path / "sorted.csv"
        shuffled_path = tmp_path / "shuffled.csv"
        header = "time,source,destination\n"
        sorted_rows = sorted(rows, key=lambda r: r[0])
        sorted_path.write_text(header + "".join(f"{t!r},{s},{d}\n"
                                                for t, s, d in sorted_rows))
        shuffled = list(rows)
        rng.shuffle(shuffled)
        shuffled_path.write_text(header + "".join(f"{t!r},{s},{d}\n"
                                                  for t, s, d in shuffled))
        a = ingest(sorted_path)
        b = ingest(shuffled_path)
        np.testing.assert_array_equal(a.log.times, b.log.times)
        # labels may differ in id order; compare dereferenced triples
        tr_a = [(t, a.labels.src_labels[i], a.labels.dst_labels[j])
                for t, i, j in zip(a.log.times, a.log.src, a.log.dst)]
        tr_b = [(t, b.labels.src_labels[i], b.labels.dst_labels[j])
                for t, i, j in zip(b.log.times, b.log.src, b.log.dst)]
        assert tr_a == tr_b

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text("time,source,destination\n1.0,a,b\nnot-a-time,a,b\n")
        with pytest.raises(IngestError, match=":3"):
            ingest(path)

    def test_bad_field_count(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text("time,source,destination\n1.0,a\n")
        with pytest.raises(IngestError, match="3 fields"):
            ingest(path)

    def test_bipartite_namespaces(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text("time,source,destination\n1.0,x,x\n2.0,y,x\n")
        result = ingest(path, kind="bipartite")
        assert result.shape.bipartite
        assert result.labels.src_labels == ("x", "y")
        assert result.labels.dst_labels == ("x",)

    def test_roundtrip_idempotent(self, tmp_path):
        rng = np.random.default_rng(1)
        m = 30
        log = EventLog(np.sort(rng.uniform(0, 5, m)), rng.integers(0, 3, m),
                       rng.integers(0, 3, m), horizon=6.0, tie_offset=0.5)
        labels = LabelTable(False, ("a", "b", "c"), ("a", "b", "c"))
        path = tmp_path / "out.csv"
        write_events_csv(path, log, labels)
        back = ingest(path, dt=0.5)
        # ids may be renumbered by appearance order; remap and compare
        src = np.array([back.labels.src_labels.index(labels.src_labels[i])
                        for i in log.src])
        dst = np.array([back.labels.dst_labels.index(labels.dst_labels[j])
                        for j in log.dst])
        assert back.log == EventLog(log.times, src, dst, horizon=6.0, tie_offset=0.5)
        # a second emit/ingest cycle is exactly stable
        path2 = tmp_path / "out2.csv"
        write_events_csv(path2, back.log, back.labels)
        again = ingest(path2, dt=0.5)
        assert again.log == back.log


class TestSplit:
    def test_counts_match_set_arithmetic(self):
        rng = np.random.default_rng(2)
        m = 200
        log = EventLog(np.sort(rng.uniform(0, 10, m)), rng.integers(0, 5, m),
                       rng.integers(0, 5, m), horizon=10.0)
        res = split(log, 6.0)
        tr = {(int(i), int(j)) for t, i, j in
              zip(log.times, log.src, log.dst) if t <= 6.0}
        te = {(int(i), int(j)) for t, i, j in
              zip(log.times, log.src, log.dst) if t > 6.0}
        assert res.train_edges == len(tr)
        assert res.test_edges == len(te)
        assert res.shared_edges == len(tr & te)
        assert res.new_edges == len(te - tr)
        assert res.train.horizon == 6.0
        assert len(res.train) + len(res.test) == m

    def test_empty_side_warns(self):
        log = EventLog(np.array([1.0]), np.array([0]), np.array([1]),
                       horizon=10.0)
        with pytest.warns(UserWarning, match="degenerate"):
            split(log, 5.0)

    def test_invalid_split_time(self):
        log = EventLog(np.array([1.0]), np.array([0]), np.array([1]), horizon=10.0)
        with pytest.raises(ValidationError):
            split(log, 12.0)


class TestParamsFile:
    def test_roundtrip_byte_identical(self, tmp_path):
        shape = GraphShape.directed(3)
        spec = ModelSpec(main=Kind.HAWKES, interaction=Kind.MARKOV, d=2,
                         tau_strategy="mle")
        rng = np.random.default_rng(3)
        params = Params(
            alpha=rng.uniform(0.1, 1, 3), beta=rng.uniform(0.1, 1, 3),
            mu=rng.uniform(0.1, 1, 3), phi=rng.uniform(0.1, 1, 3),
            mu_p=rng.uniform(0.1, 1, 3), phi_p=rng.uniform(0.1, 1, 3),
            gamma=rng.uniform(0.1, 1, (3, 2)), gamma_p=rng.uniform(0.1, 1, (3, 2)),
            nu=rng.uniform(0.1, 1, (3, 2)), theta=rng.uniform(0.1, 1, (3, 2)),
            nu_p=rng.uniform(0.1, 1, (3, 2)), theta_p=rng.uniform(0.1, 1, (3, 2)),
        )
        tau = TauMatrix(default=math.inf, entries={(0, 1): 2.25, (2, 0): math.inf},
                        strategy="mle")
        labels = LabelTable(False, ("x", "y", "z"), ("x", "y", "z"))
        p1 = tmp_path / "a.json"
        p2 = tmp_path / "b.json"
        save_params(p1, params, spec, shape, tau, labels)
        loaded = load_params(p1)
        save_params(p2, *loaded)
        assert p1.read_bytes() == p2.read_bytes()
        back = loaded[0]
        for name, arr in params.blocks(spec):
            np.testing.assert_array_equal(getattr(back, name), arr)
        assert loaded[3].entries == tau.entries

    def test_format_guard(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "something-else"}')
        with pytest.raises(IngestError):
            load_params(path)
