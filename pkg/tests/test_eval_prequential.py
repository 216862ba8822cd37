import json
import time

import numpy as np
import pytest

from icstream.core import Schema
from icstream.errors import RemoteUnavailable
from icstream.evaluation import (
    RunReport,
    TimingSummary,
    run_prequential,
    timing_report,
)
from icstream.ingestion.base import SYNTHETIC, Origin, StreamSource
from icstream.ingestion.synthetic import (
    Concept,
    DriftSpec,
    GaussianDriftSource,
    Segment,
)
from icstream.memory import MemoryConfig
from icstream.predictor import KnnPredictor, Predictor, PredictorConfig


class ListSource(StreamSource):
    def __init__(self, rows, labels, n_classes):
        super().__init__(
            Schema.numeric(len(rows[0]), n_classes), Origin(SYNTHETIC, "list", 0)
        )
        self._items = iter(zip(rows, labels))

    def _produce(self):
        item = next(self._items, None)
        if item is None:
            return None
        return np.asarray(item[0], dtype=np.float64), item[1]


def drift_spec():
    c0 = Concept(priors=[0.5, 0.5], means=[[0.0, 0.0], [2.0, 2.0]], scales=1.0)
    c1 = Concept(priors=[0.5, 0.5], means=[[2.0, 2.0], [0.0, 0.0]], scales=1.0)
    return DriftSpec(segments=(Segment(c0, 300), Segment(c1, 300)))


def memory(m=32, ratio=0.5, t_warm=0):
    return MemoryConfig(m=m, short_ratio=ratio, t_warm=t_warm)


class TestLoopSemantics:
    def test_no_change_hand_trace(self):
        # Before any label is revealed, no_change is uniform and argmax breaks
        # the tie to class 0; afterwards it repeats the last revealed label.
        # Labels 0,0,1,1 therefore yield predictions 0,0,0,1: three correct.
        source = ListSource([[0.0], [1.0], [2.0], [3.0]], [0, 0, 1, 1], 2)
        report = run_prequential(
            source, memory(m=4, t_warm=0), PredictorConfig(kind="no_change")
        )
        assert [r.predicted for r in report.records] == [0, 0, 0, 1]
        assert report.a_t == 0.75

    def test_strict_warmup_inequality(self):
        source = ListSource([[float(i)] for i in range(5)], [0, 1, 0, 1, 0], 2)
        report = run_prequential(
            source, memory(m=4, t_warm=4), PredictorConfig(kind="no_change")
        )
        assert report.n_instances == 5
        assert report.n_evaluated == 1
        assert report.records[0].arrival_index == 4

    def test_all_correct_is_one(self):
        # majority_class predicts 0 from the start (uniform tie) and the
        # stream only ever emits label 0
        source = ListSource([[float(i)] for i in range(30)], [0] * 30, 2)
        report = run_prequential(
            source, memory(m=8, t_warm=3), PredictorConfig(kind="majority_class")
        )
        assert report.a_t == 1.0

    def test_accuracy_recomputes_exactly_from_trace(self):
        report = run_prequential(
            GaussianDriftSource(drift_spec(), seed=5),
            memory(m=32, t_warm=50),
            PredictorConfig(kind="knn", k=5),
        )
        recount = sum(1 for r in report.records if r.predicted == r.label)
        assert report.a_t == recount / report.n_evaluated
        assert report.n_evaluated == len(report.records)

    def test_windowed_series_recounts(self):
        report = run_prequential(
            GaussianDriftSource(drift_spec(), seed=5),
            memory(m=32, t_warm=50),
            PredictorConfig(kind="knn", k=5),
            window=100,
        )
        records = list(report.records)
        rebuilt = []
        for start in range(0, len(records), 100):
            chunk = records[start : start + 100]
            rebuilt.append(
                (chunk[-1].arrival_index, sum(r.predicted == r.label for r in chunk) / len(chunk))
            )
        assert list(report.windowed) == rebuilt
        # 550 evaluated instances -> five full windows plus a partial tail
        assert len(report.windowed) == 6

    def test_empty_evaluation_yields_none_accuracy(self):
        source = ListSource([[0.0], [1.0]], [0, 1], 2)
        report = run_prequential(
            source, memory(m=4, t_warm=10), PredictorConfig(kind="no_change")
        )
        assert report.a_t is None
        assert report.n_evaluated == 0
        assert report.windowed == ()

    def test_max_instances_stops_early(self):
        report = run_prequential(
            GaussianDriftSource(drift_spec(), seed=1),
            memory(m=16, t_warm=0),
            PredictorConfig(kind="knn", k=3),
            max_instances=40,
        )
        assert report.n_instances == 40

    def test_scored_instance_never_in_its_own_context(self):
        class Instrumented(Predictor):
            def __init__(self, schema):
                super().__init__(schema)
                self.inner = KnnPredictor(schema, k=5)
                self.checked = 0

            def predict(self, ctx, queries):
                for query in queries:
                    assert query.arrival_index >= 0
                    arrivals = ctx.arrivals
                    assert query.arrival_index not in arrivals
                    # everything in the context arrived strictly earlier
                    assert arrivals.size == 0 or arrivals.max() < query.arrival_index
                self.checked += len(queries)
                return self.inner.predict(ctx, queries)

        wrapped = Instrumented(Schema.numeric(2, 2))
        report = run_prequential(
            GaussianDriftSource(drift_spec(), seed=9),
            memory(m=16, t_warm=20),
            wrapped,
        )
        assert wrapped.checked == report.n_evaluated == 580

    def test_engine_errors_carry_arrival_index(self):
        class Exploding(Predictor):
            def predict(self, ctx, queries):
                if queries[0].arrival_index >= 3:
                    raise RemoteUnavailable("endpoint gone")
                return self._uniform_batch(len(queries))

        source = ListSource([[float(i)] for i in range(10)], [0] * 10, 2)
        with pytest.raises(RemoteUnavailable) as excinfo:
            run_prequential(source, memory(m=4, t_warm=0), Exploding(Schema.numeric(1, 2)))
        assert excinfo.value.arrival_index == 3

    def test_config_echo_names_the_pieces(self):
        report = run_prequential(
            GaussianDriftSource(drift_spec(), seed=2),
            memory(m=16, ratio=0.5, t_warm=550),
            PredictorConfig(kind="knn", k=7),
            dataset="toy-drift",
        )
        assert report.config["dataset"] == "toy-drift"
        assert report.config["memory"]["m"] == 16
        assert report.config["predictor"]["kind"] == "knn"
        assert report.config["predictor"]["k"] == 7

    def test_eviction_stats_add_up(self):
        report = run_prequential(
            GaussianDriftSource(drift_spec(), seed=3),
            memory(m=16, ratio=0.5, t_warm=0),
            PredictorConfig(kind="no_change"),
        )
        # 600 arrivals into an 8/8 split: all but the last 8 leave the short
        # buffer, and the long buffer sheds all but 8 of those promotions
        assert report.eviction_stats["short_to_long"] == 592
        assert report.eviction_stats["long_drop"] == 584
        assert report.eviction_stats["short_drop"] == 0


class TestReportSerialization:
    def run(self, seed=4):
        return run_prequential(
            GaussianDriftSource(drift_spec(), seed=seed),
            memory(m=32, t_warm=50),
            PredictorConfig(kind="knn", k=5),
            seed=seed,
        )

    def test_identical_runs_are_byte_identical(self):
        assert self.run().canonical_bytes() == self.run().canonical_bytes()

    def test_different_seeds_differ(self):
        assert self.run(1).canonical_bytes() != self.run(2).canonical_bytes()

    def test_canonical_bytes_ignore_latency_noise(self):
        report = self.run()
        slower = RunReport(
            records=tuple(
                type(r)(r.arrival_index, r.predicted, r.label, r.latency_ms + 5.0)
                for r in report.records
            ),
            a_t=report.a_t,
            windowed=report.windowed,
            config=report.config,
            seed=report.seed,
            eviction_stats=report.eviction_stats,
            n_instances=report.n_instances,
            n_evaluated=report.n_evaluated,
        )
        assert slower.canonical_bytes() == report.canonical_bytes()

    def test_json_round_trip(self, tmp_path):
        report = self.run()
        path = tmp_path / "report.json"
        report.save_json(path)
        loaded = RunReport.load_json(path)
        assert loaded.canonical_bytes() == report.canonical_bytes()

    def test_rejects_foreign_documents(self, tmp_path):
        path = tmp_path / "other.json"
        path.write_text(json.dumps({"format": "something.else", "version": 1}))
        with pytest.raises(ValueError):
            RunReport.load_json(path)

    def test_windowed_csv(self, tmp_path):
        report = self.run()
        path = tmp_path / "windows.csv"
        report.save_windowed_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "window_end_index,accuracy"
        assert len(lines) == 1 + len(report.windowed)
        end, acc = lines[1].split(",")
        assert (int(end), float(acc)) == report.windowed[0]


class TestTiming:
    def test_empty_summary_is_not_an_error(self):
        source = ListSource([[0.0]], [0], 2)
        report = run_prequential(
            source, memory(m=4, t_warm=5), PredictorConfig(kind="no_change")
        )
        assert timing_report(report) == TimingSummary(0, None, None, None)

    def test_constant_latency_predictor(self):
        class Spin(Predictor):
            def predict(self, ctx, queries):
                deadline = time.perf_counter() + 0.001
                while time.perf_counter() < deadline:
                    pass
                return self._uniform_batch(len(queries))

        source = ListSource([[float(i)] for i in range(40)], [0] * 40, 2)
        report = run_prequential(
            source, memory(m=4, t_warm=0), Spin(Schema.numeric(1, 2))
        )
        summary = timing_report(report)
        assert summary.count == 40
        assert 1.0 <= summary.mean_ms < 2.0
        assert 1.0 <= summary.p50_ms <= summary.p99_ms

    def test_percentiles_order(self):
        report = run_prequential(
            GaussianDriftSource(drift_spec(), seed=6),
            memory(m=32, t_warm=100),
            PredictorConfig(kind="knn", k=5),
        )
        summary = timing_report(report)
        assert summary.count == report.n_evaluated
        assert 0.0 < summary.p50_ms <= summary.p99_ms
        assert summary.mean_ms > 0.0
