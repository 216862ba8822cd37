import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icstream.core import ClassDistribution, Context, Query, Schema, argmax_label
from icstream.predictor import (
    GaussianNaiveBayesPredictor,
    KnnPredictor,
    MajorityClassPredictor,
    NoChangePredictor,
    PredictorConfig,
    build_predictor,
    knn_distribution,
)

from conftest import make_example


def ctx_of(points, labels, validate=True):
    examples = [
        make_example(p if isinstance(p, (list, tuple)) else [p], label, i)
        for i, (p, label) in enumerate(zip(points, labels))
    ]
    return Context.build(examples, n_long=0, validate=validate)


class TestConfig:
    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            PredictorConfig(kind="oracle")

    def test_rejects_bad_k(self):
        with pytest.raises(ValueError):
            PredictorConfig(kind="knn", k=0)

    def test_rejects_bad_laplace(self):
        with pytest.raises(ValueError):
            PredictorConfig(kind="naive_bayes", laplace=0.0)

    def test_rejects_remote_without_endpoint(self):
        with pytest.raises(ValueError):
            PredictorConfig(kind="remote")

    def test_rejects_bad_batch(self):
        with pytest.raises(ValueError):
            PredictorConfig(kind="remote", endpoint="h:1", batch_size=0)

    def test_builds_each_local_kind(self):
        schema = Schema.numeric(2, 2)
        for kind in ("knn", "naive_bayes", "no_change", "majority_class"):
            predictor = build_predictor(PredictorConfig(kind=kind), schema)
            assert predictor.predict(Context.empty(2), [Query(np.zeros(2))])


class TestKnn:
    def test_exact_match_wins_everything(self):
        schema = Schema.numeric(1, 3)
        ctx = ctx_of([4.0], [2])
        predictor = KnnPredictor(schema, k=1)
        probs = predictor.predict(ctx, [Query(np.array([4.0]))])[0].probs
        assert probs[2] == pytest.approx(1.0)

    def test_empty_context_is_uniform(self):
        schema = Schema.numeric(1, 3)
        probs = KnnPredictor(schema, k=5).predict(
            Context.empty(1), [Query(np.array([0.0]))]
        )[0].probs
        assert probs.tolist() == pytest.approx([1 / 3, 1 / 3, 1 / 3])

    def test_equidistant_points_split_evenly(self):
        schema = Schema.numeric(1, 2)
        ctx = ctx_of([-1.0, 1.0], [0, 1])
        probs = KnnPredictor(schema, k=2).predict(ctx, [Query(np.array([0.0]))])[0].probs
        assert probs.tolist() == pytest.approx([0.5, 0.5])

    def test_inverse_distance_weighting(self):
        # hand arithmetic: weights 1/1 and 1/9 give class 0 a 0.9 share
        schema = Schema.numeric(1, 2)
        ctx = ctx_of([0.0, 10.0], [0, 1])
        probs = KnnPredictor(schema, k=2).predict(ctx, [Query(np.array([1.0]))])[0].probs
        assert probs[0] == pytest.approx(0.9, abs=1e-9)

    def test_k_beyond_context_uses_all(self):
        schema = Schema.numeric(1, 2)
        ctx = ctx_of([0.0, 1.0, 2.0], [0, 1, 0])
        big = KnnPredictor(schema, k=50).predict(ctx, [Query(np.array([0.5]))])[0]
        exact = KnnPredictor(schema, k=3).predict(ctx, [Query(np.array([0.5]))])[0]
        assert big.probs.tolist() == exact.probs.tolist()

    def test_module_level_op_matches_predictor(self):
        ctx = ctx_of([0.0, 10.0], [0, 1])
        dist = knn_distribution(ctx, Query(np.array([1.0])), k=2)
        assert dist.probs[0] == pytest.approx(0.9, abs=1e-9)

    def test_module_level_op_rejects_empty(self):
        with pytest.raises(ValueError):
            knn_distribution(Context.empty(1), Query(np.array([0.0])), k=1)

    @given(st.randoms(use_true_random=False))
    @settings(max_examples=60, deadline=None)
    def test_invariant_under_context_permutation(self, rnd):
        schema = Schema.numeric(2, 3)
        n = rnd.randint(2, 12)
        points = [[rnd.uniform(-5, 5), rnd.uniform(-5, 5)] for _ in range(n)]
        labels = [rnd.randint(0, 2) for _ in range(n)]
        order = list(range(n))
        rnd.shuffle(order)
        ctx = ctx_of(points, labels)
        shuffled = Context.build(
            [ctx.examples[i] for i in order], n_long=0, validate=False
        )
        query = Query(np.array([rnd.uniform(-5, 5), rnd.uniform(-5, 5)]))
        predictor = KnnPredictor(schema, k=4)
        a = predictor.predict(ctx, [query])[0].probs
        b = predictor.predict(shuffled, [query])[0].probs
        assert np.allclose(a, b)


def reference_nb_posterior(features, labels, query, n_classes, laplace):
    """Straight-line Gaussian naive Bayes for cross-checking."""
    n = len(labels)
    pooled_mean = np.mean(features, axis=0)
    pooled_var = np.maximum(np.var(features, axis=0), 1e-9)
    scores = []
    for c in range(n_classes):
        rows = features[np.asarray(labels) == c]
        prior = (len(rows) + laplace) / (n + laplace * n_classes)
        mean = rows.mean(axis=0) if len(rows) else pooled_mean
        var = np.maximum(rows.var(axis=0), 1e-9) if len(rows) >= 2 else pooled_var
        log_density = sum(
            -0.5 * math.log(2 * math.pi * v) - (q - m) ** 2 / (2 * v)
            for q, m, v in zip(query, mean, var)
        )
        scores.append(math.log(prior) + log_density)
    shifted = np.exp(np.array(scores) - max(scores))
    return shifted / shifted.sum()


class TestNaiveBayes:
    def test_query_at_class_mean_takes_that_class(self):
        schema = Schema.numeric(1, 2)
        ctx = ctx_of([-3.0, -3.2, 3.0, 3.2], [0, 0, 1, 1])
        predictor = GaussianNaiveBayesPredictor(schema)
        dist = predictor.predict(ctx, [Query(np.array([-3.1]))])[0]
        assert argmax_label(dist) == 0
        dist = predictor.predict(ctx, [Query(np.array([3.1]))])[0]
        assert argmax_label(dist) == 1

    def test_matches_reference_formula(self):
        schema = Schema.numeric(2, 3)
        rng = np.random.default_rng(4)
        points = rng.normal(size=(12, 2)).tolist()
        labels = rng.integers(0, 3, size=12).tolist()
        ctx = ctx_of(points, labels)
        query = np.array([0.3, -0.8])
        got = GaussianNaiveBayesPredictor(schema, laplace=1.0).predict(
            ctx, [Query(query)]
        )[0].probs
        want = reference_nb_posterior(ctx.features, labels, query, 3, 1.0)
        assert np.allclose(got, want, atol=1e-12)

    def test_empty_context_is_uniform(self):
        schema = Schema.numeric(2, 4)
        probs = GaussianNaiveBayesPredictor(schema).predict(
            Context.empty(2), [Query(np.zeros(2))]
        )[0].probs
        assert probs.tolist() == pytest.approx([0.25] * 4)

    def test_class_absent_from_context_still_scored(self):
        schema = Schema.numeric(1, 3)
        ctx = ctx_of([0.0, 0.1, 5.0, 5.1], [0, 0, 1, 1])
        dist = GaussianNaiveBayesPredictor(schema).predict(
            ctx, [Query(np.array([0.05]))]
        )[0]
        assert dist.probs.shape == (3,)
        assert argmax_label(dist) == 0


class TestNoChange:
    def test_uniform_before_any_label(self):
        schema = Schema.numeric(1, 4)
        probs = NoChangePredictor(schema).predict(
            Context.empty(1), [Query(np.zeros(1))]
        )[0].probs
        assert probs.tolist() == pytest.approx([0.25] * 4)

    def test_repeats_last_label(self):
        schema = Schema.numeric(1, 3)
        predictor = NoChangePredictor(schema)
        predictor.record_label(make_example([0.0], 1, 0))
        dist = predictor.predict(Context.empty(1), [Query(np.zeros(1))])[0]
        assert dist.probs.tolist() == [0.0, 1.0, 0.0]
        predictor.record_label(make_example([0.0], 2, 1))
        dist = predictor.predict(Context.empty(1), [Query(np.zeros(1))])[0]
        assert argmax_label(dist) == 2


class TestMajorityClass:
    def test_counts_accumulate(self):
        schema = Schema.numeric(1, 2)
        predictor = MajorityClassPredictor(schema)
        for label in [0, 0, 1]:
            predictor.record_label(make_example([0.0], label, 0))
        dist = predictor.predict(Context.empty(1), [Query(np.zeros(1))])[0]
        assert argmax_label(dist) == 0
        assert dist.probs.tolist() == pytest.approx([2 / 3, 1 / 3])

    @given(st.lists(st.integers(0, 3), min_size=1, max_size=60))
    @settings(max_examples=100, deadline=None)
    def test_argmax_is_the_mode(self, labels):
        schema = Schema.numeric(1, 4)
        predictor = MajorityClassPredictor(schema)
        for i, label in enumerate(labels):
            predictor.record_label(make_example([0.0], label, i))
        counts = [labels.count(c) for c in range(4)]
        mode = counts.index(max(counts))
        dist = predictor.predict(Context.empty(1), [Query(np.zeros(1))])[0]
        assert argmax_label(dist) == mode

    def test_ignores_context(self):
        schema = Schema.numeric(1, 2)
        predictor = MajorityClassPredictor(schema)
        predictor.record_label(make_example([0.0], 1, 0))
        ctx = ctx_of([5.0, 5.0, 5.0], [0, 0, 0])
        dist = predictor.predict(ctx, [Query(np.array([5.0]))])[0]
        assert argmax_label(dist) == 1


def test_all_local_predictors_are_deterministic():
    schema = Schema.numeric(2, 3)
    rng = np.random.default_rng(0)
    ctx = ctx_of(rng.normal(size=(20, 2)).tolist(), rng.integers(0, 3, 20).tolist())
    queries = [Query(q) for q in rng.normal(size=(5, 2))]
    for kind in ("knn", "naive_bayes", "no_change", "majority_class"):
        predictor = build_predictor(PredictorConfig(kind=kind), schema)
        first = [d.probs.tobytes() for d in predictor.predict(ctx, queries)]
        second = [d.probs.tobytes() for d in predictor.predict(ctx, queries)]
        assert first == second
