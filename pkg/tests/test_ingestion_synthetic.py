import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icstream.errors import InvalidSpec
from icstream.ingestion import (
    Concept,
    DriftSpec,
    Segment,
    gaussian_drift_stream,
    rotating_hyperplane_stream,
)


def concept(means, priors=None, scales=1.0):
    means = np.asarray(means, dtype=np.float64)
    if priors is None:
        priors = np.full(means.shape[0], 1.0 / means.shape[0])
    return Concept(priors=np.asarray(priors), means=means, scales=np.asarray(scales))


def single_segment_spec(means, priors=None, scales=1.0, length=100):
    return DriftSpec(segments=(Segment(concept(means, priors, scales), length),))


class TestSpecValidation:
    def test_rejects_empty_segments(self):
        with pytest.raises(InvalidSpec):
            DriftSpec(segments=())

    def test_rejects_nonpositive_length(self):
        with pytest.raises(InvalidSpec):
            Segment(concept([[0.0], [1.0]]), 0)

    def test_rejects_wide_gradual_window(self):
        c = concept([[0.0], [1.0]])
        with pytest.raises(InvalidSpec):
            DriftSpec(
                segments=(Segment(c, 50), Segment(c, 50)),
                transition="gradual",
                width=50,
            )

    def test_rejects_width_without_gradual(self):
        c = concept([[0.0], [1.0]])
        with pytest.raises(InvalidSpec):
            DriftSpec(segments=(Segment(c, 50),), width=10)

    def test_rejects_mismatched_class_counts(self):
        with pytest.raises(InvalidSpec):
            DriftSpec(
                segments=(
                    Segment(concept([[0.0], [1.0]]), 10),
                    Segment(concept([[0.0], [1.0], [2.0]]), 10),
                )
            )

    def test_rejects_bad_priors(self):
        with pytest.raises(InvalidSpec):
            concept([[0.0], [1.0]], priors=[0.5, -0.5])
        with pytest.raises(InvalidSpec):
            concept([[0.0], [1.0]], priors=[0.0, 0.0])

    def test_rejects_bad_scales(self):
        with pytest.raises(InvalidSpec):
            concept([[0.0], [1.0]], scales=0.0)

    def test_rejects_unknown_transition(self):
        c = concept([[0.0], [1.0]])
        with pytest.raises(InvalidSpec):
            DriftSpec(segments=(Segment(c, 10),), transition="sudden")


class TestGaussianStream:
    def test_deterministic_for_seed(self):
        spec = single_segment_spec([[0.0, 0.0], [3.0, 3.0]], length=100)
        first = [(ex.features.tobytes(), ex.label) for ex in gaussian_drift_stream(spec, 7)]
        second = [(ex.features.tobytes(), ex.label) for ex in gaussian_drift_stream(spec, 7)]
        third = [(ex.features.tobytes(), ex.label) for ex in gaussian_drift_stream(spec, 8)]
        assert first == second
        assert first != third

    def test_arrival_indices_count_up_once(self):
        spec = single_segment_spec([[0.0], [1.0]], length=50)
        arrivals = [ex.arrival_index for ex in gaussian_drift_stream(spec, 0)]
        assert arrivals == list(range(50))

    def test_length_is_sum_of_segments(self):
        c = concept([[0.0], [1.0]])
        spec = DriftSpec(segments=(Segment(c, 30), Segment(c, 20)))
        source = gaussian_drift_stream(spec, 1)
        assert len(source) == 50
        assert len(list(source)) == 50

    def test_swapped_means_flip_label_of_fixed_point(self):
        a = concept([[-1.0], [1.0]])
        b = concept([[1.0], [-1.0]])
        spec = DriftSpec(segments=(Segment(a, 100), Segment(b, 100)))
        source = gaussian_drift_stream(spec, 3)
        x = np.array([1.0])
        before = int(np.argmax(source.class_posterior(50, x)))
        after = int(np.argmax(source.class_posterior(150, x)))
        assert before == 1
        assert after == 0

    def test_skewed_prior_concentrates(self):
        spec = single_segment_spec(
            [[0.0], [1.0]], priors=[0.9, 0.1], length=10_000
        )
        labels = [ex.label for ex in gaussian_drift_stream(spec, 11)]
        fraction = labels.count(0) / len(labels)
        assert abs(fraction - 0.9) <= 0.02

    def test_gradual_window_mixes_incrementally(self):
        # concepts are far apart, so the feature sign identifies the source
        a = concept([[-100.0], [-101.0]])
        b = concept([[100.0], [101.0]])
        spec = DriftSpec(
            segments=(Segment(a, 300), Segment(b, 300)),
            transition="gradual",
            width=100,
        )
        examples = list(gaussian_drift_stream(spec, 5))
        from_b = [ex.features[0] > 0 for ex in examples]
        assert not any(from_b[:200])
        assert all(from_b[300:])
        window = from_b[200:300]
        assert sum(window[:50]) < sum(window[50:])

    def test_posterior_at_separated_mean_is_confident(self):
        spec = single_segment_spec([[-5.0], [5.0]], length=10)
        source = gaussian_drift_stream(spec, 0)
        probs = source.class_posterior(0, np.array([-5.0]))
        assert probs[0] > 0.999

    def test_posterior_equals_priors_when_classes_indistinguishable(self):
        spec = single_segment_spec(
            [[2.0], [2.0]], priors=[0.7, 0.3], length=10
        )
        source = gaussian_drift_stream(spec, 0)
        probs = source.class_posterior(0, np.array([0.3]))
        assert np.allclose(probs, [0.7, 0.3])

    def test_posterior_out_of_range_position(self):
        source = gaussian_drift_stream(single_segment_spec([[0.0], [1.0]], length=10), 0)
        with pytest.raises(InvalidSpec):
            source.class_posterior(10, np.array([0.0]))

    @given(st.integers(0, 2**32 - 1), st.floats(-20, 20))
    @settings(max_examples=50, deadline=None)
    def test_posterior_is_distribution(self, seed, x):
        a = concept([[-2.0], [2.0]], priors=[0.4, 0.6])
        b = concept([[2.0], [-2.0]])
        spec = DriftSpec(
            segments=(Segment(a, 60), Segment(b, 60)), transition="gradual", width=30
        )
        source = gaussian_drift_stream(spec, seed)
        rng = np.random.default_rng(seed)
        t = int(rng.integers(0, 120))
        probs = source.class_posterior(t, np.array([x]))
        assert (probs >= 0).all()
        assert probs.sum() == pytest.approx(1.0)


class TestRotatingHyperplane:
    def test_deterministic_for_seed(self):
        first = [
            (ex.features.tobytes(), ex.label)
            for ex in rotating_hyperplane_stream(4, 0.001, 0.1, 9, length=200)
        ]
        second = [
            (ex.features.tobytes(), ex.label)
            for ex in rotating_hyperplane_stream(4, 0.001, 0.1, 9, length=200)
        ]
        assert first == second

    def test_zero_noise_labels_match_boundary(self):
        source = rotating_hyperplane_stream(3, 0.01, 0.0, 2, length=500)
        for ex in source:
            w = source.normal_at(ex.arrival_index)
            assert ex.label == (1 if float(w @ ex.features) >= 0 else 0)

    def test_zero_rate_is_stationary_for_fixed_classifier(self):
        # oracle: simulate a fixed linear rule on both halves of the stream
        probe = np.zeros(3)
        probe[0], probe[1] = 0.6, 0.8
        examples = list(rotating_hyperplane_stream(3, 0.0, 0.0, 13, length=10_000))
        correct = [
            int((float(probe @ ex.features) >= 0) == bool(ex.label)) for ex in examples
        ]
        first, second = np.mean(correct[:5000]), np.mean(correct[5000:])
        assert abs(first - second) <= 0.03

    def test_rotation_angle_matches_rate(self):
        source = rotating_hyperplane_stream(5, 0.001, 0.0, 0, length=10)
        w0, w500 = source.normal_at(0), source.normal_at(500)
        angle = math.acos(np.clip(w0 @ w500, -1.0, 1.0))
        assert angle == pytest.approx(0.5, abs=1e-12)

    def test_full_noise_reduces_majority_accuracy_to_prior(self):
        labels = [ex.label for ex in rotating_hyperplane_stream(2, 0.0, 0.5, 21, length=10_000)]
        majority_accuracy = max(labels.count(0), labels.count(1)) / len(labels)
        assert abs(majority_accuracy - 0.5) <= 0.03

    def test_infinite_by_default(self):
        source = rotating_hyperplane_stream(2, 0.0, 0.0, 1)
        taken = list(itertools.islice(source, 1000))
        assert len(taken) == 1000
        assert taken[-1].arrival_index == 999

    def test_posterior_reflects_noise(self):
        source = rotating_hyperplane_stream(2, 0.0, 0.2, 0, length=10)
        x = np.array([1.0, 0.0])
        assert np.allclose(source.class_posterior(0, x), [0.2, 0.8])
        assert np.allclose(source.class_posterior(0, -x), [0.8, 0.2])

    def test_validation(self):
        with pytest.raises(InvalidSpec):
            rotating_hyperplane_stream(1, 0.0, 0.0, 0)
        with pytest.raises(InvalidSpec):
            rotating_hyperplane_stream(2, 0.0, 1.5, 0)
        with pytest.raises(InvalidSpec):
            rotating_hyperplane_stream(2, 0.0, 0.0, 0, length=0)
