import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from icstream.core import FeatureKind, Schema
from icstream.errors import NonFinite, UnknownCategoricalValue
from icstream.ingestion import EncoderState, encode


def numeric_state(n_features=1, **kwargs):
    return EncoderState(Schema.numeric(n_features, 2), **kwargs)


class TestNumericScaling:
    def test_first_value_passes_through(self):
        state = numeric_state()
        assert encode(state, [5.0], 0).features[0] == 5.0

    def test_second_value_passes_through(self):
        state = numeric_state()
        encode(state, [5.0], 0)
        assert encode(state, [9.0], 0).features[0] == 9.0

    def test_zscore_uses_running_population_stats(self):
        # oracle: after seeing {0, 2}, mean and population std from numpy
        mean = np.mean([0.0, 2.0])
        std = np.std([0.0, 2.0])
        expected = (2.0 - mean) / std
        assert expected == 1.0

        state = numeric_state(n_features=2)
        encode(state, [0.0, 0.0], 0)
        encode(state, [2.0, 0.0], 0)
        third = encode(state, [2.0, 0.0], 0)
        assert third.features[0] == pytest.approx(expected)
        # second column has zero spread so far: centered only
        assert third.features[1] == pytest.approx(0.0)

    def test_no_lookahead(self):
        # the sentinel's own magnitude must not influence its scaling
        state = numeric_state()
        for _ in range(3):
            encode(state, [1.0], 0)
        sentinel = encode(state, [1e9], 0)
        assert sentinel.features[0] == pytest.approx(1e9 - 1.0)
        # but the sentinel does shift statistics for the value after it
        follower = encode(state, [1.0], 0)
        assert follower.features[0] != pytest.approx(0.0)

    @given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=40))
    @settings(max_examples=100, deadline=None)
    def test_running_moments_match_numpy_prefix(self, values):
        state = numeric_state()
        for i, value in enumerate(values):
            got = encode(state, [value], 0).features[0]
            prefix = np.asarray(values[:i])
            if i < 2:
                expected = value
            elif prefix.max() == prefix.min():
                # true spread is exactly zero; two-pass numpy can report a
                # rounding-noise std here (mean of identical values is not
                # always representable), so pin the centered branch directly
                expected = value - prefix.mean()
            else:
                std = prefix.std()
                if std < 1e-9 * max(1.0, abs(prefix.mean())):
                    # spread below rounding noise: the z-score quotient is
                    # meaningless in either implementation
                    continue
                expected = (value - prefix.mean()) / std
            # rel matters when a small std inflates the quotient; one-pass
            # and two-pass moments agree to ~1e-13 relative there
            assert got == pytest.approx(expected, rel=1e-9, abs=1e-9)


class TestMissingNumeric:
    def test_imputes_running_mean_and_flags(self):
        state = numeric_state()
        encode(state, [1.0], 0)
        encode(state, [1.0], 0)
        imputed = encode(state, [""], 0)
        assert imputed.features[0] == pytest.approx(0.0)  # (mean - mean) / anything
        assert state.imputed_count == 1

    def test_imputed_value_does_not_move_statistics(self):
        state = numeric_state()
        encode(state, [0.0], 0)
        encode(state, [2.0], 0)
        encode(state, ["?"], 0)
        after = encode(state, [2.0], 0)
        assert after.features[0] == pytest.approx(1.0)  # stats still mean 1, std 1

    def test_question_mark_counts_too(self):
        state = numeric_state()
        encode(state, ["?"], 0)
        assert state.imputed_count == 1


class TestNumericRejections:
    def test_non_numeric_text(self):
        with pytest.raises(NonFinite):
            encode(numeric_state(), ["abc"], 0)

    def test_infinity(self):
        with pytest.raises(NonFinite):
            encode(numeric_state(), ["inf"], 0)

    def test_nan(self):
        with pytest.raises(NonFinite):
            encode(numeric_state(), [float("nan")], 0)


def categorical_schema():
    return Schema(
        feature_names=("color",),
        feature_kinds=(FeatureKind.categorical(),),
        class_names=("n", "p"),
    )


class TestCategorical:
    def test_first_seen_ordinals(self):
        state = EncoderState(categorical_schema())
        assert encode(state, ["red"], 0).features[0] == 0.0
        assert encode(state, ["blue"], 0).features[0] == 1.0
        assert encode(state, ["red"], 0).features[0] == 0.0

    def test_declared_order_respected(self):
        state = EncoderState(categorical_schema(), declared_values={0: ["blue", "red"]})
        assert encode(state, ["red"], 0).features[0] == 1.0

    def test_strict_mode_rejects_unseen(self):
        state = EncoderState(
            categorical_schema(), strict=True, declared_values={0: ["red", "blue"]}
        )
        encode(state, ["blue"], 0)
        with pytest.raises(UnknownCategoricalValue):
            encode(state, ["green"], 0)

    def test_missing_categorical_is_flagged(self):
        state = EncoderState(categorical_schema(), strict=True, declared_values={0: ["red"]})
        got = encode(state, ["?"], 0)
        assert got.features[0] == -1.0
        assert state.missing_categorical_count == 1


def test_normalize_off_passes_values_through():
    state = numeric_state(normalize=False)
    for value in [3.0, 7.0, 11.0]:
        assert encode(state, [value], 0).features[0] == value
