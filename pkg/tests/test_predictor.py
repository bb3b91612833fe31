"""Quantization and the built-in predictor sessions."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lmzip.errors import InvalidPmfError, VocabularyTooLargeError
from lmzip.predictor import (
    PMF_TOTAL,
    AdaptiveModel,
    FixedModel,
    UniformModel,
    make_session,
    quantize_scores,
)


def quantize_oracle(scores):
    """Independent exact-rational largest-remainder quantizer."""
    scores = [int(s) for s in scores]
    d = len(scores)
    if all(s == 0 for s in scores):
        scores = [1] * d
    total = sum(scores)
    span = PMF_TOTAL - d
    shares = [Fraction(s * span, total) for s in scores]
    weights = [1 + int(sh) for sh in shares]
    deficit = PMF_TOTAL - sum(weights)
    order = sorted(range(d), key=lambda t: (-(shares[t] - int(shares[t])), t))
    for t in order[:deficit]:
        weights[t] += 1
    return weights


class TestQuantize:
    def test_uniform_divides_exactly(self):
        pmf = quantize_scores([7, 7, 7, 7])
        assert pmf.weights.tolist() == [PMF_TOTAL // 4] * 4

    def test_single_positive_score(self):
        pmf = quantize_scores([1, 0, 0])
        assert pmf.weights.tolist() == [PMF_TOTAL - 2, 1, 1]

    def test_three_to_one_ratio(self):
        pmf = quantize_scores([3, 1])
        # frozen from the exact-rational oracle
        assert pmf.weights.tolist() == [12582912, 4194304]
        assert pmf.weights.tolist() == quantize_oracle([3, 1])

    def test_all_zero_treated_as_uniform(self):
        assert quantize_scores([0, 0]).weights.tolist() == [PMF_TOTAL // 2] * 2

    def test_vocabulary_too_large(self):
        with pytest.raises(VocabularyTooLargeError):
            quantize_scores(np.ones(PMF_TOTAL // 2 + 1, dtype=np.int64))

    def test_negative_score_rejected(self):
        with pytest.raises(InvalidPmfError):
            quantize_scores([1, -1])

    def test_empty_rejected(self):
        with pytest.raises(InvalidPmfError):
            quantize_scores([])

    @given(
        st.lists(st.integers(min_value=0, max_value=10**6), min_size=1, max_size=80)
    )
    def test_matches_exact_oracle(self, scores):
        pmf = quantize_scores(scores)
        assert pmf.weights.tolist() == quantize_oracle(scores)

    @given(
        st.lists(st.integers(min_value=0, max_value=5000), min_size=1, max_size=60)
    )
    def test_validity_and_fidelity(self, scores):
        pmf = quantize_scores(scores)
        w = pmf.weights
        d = w.size
        assert int(w.sum()) == PMF_TOTAL
        assert int(w.min()) >= 1
        norm = [int(s) for s in scores]
        if all(s == 0 for s in norm):
            norm = [1] * d
        total = sum(norm)
        bound = Fraction(d + 1, PMF_TOTAL)
        for t in range(d):
            err = abs(Fraction(int(w[t]), PMF_TOTAL) - Fraction(norm[t], total))
            assert err <= bound

    def test_bigint_fallback_matches_oracle(self):
        scores = [2**61, 1, 5]
        pmf = quantize_scores(scores)
        assert pmf.weights.tolist() == quantize_oracle(scores)
        assert int(pmf.weights.sum()) == PMF_TOTAL

    def test_cumulative_partitions_total(self):
        pmf = quantize_scores([5, 1, 9, 2])
        cum = pmf.cumulative()
        assert cum[0] == 0 and cum[-1] == PMF_TOTAL
        assert np.array_equal(np.diff(cum), pmf.weights)


class TestUniformModel:
    def test_equal_weights(self):
        model = UniformModel(4)
        assert model.predict().weights.tolist() == [1 << 22] * 4

    def test_update_is_noop(self):
        model = UniformModel(256)
        before = model.predict()
        model.update(7)
        assert model.predict() is before


class TestFixedModel:
    def test_static_prediction(self):
        model = FixedModel([2, 1, 1])
        first = model.predict()
        model.update(0)
        assert model.predict() is first


class TestAdaptiveModel:
    def test_untrained_is_uniform(self):
        model = AdaptiveModel(256, order=2, memory=16)
        assert model.predict().weights.tolist() == [PMF_TOTAL // 256] * 256

    def test_order1_context_shapes_prediction(self):
        # after a, b, a with k=1 the context is 'a' and b is favored
        model = AdaptiveModel(256, order=1, memory=8)
        for tok in (97, 98, 97):
            model.update(tok)
        w = model.predict().weights
        assert w[98] > w[97]

    def test_order0_counts_dominate(self):
        model = AdaptiveModel(256, order=0, memory=8)
        for _ in range(3):
            model.update(7)
        w = model.predict().weights
        assert w[7] > w[np.arange(256) != 7].max()

    def test_predict_stable_without_update(self):
        model = AdaptiveModel(256, order=2, memory=8)
        model.update(1)
        model.update(2)
        assert model.predict() is model.predict()

    def test_deterministic_across_sessions(self, rng):
        toks = rng.integers(0, 256, 300).tolist()
        a = AdaptiveModel(256, order=3, memory=16)
        b = AdaptiveModel(256, order=3, memory=16)
        for t in toks:
            assert np.array_equal(a.predict().weights, b.predict().weights)
            a.update(t)
            b.update(t)

    def test_window_capped_at_memory(self):
        # same counts, windows differing only beyond the last M entries
        a = AdaptiveModel(256, order=3, memory=2)
        b = AdaptiveModel(256, order=3, memory=2)
        a._window[:] = bytes([9, 9, 1, 2])
        b._window[:] = bytes([4, 4, 1, 2])
        assert np.array_equal(a.predict().weights, b.predict().weights)

    def test_memory_zero_ignores_context(self):
        a = AdaptiveModel(256, order=3, memory=0)
        b = AdaptiveModel(256, order=3, memory=0)
        for t in (1, 2, 3):
            a.update(t)
        for t in (3, 1, 2):
            b.update(t)
        # only order-0 counts matter, and they are equal multisets
        assert np.array_equal(a.predict().weights, b.predict().weights)

    def test_large_vocab_uses_sparse_tables(self):
        model = AdaptiveModel(32000, order=2, memory=8)
        for t in (5, 31999, 5, 7):
            model.update(t)
        w = model.predict().weights
        assert int(w.sum()) == PMF_TOTAL
        assert int(w.min()) >= 1


def test_make_session_dispatch():
    assert isinstance(make_session("uniform", 256, memory=0, order=0), UniformModel)
    assert isinstance(make_session("adaptive", 256, memory=4, order=2), AdaptiveModel)
    with pytest.raises(ValueError):
        make_session("nope", 256, memory=0, order=0)
