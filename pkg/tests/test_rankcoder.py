"""Rank transform and the varint+DEFLATE backend."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import ScriptedModel
from lmzip.errors import CorruptStreamError
from lmzip.predictor import AdaptiveModel, UniformModel, quantize_scores
from lmzip.rankcoder import (
    decode_ranks,
    encode_ranks,
    from_ranks,
    rank_of_tokens,
    rank_permutation,
    to_ranks,
    token_rank,
)
from lmzip.tokenizer import TokenStream


def stream_of(ids):
    ids = np.asarray(ids, dtype=np.int32)
    return TokenStream(ids, np.ones(ids.size, dtype=np.int32))


# PMFs shaped like the worked next-word tables: a handful of named
# candidates and a low-probability tail.
EPOCH5 = [0] * 8
EPOCH5[0:4] = [30, 20, 10, 5]  # reading, writing, cycling, driving, ...
EPOCH5[4:] = [1, 1, 1, 1]
EPOCH6 = [0] * 8
EPOCH6[0:3] = [70, 20, 5]  # a, an, the, ...
EPOCH6[3:] = [1, 1, 1, 1, 1]


class TestRankPermutation:
    def test_second_most_likely_has_rank_one(self):
        pmf = quantize_scores(EPOCH5)
        order = rank_permutation(pmf)
        assert order[0] == 0  # 'reading'
        assert rank_of_tokens(pmf)[1] == 1  # 'writing'

    def test_most_likely_has_rank_zero(self):
        pmf = quantize_scores(EPOCH6)
        assert rank_of_tokens(pmf)[0] == 0  # 'a'

    def test_uniform_ties_break_by_ascending_id(self):
        pmf = quantize_scores([1, 1, 1, 1])
        assert rank_permutation(pmf).tolist() == [0, 1, 2, 3]

    def test_permutation_is_bijection(self, rng):
        for _ in range(30):
            d = int(rng.integers(1, 40))
            pmf = quantize_scores(rng.integers(0, 9, size=d).astype(np.int64))
            order = rank_permutation(pmf)
            rank_of = rank_of_tokens(pmf)
            assert np.array_equal(order[rank_of], np.arange(d))
            assert np.array_equal(np.sort(order), np.arange(d))
            w = pmf.weights[order]
            assert (np.diff(w) <= 0).all()  # non-increasing along ranks

    def test_token_rank_matches_full_permutation(self, rng):
        for _ in range(40):
            d = int(rng.integers(1, 30))
            pmf = quantize_scores(rng.integers(0, 4, size=d).astype(np.int64))
            rank_of = rank_of_tokens(pmf)
            for x in range(d):
                assert token_rank(pmf, x) == rank_of[x]


class TestRankTransform:
    def test_worked_sentence_ranks(self):
        # epoch 5 codes 'writing' (id 1), epoch 6 codes 'a' (id 0)
        session = ScriptedModel([EPOCH5, EPOCH6])
        ranks = to_ranks(stream_of([1, 0]), session)
        assert ranks.tolist() == [1, 0]

    def test_inverse_of_worked_sentence(self):
        tokens = from_ranks(np.asarray([1, 0]), ScriptedModel([EPOCH5, EPOCH6]))
        assert tokens.tolist() == [1, 0]

    def test_single_token_uniform_rank_is_id(self):
        session = UniformModel(16)
        assert to_ranks(stream_of([11]), session).tolist() == [11]

    def test_all_zero_ranks_decode_to_token_zero(self):
        tokens = from_ranks(np.zeros(5, dtype=np.int32), UniformModel(8))
        assert tokens.tolist() == [0] * 5

    def test_adaptive_roundtrip_random_streams(self, rng):
        for _ in range(15):
            n = int(rng.integers(1, 800))
            ids = rng.integers(0, 256, size=n)
            ranks = to_ranks(stream_of(ids), AdaptiveModel(256, order=2, memory=32))
            back = from_ranks(ranks, AdaptiveModel(256, order=2, memory=32))
            assert np.array_equal(back, ids.astype(np.int32))

    def test_rank_out_of_range_rejected(self):
        with pytest.raises(CorruptStreamError):
            from_ranks(np.asarray([8]), UniformModel(8))

    def test_zero_rank_dominates_on_text(self, small_stream):
        sub = TokenStream(small_stream.ids[:20000], small_stream.byte_lens[:20000])
        ranks = to_ranks(sub, AdaptiveModel(256, order=3, memory=64))
        counts = np.bincount(ranks)
        assert counts[0] == counts.max()
        assert counts[0] > counts[1:].max()


class TestRankSerialization:
    def test_empty_roundtrip(self):
        assert decode_ranks(encode_ranks(np.empty(0, dtype=np.int32))).size == 0

    def test_highly_repetitive_compresses_hard(self):
        ranks = np.zeros(100_000, dtype=np.int32)
        payload = encode_ranks(ranks)
        assert len(payload) < 100_000 * 0.01  # varint size is one byte each

    @given(st.lists(st.integers(min_value=0, max_value=40_000), max_size=300))
    def test_roundtrip_random_ranks(self, values):
        ranks = np.asarray(values, dtype=np.int32)
        assert np.array_equal(decode_ranks(encode_ranks(ranks)), ranks)

    def test_corrupt_deflate_rejected(self):
        with pytest.raises(CorruptStreamError):
            decode_ranks(b"\x07definitely not a deflate stream\x99\x99")
        # a valid stream followed by trailing garbage is also rejected
        payload = encode_ranks(np.asarray([1, 2, 3], dtype=np.int32))
        with pytest.raises(CorruptStreamError):
            decode_ranks(payload + b"\x00garbage")

    def test_truncated_varint_rejected(self):
        import zlib

        co = zlib.compressobj(9, zlib.DEFLATED, -15)
        bad = co.compress(b"\x80") + co.flush()  # continuation with no final byte
        with pytest.raises(CorruptStreamError):
            decode_ranks(bad)
