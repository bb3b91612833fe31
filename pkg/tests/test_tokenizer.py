"""Tokenizer layer: preprocessing, greedy parsing, accounting."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lmzip.errors import (
    CorruptStreamError,
    InvalidVocabularyError,
    UndefinedStatisticError,
)
from lmzip.tokenizer import (
    TokenStream,
    Vocabulary,
    detokenize,
    mean_chars_per_token,
    preprocess_text8,
    token_boundaries,
    tokenize,
)


class TestPreprocess:
    def test_empty(self):
        assert preprocess_text8(b"") == b""

    def test_mixed_punctuation(self):
        assert preprocess_text8(b"My  Book!") == b"my book"

    def test_clean_input_unchanged(self):
        assert preprocess_text8(b"abc") == b"abc"

    def test_strips_ends_and_collapses_runs(self):
        assert preprocess_text8(b"  A--B  c  ") == b"a b c"

    @given(st.binary(max_size=300))
    def test_idempotent_and_alphabet(self, raw):
        once = preprocess_text8(raw)
        assert preprocess_text8(once) == once
        assert all(b == 0x20 or 0x61 <= b <= 0x7A for b in once)
        assert b"  " not in once
        assert not once.startswith(b" ") and not once.endswith(b" ")


class TestVocabulary:
    def test_bytes_only_shape(self, byte_vocab):
        assert byte_vocab.size == 256
        assert byte_vocab.max_token_bytes == 1
        assert byte_vocab.entries[65] == b"A"

    def test_rejects_missing_single_byte(self):
        entries = [bytes([b]) for b in range(255)]
        with pytest.raises(InvalidVocabularyError):
            Vocabulary(entries)

    def test_rejects_duplicates_and_empty(self):
        with pytest.raises(InvalidVocabularyError):
            Vocabulary.with_extra_tokens([b"ab", b"ab"])
        with pytest.raises(InvalidVocabularyError):
            Vocabulary([bytes([b]) for b in range(256)] + [b""])

    def test_rejects_entry_over_declared_bound(self):
        entries = [bytes([b]) for b in range(256)] + [b"abcd"]
        with pytest.raises(InvalidVocabularyError):
            Vocabulary(entries, max_token_bytes=2)

    def test_serialization_roundtrip(self, tmp_path):
        vocab = Vocabulary.with_extra_tokens([b"th", b"the ", b"\x00\xff"])
        path = tmp_path / "v.vocab"
        vocab.save(path)
        back = Vocabulary.load(path)
        assert back == vocab
        assert back.digest() == vocab.digest()

    def test_digest_tracks_content(self):
        a = Vocabulary.with_extra_tokens([b"ab"])
        b = Vocabulary.with_extra_tokens([b"ac"])
        assert a.digest() != b.digest()
        assert len(a.digest()) == 32


class TestTokenize:
    def test_greedy_prefers_longest(self):
        vocab = Vocabulary.with_extra_tokens([b"ab"])
        stream, bounds = tokenize(b"abab", vocab)
        assert stream.ids.tolist() == [256, 256]
        assert stream.byte_lens.tolist() == [2, 2]
        assert bounds.tolist() == [2, 4]

    def test_empty_text(self, byte_vocab):
        stream, bounds = tokenize(b"", byte_vocab)
        assert stream.n_tokens == 0 and stream.n_chars == 0
        assert bounds.size == 0

    def test_byte_vocab_is_identity(self, byte_vocab):
        stream, _ = tokenize(b"xyz", byte_vocab)
        assert stream.ids.tolist() == [120, 121, 122]
        assert stream.byte_lens.tolist() == [1, 1, 1]

    def test_longer_entry_wins_over_prefix(self):
        vocab = Vocabulary.with_extra_tokens([b"ab", b"abc"])
        stream, _ = tokenize(b"abcab", vocab)
        assert stream.ids.tolist() == [257, 256]

    @given(st.binary(max_size=400))
    def test_roundtrip_byte_vocab(self, text):
        vocab = Vocabulary.bytes_only()
        stream, _ = tokenize(text, vocab)
        assert detokenize(stream, vocab) == text

    @given(
        st.binary(max_size=200),
        st.lists(st.binary(min_size=2, max_size=5), max_size=8, unique=True),
    )
    def test_roundtrip_any_vocab(self, text, extras):
        vocab = Vocabulary.with_extra_tokens(extras)
        stream, bounds = tokenize(text, vocab)
        assert detokenize(stream, vocab) == text
        # boundary index consistency: m_i - m_{i-1} = byte len i, m_0 = b_0
        assert np.array_equal(np.diff(bounds, prepend=0), stream.byte_lens)
        if bounds.size:
            assert (np.diff(bounds) > 0).all()

    def test_restricted_injectivity(self):
        # distinct token sequences decode to distinct strings
        vocab = Vocabulary.with_extra_tokens([b"ab", b"ba"])
        seen = {}
        for ids in ([256, 257], [256, 256], [97, 98, 97], [257]):
            stream = TokenStream.from_pairs(
                (i, len(vocab.entries[i])) for i in ids
            )
            text = detokenize(stream, vocab)
            assert text not in seen, (ids, seen[text])
            seen[text] = ids


class TestDetokenize:
    def test_rejects_out_of_range_id(self, byte_vocab):
        stream = TokenStream.from_pairs([(300, 1)])
        with pytest.raises(CorruptStreamError):
            detokenize(stream, byte_vocab)

    def test_empty(self, byte_vocab):
        assert detokenize(TokenStream.from_pairs([]), byte_vocab) == b""

    def test_byte_concat(self, byte_vocab):
        stream = TokenStream.from_pairs([(109, 1), (121, 1)])
        assert detokenize(stream, byte_vocab) == b"my"


class TestMeanCharsPerToken:
    def test_reference_total_row(self):
        # 9,137,710 characters over 2,000,000 tokens -> 4.568855 exactly
        lens = np.ones(2_000_000, dtype=np.int32)
        lens[0] = 9_137_710 - 1_999_999
        stream = TokenStream(ids=np.zeros(2_000_000, dtype=np.int32), byte_lens=lens)
        got = mean_chars_per_token(stream)
        assert got == Fraction(9_137_710, 2_000_000)
        assert float(got) == 4.568855

    def test_byte_stream_is_one(self, byte_vocab):
        stream, _ = tokenize(b"hello", byte_vocab)
        assert mean_chars_per_token(stream) == 1

    def test_exact_rational(self):
        stream = TokenStream.from_pairs([(0, 2), (0, 2), (0, 1)])
        assert mean_chars_per_token(stream) == Fraction(5, 3)

    def test_empty_stream_error(self):
        with pytest.raises(UndefinedStatisticError):
            mean_chars_per_token(TokenStream.from_pairs([]))


def test_boundaries_match_lengths(small_stream):
    bounds = token_boundaries(small_stream)
    assert bounds[-1] == small_stream.n_chars
    assert np.array_equal(np.diff(bounds, prepend=0), small_stream.byte_lens)
