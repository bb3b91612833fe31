"""Tokenization layer: vocabularies, greedy longest-match parsing, and
character accounting.

A Vocabulary maps token ids to byte strings.  Because every single byte is
required to be present, any input tokenizes, and greedy longest-match makes
the mapping deterministic and invertible.  "Character" means byte
throughout; for corpora reduced by :func:`preprocess_text8` the two notions
coincide.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CorruptStreamError, InvalidVocabularyError, UndefinedStatisticError

_NON_LETTER_RUN = re.compile(rb"[^a-z]+")
_ASCII_LOWER = bytes(b + 32 if 0x41 <= b <= 0x5A else b for b in range(256))


def preprocess_text8(raw: bytes) -> bytes:
    """Reduce arbitrary bytes to lowercase words separated by single spaces.

    Uppercase ASCII is lowercased, every maximal run of non-letter bytes
    becomes one space, and leading/trailing spaces are stripped.  The result
    contains only ``a``-``z`` and ``0x20``.  Idempotent and total.
    """
    lowered = raw.translate(_ASCII_LOWER)
    return b" ".join(w for w in _NON_LETTER_RUN.split(lowered) if w)


class Vocabulary:
    """Token id <-> byte-string table.

    entries[i] is the byte string of token id i.  Entries must be unique and
    non-empty, and all 256 single-byte strings must be present so that any
    input can be tokenized.
    """

    def __init__(self, entries, max_token_bytes: int | None = None):
        entries = tuple(bytes(e) for e in entries)
        if not entries:
            raise InvalidVocabularyError("vocabulary is empty")
        longest = max(len(e) for e in entries)
        if max_token_bytes is None:
            max_token_bytes = longest
        for e in entries:
            if not e:
                raise InvalidVocabularyError("empty entry")
            if len(e) > max_token_bytes:
                raise InvalidVocabularyError(
                    f"entry {e!r} longer than declared bound {max_token_bytes}"
                )
        index = {e: i for i, e in enumerate(entries)}
        if len(index) != len(entries):
            raise InvalidVocabularyError("duplicate entries")
        for b in range(256):
            if bytes([b]) not in index:
                raise InvalidVocabularyError(f"single byte 0x{b:02x} missing")
        self.entries = entries
        self.size = len(entries)
        self.max_token_bytes = max_token_bytes
        self._index = index

    @classmethod
    def bytes_only(cls) -> "Vocabulary":
        """The 256-entry vocabulary where token id == byte value."""
        return cls([bytes([b]) for b in range(256)])

    @classmethod
    def with_extra_tokens(cls, extras) -> "Vocabulary":
        """All single bytes plus the given multi-byte entries, in order."""
        return cls([bytes([b]) for b in range(256)] + [bytes(e) for e in extras])

    # Serialized form: a header line "D B" followed by one lowercase-hex
    # encoded entry per line, in token-id order.
    def dumps(self) -> bytes:
        lines = [f"{self.size} {self.max_token_bytes}".encode()]
        lines += [e.hex().encode() for e in self.entries]
        return b"\n".join(lines) + b"\n"

    @classmethod
    def loads(cls, data: bytes) -> "Vocabulary":
        lines = data.decode("utf-8").splitlines()
        if not lines:
            raise InvalidVocabularyError("empty vocabulary file")
        try:
            count, bound = (int(x) for x in lines[0].split())
            entries = [bytes.fromhex(line) for line in lines[1 : count + 1]]
        except ValueError as exc:
            raise InvalidVocabularyError(f"malformed vocabulary file: {exc}") from exc
        if len(entries) != count:
            raise InvalidVocabularyError("entry count does not match header")
        return cls(entries, max_token_bytes=bound)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, "rb") as fh:
            return cls.loads(fh.read())

    def digest(self) -> bytes:
        """32-byte content hash of the canonical serialization."""
        return hashlib.sha256(self.dumps()).digest()

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.entries == other.entries

    def __repr__(self):
        return f"Vocabulary(size={self.size}, max_token_bytes={self.max_token_bytes})"


@dataclass(frozen=True)
class TokenStream:
    """A parsed input: token ids with the byte length each one consumed."""

    ids: np.ndarray = field(repr=False)  # int32, values in [0, D)
    byte_lens: np.ndarray = field(repr=False)  # int32, values >= 1

    @property
    def n_tokens(self) -> int:
        return int(self.ids.size)

    @property
    def n_chars(self) -> int:
        return int(self.byte_lens.sum()) if self.byte_lens.size else 0

    def items(self):
        """Iterate (token_id, byte_len) pairs."""
        return zip(self.ids.tolist(), self.byte_lens.tolist())

    @classmethod
    def from_pairs(cls, pairs) -> "TokenStream":
        pairs = list(pairs)
        ids = np.fromiter((p[0] for p in pairs), dtype=np.int32, count=len(pairs))
        lens = np.fromiter((p[1] for p in pairs), dtype=np.int32, count=len(pairs))
        return cls(ids, lens)


def token_boundaries(stream: TokenStream) -> np.ndarray:
    """Cumulative character index at which each token is emitted.

    boundaries[i] - boundaries[i-1] equals byte_lens[i], and boundaries[0]
    equals byte_lens[0].  Strictly increasing because every token consumes
    at least one byte.
    """
    return np.cumsum(stream.byte_lens, dtype=np.int64)


def tokenize(text: bytes, vocab: Vocabulary) -> tuple[TokenStream, np.ndarray]:
    """Greedy longest-match parse of text; returns the stream and its
    boundary index.

    At each position the longest vocabulary entry that matches is taken.
    Single-byte coverage guarantees progress, so the function is total.
    """
    if vocab.max_token_bytes == 1:
        ids = np.frombuffer(text, dtype=np.uint8).astype(np.int32)
        if vocab.entries != tuple(bytes([b]) for b in range(256)):
            remap = np.empty(256, dtype=np.int32)
            for b in range(256):
                remap[b] = vocab._index[bytes([b])]
            ids = remap[ids]
        lens = np.ones(ids.size, dtype=np.int32)
        stream = TokenStream(ids, lens)
        return stream, token_boundaries(stream)

    index = vocab._index
    bound = vocab.max_token_bytes
    n = len(text)
    ids: list[int] = []
    lens: list[int] = []
    pos = 0
    while pos < n:
        length = min(bound, n - pos)
        while length > 1 and text[pos : pos + length] not in index:
            length -= 1
        ids.append(index[text[pos : pos + length]])
        lens.append(length)
        pos += length
    stream = TokenStream(
        np.asarray(ids, dtype=np.int32), np.asarray(lens, dtype=np.int32)
    )
    return stream, token_boundaries(stream)


def detokenize(stream: TokenStream, vocab: Vocabulary) -> bytes:
    """Concatenate the entries named by the stream; inverse of tokenize."""
    ids = stream.ids
    if ids.size and (int(ids.min()) < 0 or int(ids.max()) >= vocab.size):
        raise CorruptStreamError("token id out of vocabulary range")
    entries = vocab.entries
    return b"".join(entries[i] for i in ids.tolist())


def detokenize_ids(ids, vocab: Vocabulary) -> bytes:
    """Like detokenize but for a bare id sequence."""
    entries = vocab.entries
    out = []
    for i in ids:
        if not 0 <= i < vocab.size:
            raise CorruptStreamError("token id out of vocabulary range")
        out.append(entries[i])
    return b"".join(out)


def mean_chars_per_token(stream: TokenStream) -> Fraction:
    """N_c / N_T as an exact rational."""
    if stream.n_tokens == 0:
        raise UndefinedStatisticError("mean chars per token of empty stream")
    return Fraction(stream.n_chars, stream.n_tokens)
