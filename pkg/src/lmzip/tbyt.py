"""Token-by-token prefix coding with a fresh canonical code every epoch.

For each token the codeword length is the ceiling of log2(1/q) under the
current PMF; those lengths always satisfy the Kraft inequality, so a
canonical prefix code exists.  Codewords are assigned in (length, token id)
order and packed most-significant-bit first.

Two bit totals are tracked deliberately: ``total_bits`` follows the pure
ceil-log accounting formula (a certain token contributes 0), while
``emitted_bits`` counts the real bitstream, where every codeword is at
least one bit long.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CorruptStreamError, InvalidPmfError
from .predictor import PMF_TOTAL, QuantizedPmf

_MAX_LEN = 24  # weights are at least 1 of 2^24


def code_length(weight: int, total: int = PMF_TOTAL) -> int:
    """Exact integer ceil(log2(total / weight)); no floating log."""
    if weight <= 0:
        raise InvalidPmfError("zero-weight token has no codeword")
    if weight > total:
        raise InvalidPmfError("weight exceeds PMF total")
    bits = 0
    scaled = weight
    while scaled < total:
        scaled <<= 1
        bits += 1
    return bits


@dataclass
class CodeLengthProfile:
    """Per-epoch codeword lengths for the coded tokens plus both totals."""

    lengths: np.ndarray  # accounting lengths (unclamped ceil-log values)
    total_bits: int  # sum of accounting lengths
    emitted_bits: int  # sum of clamped lengths actually written
    padding_bits: int  # zero bits appended to reach a byte boundary


class EpochCode:
    """Canonical code skeleton for one PMF: lengths and numbering bases.

    Individual codewords are derived on demand; building the full codeword
    table every epoch would dominate the codec.
    """

    __slots__ = ("raw_lengths", "lengths", "first_code", "counts")

    def __init__(self, pmf: QuantizedPmf):
        w = pmf.weights
        # ceil(log2(total/w)) == 25 - bit_length(w) for 1 <= w <= 2^24;
        # frexp exponents are exact bit lengths for integer-valued floats.
        raw = 25 - np.frexp(w.astype(np.float64))[1]
        # A zero length (certain token) occurs only in the degenerate D=1
        # vocabulary; emission clamps it to one bit.
        lengths = raw if w.size > 1 else np.maximum(raw, 1)
        counts = np.bincount(lengths, minlength=_MAX_LEN + 1)
        first_code = [0] * (_MAX_LEN + 1)
        code = 0
        for ln, c in enumerate(counts.tolist()[1:], start=1):
            first_code[ln] = code
            code = (code + c) << 1
            if code > (1 << (ln + 1)):
                raise InvalidPmfError("length profile violates Kraft inequality")
        self.raw_lengths = raw
        self.lengths = lengths
        self.first_code = first_code
        self.counts = counts

    def codeword(self, token_id: int) -> tuple[int, int]:
        """(value, nbits) of the canonical codeword for one token."""
        lengths = self.lengths
        ln = int(lengths[token_id])
        offset = int(np.count_nonzero(lengths[:token_id] == ln))
        return self.first_code[ln] + offset, ln

    def symbol_at(self, ln: int, offset: int) -> int:
        """Token holding the offset-th codeword of the given length."""
        return int(np.nonzero(self.lengths == ln)[0][offset])


def epoch_code(pmf: QuantizedPmf) -> EpochCode:
    code = pmf.cache.get("tbyt")
    if code is None:
        code = EpochCode(pmf)
        pmf.cache["tbyt"] = code
    return code


class _BitWriter:
    def __init__(self):
        self.buf = bytearray()
        self._acc = 0
        self._nbits = 0

    def write(self, value: int, nbits: int) -> None:
        acc = (self._acc << nbits) | value
        nbits += self._nbits
        buf = self.buf
        while nbits >= 8:
            nbits -= 8
            buf.append((acc >> nbits) & 0xFF)
        self._acc = acc & ((1 << nbits) - 1)
        self._nbits = nbits

    def finish(self) -> tuple[bytes, int]:
        pad = (8 - self._nbits) % 8
        if pad:
            self.write(0, pad)
        return bytes(self.buf), pad


class _BitReader:
    def __init__(self, data: bytes, padding_bits: int):
        self._data = data
        self._limit = len(data) * 8 - padding_bits
        self._pos = 0

    def read_bit(self) -> int:
        pos = self._pos
        if pos >= self._limit:
            raise CorruptStreamError("bitstream exhausted mid-codeword")
        self._pos = pos + 1
        return (self._data[pos >> 3] >> (7 - (pos & 7))) & 1


def writer() -> "_BitWriter":
    """Fresh payload bit writer (MSB-first, zero-padded final byte)."""
    return _BitWriter()


def tbyt_encode(stream, session, weights_out: list | None = None) -> tuple[bytes, CodeLengthProfile]:
    """Emit one canonical codeword per token; returns payload and profile."""
    writer = _BitWriter()
    n = stream.n_tokens
    acct = np.empty(n, dtype=np.int64)
    emitted = 0
    collect = weights_out.append if weights_out is not None else None
    for i, x in enumerate(stream.ids.tolist()):
        pmf = session.predict()
        code = epoch_code(pmf)
        value, ln = code.codeword(x)
        writer.write(value, ln)
        acct[i] = code.raw_lengths[x]
        emitted += ln
        if collect is not None:
            collect(int(pmf.weights[x]))
        session.update(x)
    payload, pad = writer.finish()
    profile = CodeLengthProfile(
        lengths=acct,
        total_bits=int(acct.sum()) if n else 0,
        emitted_bits=emitted,
        padding_bits=pad,
    )
    return payload, profile


def tbyt_decode(data: bytes, session, n_tokens: int, padding_bits: int = 0) -> np.ndarray:
    """Rebuild each epoch's canonical code and read one codeword."""
    reader = _BitReader(data, padding_bits)
    out = np.empty(n_tokens, dtype=np.int32)
    for i in range(n_tokens):
        pmf = session.predict()
        code = epoch_code(pmf)
        counts = code.counts
        first_code = code.first_code
        acc = 0
        ln = 0
        while True:
            acc = (acc << 1) | reader.read_bit()
            ln += 1
            if ln > _MAX_LEN:
                raise CorruptStreamError("codeword longer than any in the code")
            if counts[ln]:
                idx = acc - first_code[ln]
                if 0 <= idx < counts[ln]:
                    break
        x = code.symbol_at(ln, idx)
        out[i] = x
        session.update(x)
    return out
