"""Byte-oriented integer range coder driven by per-epoch quantized PMFs.

The coder keeps a 64-bit window: ``low`` accumulates interval offsets (with
carries resolved through a deferred byte pipeline) and ``range`` is the
current interval width, renormalized a byte at a time whenever it drops
below 2^48.  Narrowing uses the classic scaled division

    r = range // PMF_TOTAL;  low += cum_lo * r;  range = weight * r

so the per-token precision loss is bounded by about 2^-24 relative (range
stays at least 2^48 while totals are 2^24), a few thousandths of a bit
even over billions of tokens.

The trailing flush pins a multiple of 2^40 inside the final interval and
emits its top three bytes, placed so that EVERY continuation of the
emitted bytes still falls inside the interval: decoding is insensitive to
whatever follows the payload (the container slices it exactly anyway, and
the decoder treats bytes past the payload as zeros).  The tail costs at
most 24 bits beyond the ideal codelength, so for any stream

    0 <= emitted_bits - sum(log2(PMF_TOTAL / weight_i)) < 24 + epsilon.

Framing (payload length, token count) lives in the container header, not
in the coder stream.
"""

from __future__ import annotations

import numpy as np

from .errors import CorruptStreamError
from .predictor import PMF_TOTAL

_MASK64 = (1 << 64) - 1
_RENORM = 1 << 48  # renormalize while range is below this
_TOP_BYTE_FULL = 0xFF << 56


class RangeEncoder:
    """Streaming encoder; call encode() per token, then finish() once."""

    def __init__(self):
        self.low = 0
        self.range = _MASK64
        self._cache = 0
        self._have_cache = False
        self._pending = 0
        self._out = bytearray()
        self._finished = False

    def _shift_low(self):
        low = self.low
        if low < _TOP_BYTE_FULL or low > _MASK64:
            carry = low >> 64
            if self._have_cache:
                self._out.append((self._cache + carry) & 0xFF)
            if self._pending:
                filler = (0xFF + carry) & 0xFF
                self._out.extend(bytes([filler]) * self._pending)
                self._pending = 0
            self._cache = (low >> 56) & 0xFF
            self._have_cache = True
        else:
            # Top byte is 0xFF and no carry has arrived yet: defer it.
            self._pending += 1
        self.low = (low << 8) & _MASK64

    def encode(self, cum_lo: int, weight: int, total: int = PMF_TOTAL) -> None:
        r = self.range // total
        self.low += cum_lo * r
        self.range = weight * r
        while self.range < _RENORM:
            self._shift_low()
            self.range <<= 8

    def finish(self) -> bytes:
        """Flush: pin a point inside the final interval and emit its top
        three bytes.

        Rounding low up to a multiple of 2^40 wastes under 2^40 of the
        (at least 2^48 wide) interval, and every continuation of the three
        emitted bytes spans under 2^40 more, so any byte tail after the
        payload decodes identically.
        """
        if self._finished:
            raise RuntimeError("finish() called twice")
        self._finished = True
        self.low = (self.low + (1 << 40) - 1) >> 40 << 40
        for _ in range(3):
            self._shift_low()
        if self._have_cache:
            self._out.append(self._cache)
        if self._pending:
            self._out.extend(b"\xff" * self._pending)
        return bytes(self._out)


class RangeDecoder:
    """Mirror of RangeEncoder; bytes past the payload read as zero."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 8
        self.range = _MASK64
        self.code = int.from_bytes(data[:8].ljust(8, b"\x00"), "big")
        self._r = 0

    def decode_target(self, total: int = PMF_TOTAL) -> int:
        """Value in [0, total) locating the next token's cumulative slot."""
        self._r = r = self.range // total
        v = self.code // r
        return total - 1 if v >= total else v

    def consume(self, cum_lo: int, weight: int) -> None:
        """Commit the token whose interval is [cum_lo, cum_lo + weight)."""
        r = self._r
        self.code -= cum_lo * r
        self.range = weight * r
        data, pos, n = self._data, self._pos, len(self._data)
        while self.range < _RENORM:
            b = data[pos] if pos < n else 0
            pos += 1
            self.code = ((self.code << 8) | b) & _MASK64
            self.range <<= 8
        self._pos = pos


def ac_encode(stream, session, weights_out: list | None = None) -> bytes:
    """Arithmetic-code a token stream against a fresh predictor session.

    When ``weights_out`` is given, the weight the PMF assigned to each
    actual token is appended to it, giving the exact ideal codelength
    accumulator alongside the coder.
    """
    enc = RangeEncoder()
    collect = weights_out.append if weights_out is not None else None
    for x in stream.ids.tolist():
        pmf = session.predict()
        cum = pmf.cumulative()
        w = int(pmf.weights[x])
        enc.encode(int(cum[x]), w)
        if collect is not None:
            collect(w)
        session.update(x)
    return enc.finish()


def ac_decode(data: bytes, session, n_tokens: int) -> np.ndarray:
    """Inverse of ac_encode; needs the token count from the container."""
    if n_tokens < 0:
        raise CorruptStreamError("negative token count")
    dec = RangeDecoder(data)
    out = np.empty(n_tokens, dtype=np.int32)
    for i in range(n_tokens):
        pmf = session.predict()
        cum = pmf.cumulative()
        v = dec.decode_target()
        x = int(np.searchsorted(cum, v, side="right")) - 1
        dec.consume(int(cum[x]), int(pmf.weights[x]))
        out[i] = x
        session.update(x)
    return out
