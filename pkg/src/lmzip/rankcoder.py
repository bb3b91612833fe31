"""Rank transform plus a DEFLATE backend.

Each epoch the PMF is sorted by descending weight (ties by ascending token
id, which both sides must agree on) and the actual token is replaced by its
position in that order.  A good predictor turns text into a rank sequence
dominated by zeros, which is exactly what a generic byte compressor models
well; ranks are serialized as little-endian base-128 varints and squeezed
through a raw DEFLATE stream at maximum level.
"""

from __future__ import annotations

import zlib

import numpy as np

from .errors import CorruptStreamError
from .predictor import QuantizedPmf

_DEFLATE_LEVEL = 9  # fixed so payload sizes reproduce across runs


def rank_permutation(pmf: QuantizedPmf) -> np.ndarray:
    """Token ids sorted by descending weight, ties by ascending id.

    order[r] is the token with rank r.
    """
    order = pmf.cache.get("rank_order")
    if order is None:
        order = np.argsort(-pmf.weights, kind="stable")
        pmf.cache["rank_order"] = order
    return order


def rank_of_tokens(pmf: QuantizedPmf) -> np.ndarray:
    """Inverse of rank_permutation: rank_of[token_id] = rank."""
    rank_of = pmf.cache.get("rank_of")
    if rank_of is None:
        order = rank_permutation(pmf)
        rank_of = np.empty(order.size, dtype=np.int32)
        rank_of[order] = np.arange(order.size, dtype=np.int32)
        pmf.cache["rank_of"] = rank_of
    return rank_of


def token_rank(pmf: QuantizedPmf, token_id: int) -> int:
    """Rank of one token: heavier tokens first, ties by ascending id.

    Counting beats building the whole permutation when only one token's
    rank is needed per epoch.
    """
    w = pmf.weights
    wx = w[token_id]
    return int(np.count_nonzero(w > wx)) + int(np.count_nonzero(w[:token_id] == wx))


def to_ranks(stream, session, weights_out: list | None = None) -> np.ndarray:
    """Replace each token by its rank under the session's evolving PMF."""
    out = np.empty(stream.n_tokens, dtype=np.int32)
    collect = weights_out.append if weights_out is not None else None
    last = None
    for i, x in enumerate(stream.ids.tolist()):
        pmf = session.predict()
        if pmf is last:
            # Static predictor: the cached full permutation is cheaper.
            out[i] = rank_of_tokens(pmf)[x]
        else:
            out[i] = token_rank(pmf, x)
        if collect is not None:
            collect(int(pmf.weights[x]))
        session.update(x)
        last = pmf
    return out


def from_ranks(ranks: np.ndarray, session) -> np.ndarray:
    """Inverse of to_ranks given an identically configured fresh session."""
    out = np.empty(len(ranks), dtype=np.int32)
    for i, r in enumerate(np.asarray(ranks).tolist()):
        pmf = session.predict()
        if not 0 <= r < pmf.size:
            raise CorruptStreamError(f"rank {r} outside vocabulary of {pmf.size}")
        x = int(rank_permutation(pmf)[r])
        out[i] = x
        session.update(x)
    return out


def _encode_varints(values) -> bytearray:
    buf = bytearray()
    append = buf.append
    for v in values:
        while v >= 0x80:
            append((v & 0x7F) | 0x80)
            v >>= 7
        append(v)
    return buf


def _decode_varints(data: bytes) -> np.ndarray:
    out = []
    acc = 0
    shift = 0
    for b in data:
        acc |= (b & 0x7F) << shift
        if b & 0x80:
            shift += 7
            if shift > 63:
                raise CorruptStreamError("varint too long")
        else:
            out.append(acc)
            acc = 0
            shift = 0
    if shift:
        raise CorruptStreamError("truncated varint")
    return np.asarray(out, dtype=np.int64)


def encode_ranks(ranks: np.ndarray) -> bytes:
    """Varint-serialize the ranks and compress with raw DEFLATE."""
    raw = _encode_varints(np.asarray(ranks).tolist())
    co = zlib.compressobj(_DEFLATE_LEVEL, zlib.DEFLATED, -15)
    return co.compress(bytes(raw)) + co.flush()


def decode_ranks(data: bytes) -> np.ndarray:
    """Exact inverse of encode_ranks."""
    try:
        do = zlib.decompressobj(-15)
        raw = do.decompress(data) + do.flush()
    except zlib.error as exc:
        raise CorruptStreamError(f"DEFLATE payload corrupt: {exc}") from exc
    if do.unused_data:
        raise CorruptStreamError("trailing garbage after DEFLATE stream")
    values = _decode_varints(raw)
    if values.size and int(values.max()) > np.iinfo(np.int32).max:
        raise CorruptStreamError("rank exceeds representable range")
    return values.astype(np.int32)
