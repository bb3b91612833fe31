"""Entropy upper-bound estimation, compression ratios, batch statistics.

The estimator accumulates log2(PMF_TOTAL / weight) over the tokens a
predictor actually saw, divides by the character count, and reports bits
per character.  It shares a single predictor pass with the codec ratio
measurements (``measure_stream``), so a benchmark never runs the predictor
more than once per stream.

Log values are accumulated in float64; the estimator is measurement, not
part of the lossless path, and the documented tolerances absorb the
rounding (about 1e-10 relative on a million tokens).
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import tbyt as _tbyt
from .errors import UndefinedStatisticError
from .rangecoder import RangeEncoder
from .rankcoder import encode_ranks, rank_of_tokens, token_rank
from .tokenizer import TokenStream, detokenize

CODEC_NAMES = ("rank", "tbyt", "ac")


def weights_to_bits(weights) -> float:
    """Ideal codelength sum: log2(PMF_TOTAL / w) over the weight sequence."""
    arr = np.asarray(weights, dtype=np.int64)
    if arr.size == 0:
        return 0.0
    return float(np.sum(24.0 - np.log2(arr.astype(np.float64))))


def tbyt_accounting_bits(weights) -> int:
    """Ceil-log accounting total: sum of ceil(log2(PMF_TOTAL / w))."""
    arr = np.asarray(weights, dtype=np.int64)
    if arr.size == 0:
        return 0
    exps = np.frexp(arr.astype(np.float64))[1]
    return int(np.sum(25 - exps, dtype=np.int64))


@dataclass
class StreamMetrics:
    """Measurements of one stream under one predictor configuration."""

    n_chars: int
    n_tokens: int
    cross_entropy_bits: float
    rho_bpc: dict[str, float] = field(default_factory=dict)
    # Filled only when measure_stream(keep_payloads=True): maps codec name
    # to its encoded payload ("tbyt" to (payload, padding_bits)).
    payloads: dict | None = None

    @property
    def h_ub_bpc(self) -> float:
        return self.cross_entropy_bits / self.n_chars

    @property
    def h_ub_bits_per_token(self) -> float:
        return self.cross_entropy_bits / self.n_tokens

    @property
    def mean_chars_per_token(self) -> float:
        return self.n_chars / self.n_tokens


def compression_ratio(n_bits: int, n_chars: int) -> float:
    """Bits of output per character of input."""
    if n_chars < 1:
        raise UndefinedStatisticError("compression ratio over zero characters")
    return n_bits / n_chars


def estimate_h_ub(stream: TokenStream, session) -> StreamMetrics:
    """Run the predictor over the stream and bound the source entropy rate."""
    return measure_stream(stream, session, codecs=())


def deflate_ratio(text: bytes) -> float:
    """Standalone raw-DEFLATE baseline at maximum level, bits/character."""
    co = zlib.compressobj(9, zlib.DEFLATED, -15)
    return compression_ratio((len(co.compress(text)) + len(co.flush())) * 8, len(text))


def measure_stream(
    stream: TokenStream,
    session,
    codecs=CODEC_NAMES,
    vocab=None,
    deflate_baseline: bool = False,
    keep_payloads: bool = False,
) -> StreamMetrics:
    """Single predictor pass computing the entropy bound and any requested
    codec ratios.

    All codecs consume the same PMF sequence, so their payload bytes are
    identical to what the standalone encode functions produce; with
    ``keep_payloads`` they are retained on the result.  The token-by-token
    ratio uses the ceil-log accounting total regardless.  With
    ``deflate_baseline`` the stream is detokenized (``vocab`` required) and
    compressed with raw DEFLATE at maximum level for comparison.
    """
    if stream.n_tokens == 0 or stream.n_chars == 0:
        raise UndefinedStatisticError("entropy estimate over an empty stream")
    want_rank = "rank" in codecs
    want_ac = "ac" in codecs
    want_tbyt_payload = keep_payloads and "tbyt" in codecs
    n = stream.n_tokens
    weights = np.empty(n, dtype=np.int64)
    ranks = np.empty(n, dtype=np.int32) if want_rank else None
    enc = RangeEncoder() if want_ac else None
    tbyt_writer = _tbyt.writer() if want_tbyt_payload else None
    last = None
    for i, x in enumerate(stream.ids.tolist()):
        pmf = session.predict()
        w = int(pmf.weights[x])
        weights[i] = w
        if want_rank:
            if pmf is last:
                ranks[i] = rank_of_tokens(pmf)[x]
            else:
                ranks[i] = token_rank(pmf, x)
        if want_ac:
            enc.encode(int(pmf.cumulative()[x]), w)
        if tbyt_writer is not None:
            tbyt_writer.write(*_tbyt.epoch_code(pmf).codeword(x))
        session.update(x)
        last = pmf

    n_chars = stream.n_chars
    rho: dict[str, float] = {}
    payloads: dict = {} if keep_payloads else None
    if want_rank:
        rank_payload = encode_ranks(ranks)
        rho["rank"] = compression_ratio(len(rank_payload) * 8, n_chars)
        if keep_payloads:
            payloads["rank"] = rank_payload
    if "tbyt" in codecs:
        rho["tbyt"] = compression_ratio(tbyt_accounting_bits(weights), n_chars)
        if want_tbyt_payload:
            payloads["tbyt"] = tbyt_writer.finish()
    if want_ac:
        ac_payload = enc.finish()
        rho["ac"] = compression_ratio(len(ac_payload) * 8, n_chars)
        if keep_payloads:
            payloads["ac"] = ac_payload
    if deflate_baseline:
        if vocab is None:
            raise ValueError("deflate baseline needs the vocabulary")
        rho["deflate"] = deflate_ratio(detokenize(stream, vocab))
    return StreamMetrics(
        n_chars=n_chars,
        n_tokens=n,
        cross_entropy_bits=weights_to_bits(weights),
        rho_bpc=rho,
        payloads=payloads,
    )


@dataclass
class BatchReport:
    """Per-batch metrics with population mean and standard deviation.

    The standard deviation divides by the batch count n (population
    formula), which is recorded here so report consumers know what the
    spread column means.
    """

    batches: list[StreamMetrics]
    mean: dict[str, float]
    std: dict[str, float]
    std_kind: str = "population"

    def columns(self) -> list[str]:
        return list(self.mean.keys())


def _column_values(batches: list[StreamMetrics]) -> dict[str, list[float]]:
    cols: dict[str, list[float]] = {"h_ub": [m.h_ub_bpc for m in batches]}
    for name in batches[0].rho_bpc:
        if all(name in m.rho_bpc for m in batches):
            cols[f"rho_{name}"] = [m.rho_bpc[name] for m in batches]
    return cols


def batch_stats(batches) -> BatchReport:
    """Arithmetic mean and population std of every metric column."""
    batches = list(batches)
    if not batches:
        raise UndefinedStatisticError("statistics over zero batches")
    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for name, values in _column_values(batches).items():
        n = len(values)
        m = math.fsum(values) / n
        var = math.fsum((v - m) ** 2 for v in values) / n
        mean[name] = m
        std[name] = math.sqrt(var)
    return BatchReport(batches=batches, mean=mean, std=std)


def format_mean_std(mean: float, std: float) -> str:
    """Render a summary cell the way result tables print them."""
    return f"{mean:.4f} ± {std:.4f}"
