"""Benchmark harness: contiguous token batches, memory sweeps, baselines.

The corpus is tokenized once, sliced into contiguous non-overlapping spans
of ``batch_size_tokens``, and each (memory, batch) cell gets a fresh
predictor session.  Every cell reports the entropy upper bound and the
per-codec ratios from a single fused predictor pass, plus a standalone
DEFLATE baseline on the batch's own bytes.  Batches can fan out to a small
process pool; results merge in batch order so reports are deterministic.
"""

from __future__ import annotations

import io
import multiprocessing
from dataclasses import dataclass, field

from .errors import UndefinedStatisticError
from .metrics import (
    BatchReport,
    StreamMetrics,
    batch_stats,
    format_mean_std,
    measure_stream,
)
from .predictor import make_session
from .tokenizer import TokenStream, Vocabulary, tokenize

_TABLE1_COLUMNS = ("batch", "n_chars", "n_tokens", "h_ub", "rho_rank", "rho_tbyt",
                   "rho_ac", "rho_deflate")


@dataclass
class BenchConfig:
    corpus: bytes
    batch_size_tokens: int = 100_000
    batch_count: int | None = None  # None: as many full batches as fit
    memories: tuple[int, ...] = (64,)
    codecs: tuple[str, ...] = ("rank", "tbyt", "ac")
    predictor: str = "adaptive"
    order: int = 3
    workers: int = 1

    def __post_init__(self):
        if self.batch_size_tokens < 1:
            raise ValueError("batch size must be at least one token")


@dataclass
class BenchResult:
    config: BenchConfig
    # memory value -> per-batch metrics and their summary
    reports: dict[int, BatchReport] = field(default_factory=dict)


def _slice_batches(stream: TokenStream, size: int, count: int | None):
    n_full = stream.n_tokens // size
    if count is not None:
        n_full = min(n_full, count)
    if n_full == 0:
        raise UndefinedStatisticError("corpus shorter than one batch")
    for b in range(n_full):
        sl = slice(b * size, (b + 1) * size)
        yield TokenStream(stream.ids[sl], stream.byte_lens[sl])


def _run_cell(args) -> tuple[int, int, StreamMetrics]:
    memory, index, ids, lens, predictor, order, codecs = args
    vocab = Vocabulary.bytes_only()
    batch = TokenStream(ids, lens)
    session = make_session(predictor, vocab.size, memory=memory, order=order)
    metrics = measure_stream(batch, session, codecs=codecs, vocab=vocab,
                             deflate_baseline=True)
    return memory, index, metrics


def run_bench(config: BenchConfig) -> BenchResult:
    """Execute the sweep; one fused pass per (memory, batch) cell."""
    vocab = Vocabulary.bytes_only()
    stream, _ = tokenize(config.corpus, vocab)
    batches = list(_slice_batches(stream, config.batch_size_tokens,
                                  config.batch_count))
    jobs = [
        (memory, i, b.ids, b.byte_lens, config.predictor, config.order,
         config.codecs)
        for memory in config.memories
        for i, b in enumerate(batches)
    ]
    if config.workers > 1 and len(jobs) > 1:
        with multiprocessing.Pool(config.workers) as pool:
            cells = pool.map(_run_cell, jobs)
    else:
        cells = [_run_cell(job) for job in jobs]

    result = BenchResult(config=config)
    for memory in config.memories:
        per_batch = [m for mem, _, m in sorted(
            (c for c in cells if c[0] == memory), key=lambda c: c[1]
        )]
        result.reports[memory] = batch_stats(per_batch)
    return result


def _batch_row(index: int, m: StreamMetrics) -> list[str]:
    row = [str(index + 1), str(m.n_chars), str(m.n_tokens), f"{m.h_ub_bpc:.4f}"]
    for codec in ("rank", "tbyt", "ac", "deflate"):
        row.append(f"{m.rho_bpc[codec]:.4f}" if codec in m.rho_bpc else "-")
    return row


def _summary_rows(report: BatchReport) -> list[list[str]]:
    """Token-weighted total plus the batch mean/std row, both labeled."""
    batches = report.batches
    total_chars = sum(m.n_chars for m in batches)
    total_tokens = sum(m.n_tokens for m in batches)
    total_bits = sum(m.cross_entropy_bits for m in batches)
    total = ["total", str(total_chars), str(total_tokens),
             f"{total_bits / total_chars:.4f}"]
    for codec in ("rank", "tbyt", "ac", "deflate"):
        if all(codec in m.rho_bpc for m in batches):
            bits = sum(m.rho_bpc[codec] * m.n_chars for m in batches)
            total.append(f"{bits / total_chars:.4f}")
        else:
            total.append("-")
    spread = ["mean +/- std", "-", "-",
              format_mean_std(report.mean["h_ub"], report.std["h_ub"])]
    for codec in ("rho_rank", "rho_tbyt", "rho_ac", "rho_deflate"):
        if codec in report.mean:
            spread.append(format_mean_std(report.mean[codec], report.std[codec]))
        else:
            spread.append("-")
    return [total, spread]


def render_csv(result: BenchResult) -> str:
    out = io.StringIO()
    out.write("memory," + ",".join(_TABLE1_COLUMNS) + "\n")
    for memory, report in result.reports.items():
        for i, m in enumerate(report.batches):
            out.write(f"{memory}," + ",".join(_batch_row(i, m)) + "\n")
        for row in _summary_rows(report):
            out.write(f"{memory}," + ",".join(row) + "\n")
    return out.getvalue()


def render_table(result: BenchResult) -> str:
    headers = ["memory", *_TABLE1_COLUMNS]
    rows: list[list[str]] = []
    for memory, report in result.reports.items():
        for i, m in enumerate(report.batches):
            rows.append([str(memory), *_batch_row(i, m)])
        for row in _summary_rows(report):
            rows.append([str(memory), *row])
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(headers, widths))]
    for r in rows:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)))
    return "\n".join(lines) + "\n"
