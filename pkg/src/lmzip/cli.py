"""Command-line interface: compress, decompress, estimate, bench."""

from __future__ import annotations

import argparse
import os
import sys

from .bench import BenchConfig, render_csv, render_table, run_bench
from .container import compress_bytes, decompress_bytes, parse_header
from .errors import LmzipError
from .metrics import measure_stream
from .predictor import make_session
from .tokenizer import Vocabulary, mean_chars_per_token, preprocess_text8, tokenize

ENV_BRIDGE_ADDR = "LMZIP_BRIDGE_ADDR"


def _parse_tokenizer(spec: str) -> tuple[str, Vocabulary | None]:
    if spec == "byte":
        return "byte", None
    if spec == "external":
        return "external", None
    if spec.startswith("vocab:"):
        return "vocab", Vocabulary.load(spec[len("vocab:") :])
    raise argparse.ArgumentTypeError(
        f"tokenizer must be byte, vocab:PATH, or external (got {spec!r})"
    )


def _parse_predictor(spec: str) -> tuple[str, str | None]:
    if spec in ("uniform", "adaptive"):
        return spec, None
    if spec == "external":
        return "external", os.environ.get(ENV_BRIDGE_ADDR)
    if spec.startswith("external:"):
        return "external", spec[len("external:") :]
    raise argparse.ArgumentTypeError(
        f"predictor must be uniform, adaptive, or external[:ADDR] (got {spec!r})"
    )


def _read_input(args) -> bytes:
    with open(args.input, "rb") as fh:
        data = fh.read()
    if args.preprocess_text8:
        data = preprocess_text8(data)
    return data


def _cmd_compress(args) -> int:
    text = _read_input(args)
    tokenizer, vocab = _parse_tokenizer(args.tokenizer)
    predictor, bridge_addr = _parse_predictor(args.predictor)
    blob, metrics = compress_bytes(
        text,
        codec=args.codec,
        tokenizer=tokenizer,
        vocab=vocab,
        predictor=predictor,
        memory=args.memory,
        order=args.order,
        bridge_address=bridge_addr,
    )
    out = args.out or args.input + ".lmz"
    with open(out, "wb") as fh:
        fh.write(blob)
    print(f"n_chars={metrics.n_chars} n_tokens={metrics.n_tokens}")
    if metrics.n_chars:
        print(f"h_ub={metrics.h_ub_bpc:.4f} bpc "
              f"({metrics.h_ub_bits_per_token:.4f} bits/token)")
        for codec, rho in metrics.rho_bpc.items():
            print(f"rho_{codec}={rho:.4f} bpc")
    header, _ = parse_header(blob)
    print(f"payload_bytes={header.payload_len} container_bytes={len(blob)}")
    return 0


def _cmd_decompress(args) -> int:
    with open(args.input, "rb") as fh:
        blob = fh.read()
    _, vocab = _parse_tokenizer(args.tokenizer)
    _, bridge_addr = _parse_predictor(args.predictor)
    text = decompress_bytes(blob, vocab=vocab, bridge_address=bridge_addr)
    out = args.out or (args.input[:-4] if args.input.endswith(".lmz")
                       else args.input + ".out")
    with open(out, "wb") as fh:
        fh.write(text)
    print(f"wrote {len(text)} bytes to {out}")
    return 0


def _cmd_estimate(args) -> int:
    text = _read_input(args)
    tokenizer, vocab = _parse_tokenizer(args.tokenizer)
    if tokenizer == "external":
        raise argparse.ArgumentTypeError("estimate supports byte and vocab tokenizers")
    if vocab is None:
        vocab = Vocabulary.bytes_only()
    predictor, bridge_addr = _parse_predictor(args.predictor)
    stream, _ = tokenize(text, vocab)
    if predictor == "external":
        from .bridge import connect

        session = connect(bridge_addr or "", memory=args.memory)
    else:
        session = make_session(predictor, vocab.size, memory=args.memory,
                               order=args.order)
    codecs = tuple(c for c in (args.codec or "").split(",") if c)
    metrics = measure_stream(stream, session, codecs=codecs, vocab=vocab,
                             deflate_baseline=args.baseline)
    print(f"n_chars={metrics.n_chars} n_tokens={metrics.n_tokens}")
    print(f"h_ub={metrics.h_ub_bpc:.4f} bpc "
          f"({metrics.h_ub_bits_per_token:.4f} bits/token)")
    print(f"mean_chars_per_token={float(mean_chars_per_token(stream)):.6f}")
    for codec, rho in metrics.rho_bpc.items():
        print(f"rho_{codec}={rho:.4f} bpc")
    return 0


def _cmd_bench(args) -> int:
    text = _read_input(args)
    memories = tuple(int(m) for m in str(args.memory).split(","))
    predictor, _ = _parse_predictor(args.predictor)
    if predictor == "external":
        raise argparse.ArgumentTypeError("bench drives built-in predictors only")
    config = BenchConfig(
        corpus=text,
        batch_size_tokens=args.batch_tokens,
        batch_count=args.batches,
        memories=memories,
        predictor=predictor,
        order=args.order,
        workers=args.workers,
    )
    result = run_bench(config)
    rendered = render_csv(result) if args.report == "csv" else render_table(result)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(rendered)
        print(f"wrote report to {args.out}")
    else:
        sys.stdout.write(rendered)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lmzip",
        description="predictor-driven lossless text compression toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("input", help="input file")
        p.add_argument("--tokenizer", default="byte",
                       help="byte, vocab:PATH, or external")
        p.add_argument("--predictor", default="adaptive",
                       help="uniform, adaptive, or external[:ADDR]")
        p.add_argument("--memory", type=int, default=64,
                       help="context window in tokens")
        p.add_argument("--order", type=int, default=3,
                       help="maximum context order of the adaptive model")
        p.add_argument("--preprocess-text8", action="store_true",
                       help="reduce input to lowercase letters and spaces first")
        p.add_argument("--out", help="output path")

    p = sub.add_parser("compress", help="compress a file into a container")
    common(p)
    p.add_argument("--codec", choices=("rank", "tbyt", "ac"), default="ac")
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("decompress", help="restore a container to its text")
    p.add_argument("input", help="container file")
    p.add_argument("--tokenizer", default="byte",
                   help="byte or vocab:PATH matching the container digest")
    p.add_argument("--predictor", default="adaptive",
                   help="pass external[:ADDR] when the container needs a bridge")
    p.add_argument("--out", help="output path")
    p.set_defaults(func=_cmd_decompress)

    p = sub.add_parser("estimate", help="entropy upper bound and ratios")
    common(p)
    p.add_argument("--codec", default="",
                   help="comma list of codecs to measure (rank,tbyt,ac)")
    p.add_argument("--baseline", action="store_true",
                   help="also report standalone DEFLATE on the input bytes")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("bench", help="batched benchmark with memory sweep")
    p.add_argument("input", help="corpus file")
    p.add_argument("--predictor", default="adaptive")
    p.add_argument("--order", type=int, default=3)
    p.add_argument("--memory", default="64",
                   help="memory value or comma list to sweep, e.g. 4,16,64")
    p.add_argument("--batch-tokens", type=int, default=100_000)
    p.add_argument("--batches", type=int, default=None,
                   help="limit on the number of batches")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--report", choices=("csv", "table"), default="table")
    p.add_argument("--preprocess-text8", action="store_true")
    p.add_argument("--out", help="report output path")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except argparse.ArgumentTypeError as exc:
        parser.error(str(exc))  # exits with code 2
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except LmzipError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    raise SystemExit(main())
