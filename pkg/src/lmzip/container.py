"""Self-describing compressed container and the compress/decompress paths.

The header carries everything decompression needs beyond the vocabulary
file itself: codec, tokenizer identity (as a content digest), predictor
configuration, token/character counts, payload length, bit padding, and a
crc32 of the original text.  The crc is over the text rather than the
payload on purpose: a mismatched predictor can produce a payload that
parses fine but decodes to garbage, and the crc is what catches that
loudly.

Layout (little-endian):

    magic "LMZ1" | version u16 | codec u8 | tokenizer u8 | digest 32B |
    predictor u8 | memory u32 | order u8 | model_id (u16 len + utf-8) |
    n_tokens u64 | n_chars u64 | payload_len u64 | padding u8 | crc32 u32
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass

from .errors import BridgeError, CorruptStreamError, PredictorMismatchError
from .metrics import StreamMetrics, compression_ratio, weights_to_bits
from .predictor import make_session
from .rangecoder import ac_decode, ac_encode
from .rankcoder import decode_ranks, encode_ranks, from_ranks, to_ranks
from .tbyt import tbyt_decode, tbyt_encode
from .tokenizer import TokenStream, Vocabulary, detokenize_ids, tokenize

MAGIC = b"LMZ1"
FORMAT_VERSION = 1

CODECS = ("rank", "tbyt", "ac")
TOKENIZERS = ("byte", "vocab", "external")
PREDICTORS = ("uniform", "adaptive", "external")

_FIXED_HEAD = struct.Struct("<4sHBB32sBIBH")
_FIXED_TAIL = struct.Struct("<QQQBI")


@dataclass
class ContainerHeader:
    codec: str
    tokenizer: str
    vocab_digest: bytes
    predictor: str
    memory: int
    order: int
    model_id: str
    n_tokens: int
    n_chars: int
    payload_len: int
    padding_bits: int
    crc32: int
    format_version: int = FORMAT_VERSION

    def pack(self) -> bytes:
        model = self.model_id.encode("utf-8")
        head = _FIXED_HEAD.pack(
            MAGIC,
            self.format_version,
            CODECS.index(self.codec),
            TOKENIZERS.index(self.tokenizer),
            self.vocab_digest,
            PREDICTORS.index(self.predictor),
            self.memory,
            self.order,
            len(model),
        )
        tail = _FIXED_TAIL.pack(
            self.n_tokens, self.n_chars, self.payload_len, self.padding_bits,
            self.crc32,
        )
        return head + model + tail


def parse_header(blob: bytes) -> tuple[ContainerHeader, int]:
    """Parse and validate a header; returns it with the payload offset."""
    if len(blob) < _FIXED_HEAD.size:
        raise CorruptStreamError("container shorter than its fixed header")
    (magic, version, codec_id, tok_id, digest, pred_id, memory, order,
     model_len) = _FIXED_HEAD.unpack_from(blob)
    if magic != MAGIC:
        raise CorruptStreamError("bad magic; not a compressed container")
    if version != FORMAT_VERSION:
        raise CorruptStreamError(f"unsupported container version {version}")
    if codec_id >= len(CODECS) or tok_id >= len(TOKENIZERS) or pred_id >= len(PREDICTORS):
        raise CorruptStreamError("unknown codec, tokenizer, or predictor id")
    pos = _FIXED_HEAD.size
    if len(blob) < pos + model_len + _FIXED_TAIL.size:
        raise CorruptStreamError("container truncated inside the header")
    model_id = blob[pos : pos + model_len].decode("utf-8")
    pos += model_len
    n_tokens, n_chars, payload_len, padding, crc = _FIXED_TAIL.unpack_from(blob, pos)
    pos += _FIXED_TAIL.size
    header = ContainerHeader(
        codec=CODECS[codec_id],
        tokenizer=TOKENIZERS[tok_id],
        vocab_digest=digest,
        predictor=PREDICTORS[pred_id],
        memory=memory,
        order=order,
        model_id=model_id,
        n_tokens=n_tokens,
        n_chars=n_chars,
        payload_len=payload_len,
        padding_bits=padding,
        crc32=crc,
        format_version=version,
    )
    return header, pos


def _build_session(predictor: str, vocab_size: int, memory: int, order: int,
                   bridge_address: str | None, expect_tag: str | None = None):
    if predictor == "external":
        from . import bridge

        if not bridge_address:
            raise BridgeError(
                "external predictor requested but no bridge address configured"
            )
        session = bridge.connect(bridge_address, memory=memory or None)
        if expect_tag is not None and session.hello.model_tag != expect_tag:
            session.close()
            raise PredictorMismatchError(
                f"server model {session.hello.model_tag!r} does not match "
                f"container model {expect_tag!r}"
            )
        return session
    return make_session(predictor, vocab_size, memory=memory, order=order)


def compress_bytes(
    text: bytes,
    codec: str = "ac",
    tokenizer: str = "byte",
    vocab: Vocabulary | None = None,
    predictor: str = "adaptive",
    memory: int = 64,
    order: int = 3,
    bridge_address: str | None = None,
) -> tuple[bytes, StreamMetrics]:
    """Compress text into a container; returns (blob, stream metrics)."""
    if codec not in CODECS:
        raise ValueError(f"unknown codec {codec!r}")
    session = None
    if tokenizer == "byte":
        vocab = Vocabulary.bytes_only()
        digest = vocab.digest()
        stream, _ = tokenize(text, vocab)
        vocab_size = vocab.size
    elif tokenizer == "vocab":
        if vocab is None:
            raise ValueError("vocab tokenizer needs a vocabulary")
        digest = vocab.digest()
        stream, _ = tokenize(text, vocab)
        vocab_size = vocab.size
    elif tokenizer == "external":
        if predictor != "external":
            raise ValueError("external tokenizer requires the external predictor")
        session = _build_session("external", 0, memory, order, bridge_address)
        ids, lens = session.remote_tokenize(text)
        stream = TokenStream(ids, lens)
        digest = bytes(32)
        vocab_size = session.vocab_size
    else:
        raise ValueError(f"unknown tokenizer {tokenizer!r}")

    if predictor == "external":
        if session is None:
            session = _build_session("external", vocab_size, memory, order,
                                     bridge_address)
        model_id = session.hello.model_tag
        memory = session.memory
    else:
        session = _build_session(predictor, vocab_size, memory, order, None)
        model_id = ""

    weights: list[int] = []
    padding = 0
    if codec == "rank":
        payload = encode_ranks(to_ranks(stream, session, weights_out=weights))
    elif codec == "tbyt":
        payload, profile = tbyt_encode(stream, session, weights_out=weights)
        padding = profile.padding_bits
    else:
        payload = ac_encode(stream, session, weights_out=weights)

    header = ContainerHeader(
        codec=codec,
        tokenizer=tokenizer,
        vocab_digest=digest,
        predictor=predictor,
        memory=memory,
        order=order,
        model_id=model_id,
        n_tokens=stream.n_tokens,
        n_chars=stream.n_chars,
        payload_len=len(payload),
        padding_bits=padding,
        crc32=zlib.crc32(text) & 0xFFFFFFFF,
        format_version=FORMAT_VERSION,
    )
    n_chars = stream.n_chars
    metrics = StreamMetrics(
        n_chars=n_chars,
        n_tokens=stream.n_tokens,
        cross_entropy_bits=weights_to_bits(weights),
        rho_bpc={codec: compression_ratio(len(payload) * 8, n_chars)} if n_chars else {},
    )
    return header.pack() + payload, metrics


def decompress_bytes(
    blob: bytes,
    vocab: Vocabulary | None = None,
    bridge_address: str | None = None,
) -> bytes:
    """Restore the original text from a container; crc-verified."""
    header, offset = parse_header(blob)
    if len(blob) - offset < header.payload_len:
        raise CorruptStreamError("payload shorter than header declares")
    payload = blob[offset : offset + header.payload_len]

    session = None
    if header.tokenizer == "byte":
        vocab = Vocabulary.bytes_only()
        if vocab.digest() != header.vocab_digest:
            raise PredictorMismatchError("vocabulary digest mismatch")
        vocab_size = vocab.size
    elif header.tokenizer == "vocab":
        if vocab is None:
            raise PredictorMismatchError(
                "container was compressed with a vocabulary file; pass it to decompress"
            )
        if vocab.digest() != header.vocab_digest:
            raise PredictorMismatchError("vocabulary digest mismatch")
        vocab_size = vocab.size
    else:
        session = _build_session("external", 0, header.memory, header.order,
                                 bridge_address, expect_tag=header.model_id)
        vocab_size = session.vocab_size

    if header.predictor == "external":
        if session is None:
            session = _build_session("external", vocab_size, header.memory,
                                     header.order, bridge_address,
                                     expect_tag=header.model_id)
    else:
        session = _build_session(header.predictor, vocab_size, header.memory,
                                 header.order, None)

    if header.codec == "rank":
        ranks = decode_ranks(payload)
        if ranks.size != header.n_tokens:
            raise CorruptStreamError("rank count does not match header")
        ids = from_ranks(ranks, session)
    elif header.codec == "tbyt":
        ids = tbyt_decode(payload, session, header.n_tokens, header.padding_bits)
    else:
        ids = ac_decode(payload, session, header.n_tokens)

    if header.tokenizer == "external":
        text = session.remote_detokenize(ids)
    else:
        text = detokenize_ids(ids.tolist(), vocab)
    if len(text) != header.n_chars:
        raise CorruptStreamError("decoded length does not match header")
    if zlib.crc32(text) & 0xFFFFFFFF != header.crc32:
        raise CorruptStreamError("crc mismatch after decode")
    return text
