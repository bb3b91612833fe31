"""Client for the external-predictor wire protocol.

A remote model server is presented as an ordinary predictor session: the
client sends the current context window, receives a quantized PMF (dense
or sparse), validates it, and hands it to the codecs.  The transport is
any reliable byte stream; TCP addresses look like ``host:port`` and
``stdio:<command>`` spawns the server as a subprocess and speaks over its
stdin/stdout.

Frames are length-prefixed little-endian binary:

    u32 body length | u8 frame type | payload

    0x01 hello            version u16, D u32, pmf_total u32,
                          max_memory u32, tag_len u16, tag utf-8
    0x02 predict request  ctx_len u32, ctx_len x u32 token ids (oldest first)
    0x03 predict response mode u8; dense (0): D x u32 weights;
                          sparse (1): count u32, count x (id u32, w u32),
                          rest_weight u32
    0x04 tokenize         request: raw text; response: count u32,
                          count x u32 ids, count x u8 byte lengths
    0x05 detokenize       request: count u32, count x u32 ids;
                          response: raw text
    0x7F error            utf-8 message

The server speaks first: one hello frame immediately after the connection
opens.  Requests are strictly serial (no pipelining), matching the
epoch-at-a-time conditioning of the codecs.
"""

from __future__ import annotations

import shlex
import socket
import struct
import subprocess

import numpy as np

from .errors import BridgeError
from .predictor import PMF_TOTAL, QuantizedPmf

PROTOCOL_VERSION = 1

FRAME_HELLO = 0x01
FRAME_PREDICT_REQ = 0x02
FRAME_PREDICT_RESP = 0x03
FRAME_TOKENIZE = 0x04
FRAME_DETOKENIZE = 0x05
FRAME_ERROR = 0x7F

_MAX_FRAME = 1 << 28  # hard parse limit; a dense 32k-vocab PMF is ~128 KiB

DEFAULT_TIMEOUT = 60.0


class _TcpTransport:
    def __init__(self, host: str, port: int, timeout: float):
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise BridgeError(f"cannot reach predictor at {host}:{port}: {exc}") from exc
        self._sock.settimeout(timeout)

    def write(self, data: bytes) -> None:
        try:
            self._sock.sendall(data)
        except OSError as exc:
            raise BridgeError(f"bridge write failed: {exc}") from exc

    def read_exact(self, n: int) -> bytes:
        chunks = []
        remaining = n
        try:
            while remaining:
                chunk = self._sock.recv(remaining)
                if not chunk:
                    raise BridgeError("bridge connection closed mid-frame")
                chunks.append(chunk)
                remaining -= len(chunk)
        except socket.timeout as exc:
            raise BridgeError("bridge read timed out") from exc
        except OSError as exc:
            raise BridgeError(f"bridge read failed: {exc}") from exc
        return b"".join(chunks)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class _StdioTransport:
    def __init__(self, command: str):
        try:
            self._proc = subprocess.Popen(
                shlex.split(command),
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
        except OSError as exc:
            raise BridgeError(f"cannot spawn predictor process: {exc}") from exc

    def write(self, data: bytes) -> None:
        try:
            self._proc.stdin.write(data)
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise BridgeError(f"bridge write failed: {exc}") from exc

    def read_exact(self, n: int) -> bytes:
        data = self._proc.stdout.read(n)
        if data is None or len(data) != n:
            raise BridgeError("bridge process closed mid-frame")
        return data

    def close(self) -> None:
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        self._proc.terminate()
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()


def _open_transport(address: str, timeout: float):
    if address.startswith("stdio:"):
        return _StdioTransport(address[len("stdio:") :])
    host, _, port = address.rpartition(":")
    if not host or not port.isdigit():
        raise BridgeError(f"malformed bridge address {address!r}")
    return _TcpTransport(host, int(port), timeout)


def write_frame(transport, frame_type: int, body: bytes = b"") -> None:
    transport.write(struct.pack("<IB", len(body) + 1, frame_type) + body)


def read_frame(transport) -> tuple[int, bytes]:
    """Read one full frame; never yields a partial parse."""
    (length,) = struct.unpack("<I", transport.read_exact(4))
    if not 1 <= length <= _MAX_FRAME:
        raise BridgeError(f"invalid frame length {length}")
    body = transport.read_exact(length)
    return body[0], body[1:]


class BridgeHello:
    """Server banner: protocol and model identity."""

    def __init__(self, version: int, vocab_size: int, pmf_total: int,
                 max_memory: int, model_tag: str):
        self.version = version
        self.vocab_size = vocab_size
        self.pmf_total = pmf_total
        self.max_memory = max_memory
        self.model_tag = model_tag

    @classmethod
    def parse(cls, body: bytes) -> "BridgeHello":
        if len(body) < 16:
            raise BridgeError("hello frame too short")
        version, d, pmf_total, max_memory, tag_len = struct.unpack_from("<HIIIH", body)
        tag = body[16 : 16 + tag_len]
        if len(tag) != tag_len:
            raise BridgeError("hello tag truncated")
        return cls(version, d, pmf_total, max_memory, tag.decode("utf-8"))

    def pack(self) -> bytes:
        tag = self.model_tag.encode("utf-8")
        return struct.pack(
            "<HIIIH", self.version, self.vocab_size, self.pmf_total,
            self.max_memory, len(tag),
        ) + tag


def expand_sparse(vocab_size: int, ids: np.ndarray, listed: np.ndarray, rest: int) -> np.ndarray:
    """Expand a sparse PMF response deterministically.

    The rest mass is floor-divided over the unlisted token ids; the
    remainder goes one unit each to the lowest unlisted ids.
    """
    if ids.size:
        if int(ids.min()) < 0 or int(ids.max()) >= vocab_size:
            raise BridgeError("sparse response id out of range")
        if ids.size > 1 and not (np.diff(ids) > 0).all():
            raise BridgeError("sparse response ids not strictly increasing")
        if int(listed.min()) < 1:
            raise BridgeError("sparse response contains zero weight")
    weights = np.zeros(vocab_size, dtype=np.int64)
    weights[ids] = listed
    unlisted = np.flatnonzero(weights == 0)
    if unlisted.size == 0:
        if rest != 0:
            raise BridgeError("rest weight with no unlisted tokens")
        return weights
    base, extra = divmod(rest, int(unlisted.size))
    if base < 1:
        raise BridgeError("rest weight too small to keep every token codable")
    weights[unlisted] = base
    if extra:
        weights[unlisted[:extra]] += 1
    return weights


class BridgeSession:
    """Predictor session served by a remote model over the wire protocol."""

    model_id = "external"

    def __init__(self, address: str, memory: int | None = None,
                 timeout: float = DEFAULT_TIMEOUT):
        self.address = address
        self._transport = _open_transport(address, timeout)
        kind, body = read_frame(self._transport)
        if kind == FRAME_ERROR:
            raise BridgeError(f"server error: {body.decode('utf-8', 'replace')}")
        if kind != FRAME_HELLO:
            raise BridgeError(f"expected hello frame, got type 0x{kind:02x}")
        hello = BridgeHello.parse(body)
        if hello.version != PROTOCOL_VERSION:
            raise BridgeError(f"protocol version {hello.version} not supported")
        if hello.pmf_total != PMF_TOTAL:
            raise BridgeError(
                f"server PMF total {hello.pmf_total} does not match {PMF_TOTAL}"
            )
        if hello.vocab_size < 2:
            raise BridgeError("server vocabulary too small")
        self.hello = hello
        self.vocab_size = hello.vocab_size
        self.memory = min(memory, hello.max_memory) if memory else hello.max_memory
        self.order = 0
        self._window: list[int] = []
        self._pmf: QuantizedPmf | None = None

    # -- predictor session surface --

    def predict(self) -> QuantizedPmf:
        if self._pmf is None:
            ctx = self._window
            body = struct.pack("<I", len(ctx)) + np.asarray(ctx, dtype="<u4").tobytes()
            write_frame(self._transport, FRAME_PREDICT_REQ, body)
            self._pmf = self._parse_predict_response()
        return self._pmf

    def update(self, token_id: int) -> None:
        if not 0 <= token_id < self.vocab_size:
            raise BridgeError("update token out of range")
        self._window.append(token_id)
        if len(self._window) > self.memory:
            del self._window[: len(self._window) - self.memory]
        self._pmf = None

    def _parse_predict_response(self) -> QuantizedPmf:
        kind, body = read_frame(self._transport)
        if kind == FRAME_ERROR:
            raise BridgeError(f"server error: {body.decode('utf-8', 'replace')}")
        if kind != FRAME_PREDICT_RESP:
            raise BridgeError(f"expected predict response, got type 0x{kind:02x}")
        if not body:
            raise BridgeError("empty predict response")
        mode = body[0]
        d = self.vocab_size
        if mode == 0:
            if len(body) != 1 + 4 * d:
                raise BridgeError("dense response has wrong size")
            weights = np.frombuffer(body, dtype="<u4", offset=1).astype(np.int64)
        elif mode == 1:
            if len(body) < 5:
                raise BridgeError("sparse response truncated")
            (count,) = struct.unpack_from("<I", body, 1)
            need = 5 + 8 * count + 4
            if len(body) != need:
                raise BridgeError("sparse response has wrong size")
            pairs = np.frombuffer(body, dtype="<u4", offset=5, count=2 * count)
            (rest,) = struct.unpack_from("<I", body, 5 + 8 * count)
            weights = expand_sparse(
                d, pairs[0::2].astype(np.int64), pairs[1::2].astype(np.int64), rest
            )
        else:
            raise BridgeError(f"unknown predict response mode {mode}")
        if int(weights.sum()) != PMF_TOTAL:
            raise BridgeError("response weights do not sum to PMF total")
        if int(weights.min()) < 1:
            raise BridgeError("response contains a zero weight")
        return QuantizedPmf(weights, _checked=True)

    # -- remote tokenizer surface --

    def remote_tokenize(self, text: bytes) -> tuple[np.ndarray, np.ndarray]:
        write_frame(self._transport, FRAME_TOKENIZE, text)
        kind, body = read_frame(self._transport)
        if kind == FRAME_ERROR:
            raise BridgeError(f"server error: {body.decode('utf-8', 'replace')}")
        if kind != FRAME_TOKENIZE:
            raise BridgeError(f"expected tokenize response, got type 0x{kind:02x}")
        (count,) = struct.unpack_from("<I", body)
        if len(body) != 4 + 5 * count:
            raise BridgeError("tokenize response has wrong size")
        ids = np.frombuffer(body, dtype="<u4", offset=4, count=count).astype(np.int32)
        lens = np.frombuffer(body, dtype=np.uint8, offset=4 + 4 * count).astype(np.int32)
        return ids, lens

    def remote_detokenize(self, ids) -> bytes:
        arr = np.asarray(ids, dtype="<u4")
        write_frame(
            self._transport, FRAME_DETOKENIZE,
            struct.pack("<I", arr.size) + arr.tobytes(),
        )
        kind, body = read_frame(self._transport)
        if kind == FRAME_ERROR:
            raise BridgeError(f"server error: {body.decode('utf-8', 'replace')}")
        if kind != FRAME_DETOKENIZE:
            raise BridgeError(f"expected detokenize response, got type 0x{kind:02x}")
        return body

    def close(self) -> None:
        self._transport.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def connect(address: str, memory: int | None = None,
            timeout: float = DEFAULT_TIMEOUT) -> BridgeSession:
    """Open a session against a predictor server and validate its hello."""
    return BridgeSession(address, memory=memory, timeout=timeout)
