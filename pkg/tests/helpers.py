"""Shared test scaffolding: scripted predictors and a fake bridge server."""

from __future__ import annotations

import socket
import struct
import threading

import numpy as np

from lmzip.bridge import (
    FRAME_DETOKENIZE,
    FRAME_ERROR,
    FRAME_HELLO,
    FRAME_PREDICT_REQ,
    FRAME_PREDICT_RESP,
    FRAME_TOKENIZE,
    PROTOCOL_VERSION,
    BridgeHello,
)
from lmzip.predictor import PMF_TOTAL, quantize_scores


class ScriptedModel:
    """Predictor that replays a fixed schedule of score vectors.

    Epoch i predicts from schedule[i]; if the schedule runs out the last
    entry repeats.  update() only advances the epoch.
    """

    model_id = "scripted"

    def __init__(self, schedule):
        self._pmfs = [quantize_scores(np.asarray(s, dtype=np.int64)) for s in schedule]
        self.vocab_size = self._pmfs[0].size
        self.memory = 0
        self.order = 0
        self._epoch = 0

    def predict(self):
        return self._pmfs[min(self._epoch, len(self._pmfs) - 1)]

    def update(self, token_id):
        self._epoch += 1


class FakeBridgeServer:
    """Single-connection-at-a-time TCP server speaking the bridge protocol.

    The model is a callable (context token list) -> integer weight vector
    summing to PMF_TOTAL.  ``mutate`` hooks let tests serve malformed
    frames on purpose.
    """

    def __init__(self, vocab_size=256, model=None, model_tag="fake-v1",
                 max_memory=1 << 16, sparse_top_k=0, version=PROTOCOL_VERSION,
                 pmf_total=PMF_TOTAL, mutate=None):
        self.vocab_size = vocab_size
        self.model = model or (lambda ctx: quantize_scores(
            np.ones(vocab_size, dtype=np.int64)).weights)
        self.model_tag = model_tag
        self.max_memory = max_memory
        self.sparse_top_k = sparse_top_k
        self.version = version
        self.pmf_total = pmf_total
        self.mutate = mutate
        self.request_log: list[tuple[int, ...]] = []
        self._sock = socket.create_server(("127.0.0.1", 0))
        self.address = "127.0.0.1:%d" % self._sock.getsockname()[1]
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._serve, daemon=True)
        self._thread.start()

    def _serve(self):
        self._sock.settimeout(0.2)
        while not self._stop.is_set():
            try:
                conn, _ = self._sock.accept()
            except socket.timeout:
                continue
            try:
                self._handle(conn)
            except (ConnectionError, OSError):
                pass
            finally:
                conn.close()

    def _send(self, conn, kind, body):
        conn.sendall(struct.pack("<IB", len(body) + 1, kind) + body)

    def _recv_frame(self, conn):
        head = b""
        while len(head) < 4:
            chunk = conn.recv(4 - len(head))
            if not chunk:
                return None
            head += chunk
        (length,) = struct.unpack("<I", head)
        body = b""
        while len(body) < length:
            chunk = conn.recv(length - len(body))
            if not chunk:
                return None
            body += chunk
        return body[0], body[1:]

    def _handle(self, conn):
        conn.settimeout(10)
        hello = BridgeHello(self.version, self.vocab_size, self.pmf_total,
                            self.max_memory, self.model_tag)
        self._send(conn, FRAME_HELLO, hello.pack())
        while not self._stop.is_set():
            frame = self._recv_frame(conn)
            if frame is None:
                return
            kind, body = frame
            if kind == FRAME_PREDICT_REQ:
                (n,) = struct.unpack_from("<I", body)
                ctx = tuple(np.frombuffer(body, dtype="<u4", offset=4, count=n).tolist())
                self.request_log.append(ctx)
                weights = np.asarray(self.model(list(ctx)), dtype=np.int64)
                resp = self._predict_response(weights)
                if self.mutate:
                    resp = self.mutate(resp)
                self._send(conn, FRAME_PREDICT_RESP, resp)
            elif kind == FRAME_TOKENIZE:
                ids = np.frombuffer(body, dtype=np.uint8).astype("<u4")
                resp = struct.pack("<I", ids.size) + ids.tobytes() + bytes([1] * ids.size)
                self._send(conn, FRAME_TOKENIZE, resp)
            elif kind == FRAME_DETOKENIZE:
                (n,) = struct.unpack_from("<I", body)
                ids = np.frombuffer(body, dtype="<u4", offset=4, count=n)
                self._send(conn, FRAME_DETOKENIZE, ids.astype(np.uint8).tobytes())
            else:
                self._send(conn, FRAME_ERROR, b"unsupported frame")
                return

    def _predict_response(self, weights):
        k = self.sparse_top_k
        if k and k < self.vocab_size:
            top = np.sort(np.argsort(-weights, kind="stable")[:k])
            listed = weights[top]
            rest = int(weights.sum() - listed.sum())
            body = bytearray([1])
            body += struct.pack("<I", k)
            pairs = np.empty(2 * k, dtype="<u4")
            pairs[0::2] = top
            pairs[1::2] = listed
            body += pairs.tobytes()
            body += struct.pack("<I", rest)
            return bytes(body)
        return bytes([0]) + weights.astype("<u4").tobytes()

    def close(self):
        self._stop.set()
        self._thread.join(timeout=5)
        self._sock.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
