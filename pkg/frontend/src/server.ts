/**
 * Reference predictor server for the external-predictor wire protocol.
 *
 * One connection is served at a time with a strict request/response loop,
 * matching the epoch-at-a-time conditioning of the compression client.
 * The model is built deterministically at startup, so every process with
 * the same configuration answers identically; the hello frame advertises
 * the model tag clients pin in their containers.
 *
 *   node dist/server.js --listen 127.0.0.1:0      TCP, port printed
 *   node dist/server.js --stdio                   frames over stdio
 *
 * Options: --top-k N (sparse responses, 0 = dense), --max-memory M,
 * --train-bytes N, --seed N.
 */

import * as net from "net";

import { CausalByteModel, MODEL_ORDER, VOCAB_SIZE, WindowCounts } from "./model";
import {
  FRAME_DETOKENIZE,
  FRAME_ERROR,
  FRAME_HELLO,
  FRAME_PREDICT_REQ,
  FRAME_PREDICT_RESP,
  FRAME_TOKENIZE,
  FrameDecoder,
  PMF_TOTAL,
  PROTOCOL_VERSION,
  encodeFrame,
  packDenseResponse,
  packError,
  packHello,
  packSparseResponse,
  parsePredictRequest,
} from "./protocol";

export interface ServerConfig {
  listen: string | null; // host:port, port 0 for ephemeral; null = stdio
  topK: number;
  maxMemory: number;
  trainBytes: number;
  seed: number;
}

export const DEFAULT_SERVER: ServerConfig = {
  listen: "127.0.0.1:0",
  topK: 0,
  maxMemory: 8192,
  trainBytes: 400_000,
  seed: 777,
};

export function parseArgs(argv: string[]): ServerConfig {
  const config = { ...DEFAULT_SERVER };
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      const v = argv[++i];
      if (v === undefined) throw new Error(`${arg} needs a value`);
      return v;
    };
    if (arg === "--listen") config.listen = next();
    else if (arg === "--stdio") config.listen = null;
    else if (arg === "--top-k") config.topK = parseInt(next(), 10);
    else if (arg === "--max-memory") config.maxMemory = parseInt(next(), 10);
    else if (arg === "--train-bytes") config.trainBytes = parseInt(next(), 10);
    else if (arg === "--seed") config.seed = parseInt(next(), 10);
    else throw new Error(`unknown option ${arg}`);
  }
  return config;
}

/** Top-K sparse split of a dense PMF; ids ascending, ties by low id. */
export function sparseParts(
  weights: Uint32Array,
  topK: number,
): { ids: Uint32Array; listed: Uint32Array; rest: number } {
  const order = Array.from(weights.keys());
  order.sort((a, b) => (weights[a] === weights[b] ? a - b : weights[b] - weights[a]));
  const ids = Uint32Array.from(order.slice(0, topK).sort((a, b) => a - b));
  const listed = new Uint32Array(ids.length);
  let sum = 0;
  for (let i = 0; i < ids.length; i++) {
    listed[i] = weights[ids[i]];
    sum += listed[i];
  }
  return { ids, listed, rest: PMF_TOTAL - sum };
}

interface Sink {
  write(data: Buffer): void;
}

export class Connection {
  private decoder = new FrameDecoder();
  private local = new WindowCounts(MODEL_ORDER);

  constructor(
    private model: CausalByteModel,
    private config: ServerConfig,
    private sink: Sink,
    private onFatal: (err: Error) => void,
  ) {
    this.send(FRAME_HELLO, packHello({
      version: PROTOCOL_VERSION,
      vocabSize: VOCAB_SIZE,
      pmfTotal: PMF_TOTAL,
      maxMemory: config.maxMemory,
      modelTag: model.modelTag,
    }));
  }

  private send(type: number, body: Buffer): void {
    this.sink.write(encodeFrame(type, body));
  }

  push(chunk: Buffer): void {
    let frames;
    try {
      frames = this.decoder.push(chunk);
    } catch (err) {
      this.send(FRAME_ERROR, packError(String(err)));
      this.onFatal(err as Error);
      return;
    }
    for (const frame of frames) {
      try {
        this.handle(frame.type, frame.body);
      } catch (err) {
        this.send(FRAME_ERROR, packError(String(err)));
      }
    }
  }

  private handle(type: number, body: Buffer): void {
    if (type === FRAME_PREDICT_REQ) {
      const ctx = parsePredictRequest(body);
      if (ctx.length > this.config.maxMemory) {
        throw new Error(`context of ${ctx.length} exceeds max memory`);
      }
      for (const t of ctx) {
        if (t >= VOCAB_SIZE) throw new Error(`token ${t} out of range`);
      }
      this.local.sync(ctx);
      const weights = this.model.weightsFor(ctx, this.local);
      const k = this.config.topK;
      if (k > 0 && k < VOCAB_SIZE) {
        const { ids, listed, rest } = sparseParts(weights, k);
        this.send(FRAME_PREDICT_RESP, packSparseResponse(ids, listed, rest));
      } else {
        this.send(FRAME_PREDICT_RESP, packDenseResponse(weights));
      }
    } else if (type === FRAME_TOKENIZE) {
      // byte-level model: token id == byte value, one byte per token
      const n = body.length;
      const resp = Buffer.alloc(4 + 5 * n);
      resp.writeUInt32LE(n, 0);
      for (let i = 0; i < n; i++) {
        resp.writeUInt32LE(body[i], 4 + 4 * i);
        resp.writeUInt8(1, 4 + 4 * n + i);
      }
      this.send(FRAME_TOKENIZE, resp);
    } else if (type === FRAME_DETOKENIZE) {
      if (body.length < 4) throw new Error("detokenize request too short");
      const n = body.readUInt32LE(0);
      if (body.length !== 4 + 4 * n) throw new Error("detokenize size mismatch");
      const out = Buffer.alloc(n);
      for (let i = 0; i < n; i++) {
        const t = body.readUInt32LE(4 + 4 * i);
        if (t >= VOCAB_SIZE) throw new Error(`token ${t} out of range`);
        out[i] = t;
      }
      this.send(FRAME_DETOKENIZE, out);
    } else {
      throw new Error(`unsupported frame type 0x${type.toString(16)}`);
    }
  }
}

export function startTcpServer(
  model: CausalByteModel,
  config: ServerConfig,
  onReady: (address: string) => void,
): net.Server {
  const [host, portText] = (config.listen as string).split(":");
  const server = net.createServer((socket) => {
    socket.setNoDelay(true);
    const conn = new Connection(model, config, socket, () => socket.destroy());
    socket.on("data", (chunk: Buffer | string) =>
      conn.push(Buffer.isBuffer(chunk) ? chunk : Buffer.from(chunk)));
    socket.on("error", () => socket.destroy());
  });
  server.listen(parseInt(portText, 10), host, () => {
    const addr = server.address() as net.AddressInfo;
    onReady(`${addr.address}:${addr.port}`);
  });
  return server;
}

export function startStdio(model: CausalByteModel, config: ServerConfig): void {
  const conn = new Connection(model, config, process.stdout, () => process.exit(1));
  process.stdin.on("data", (chunk: Buffer | string) =>
    conn.push(Buffer.isBuffer(chunk) ? chunk : Buffer.from(chunk)));
  process.stdin.on("end", () => process.exit(0));
}

export function main(argv: string[]): void {
  const config = parseArgs(argv);
  const model = new CausalByteModel({
    trainBytes: config.trainBytes,
    seed: config.seed,
  });
  if (config.listen === null) {
    startStdio(model, config);
  } else {
    startTcpServer(model, config, (address) => {
      console.log(`listening ${address}`);
    });
  }
}

if (require.main === module) {
  main(process.argv.slice(2));
}
