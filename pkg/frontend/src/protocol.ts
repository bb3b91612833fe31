/**
 * Wire protocol: length-prefixed little-endian binary frames.
 *
 * Layout: u32 body length | u8 frame type | payload.  The server banners a
 * hello frame on connect; afterwards it is strictly one response per
 * request, in order.
 */

export const PROTOCOL_VERSION = 1;
export const PMF_TOTAL = 1 << 24;

export const FRAME_HELLO = 0x01;
export const FRAME_PREDICT_REQ = 0x02;
export const FRAME_PREDICT_RESP = 0x03;
export const FRAME_TOKENIZE = 0x04;
export const FRAME_DETOKENIZE = 0x05;
export const FRAME_ERROR = 0x7f;

const MAX_FRAME = 1 << 28;

export function encodeFrame(type: number, body: Buffer): Buffer {
  const head = Buffer.alloc(5);
  head.writeUInt32LE(body.length + 1, 0);
  head.writeUInt8(type, 4);
  return Buffer.concat([head, body]);
}

export interface Frame {
  type: number;
  body: Buffer;
}

/** Incremental frame splitter; never exposes a partial frame. */
export class FrameDecoder {
  private buf: Buffer = Buffer.alloc(0);

  push(chunk: Buffer): Frame[] {
    this.buf = this.buf.length ? Buffer.concat([this.buf, chunk]) : chunk;
    const frames: Frame[] = [];
    for (;;) {
      if (this.buf.length < 4) break;
      const length = this.buf.readUInt32LE(0);
      if (length < 1 || length > MAX_FRAME) {
        throw new Error(`invalid frame length ${length}`);
      }
      if (this.buf.length < 4 + length) break;
      const body = this.buf.subarray(4, 4 + length);
      frames.push({ type: body[0], body: body.subarray(1) });
      this.buf = this.buf.subarray(4 + length);
    }
    return frames;
  }
}

export interface Hello {
  version: number;
  vocabSize: number;
  pmfTotal: number;
  maxMemory: number;
  modelTag: string;
}

export function packHello(h: Hello): Buffer {
  const tag = Buffer.from(h.modelTag, "utf-8");
  const body = Buffer.alloc(16 + tag.length);
  body.writeUInt16LE(h.version, 0);
  body.writeUInt32LE(h.vocabSize, 2);
  body.writeUInt32LE(h.pmfTotal, 6);
  body.writeUInt32LE(h.maxMemory, 10);
  body.writeUInt16LE(tag.length, 14);
  tag.copy(body, 16);
  return body;
}

export function parseHello(body: Buffer): Hello {
  if (body.length < 16) throw new Error("hello frame too short");
  const tagLen = body.readUInt16LE(14);
  if (body.length < 16 + tagLen) throw new Error("hello tag truncated");
  return {
    version: body.readUInt16LE(0),
    vocabSize: body.readUInt32LE(2),
    pmfTotal: body.readUInt32LE(6),
    maxMemory: body.readUInt32LE(10),
    modelTag: body.subarray(16, 16 + tagLen).toString("utf-8"),
  };
}

export function parsePredictRequest(body: Buffer): number[] {
  if (body.length < 4) throw new Error("predict request too short");
  const n = body.readUInt32LE(0);
  if (body.length !== 4 + 4 * n) throw new Error("predict request size mismatch");
  const ctx = new Array<number>(n);
  for (let i = 0; i < n; i++) ctx[i] = body.readUInt32LE(4 + 4 * i);
  return ctx;
}

export function packDenseResponse(weights: Uint32Array): Buffer {
  const body = Buffer.alloc(1 + 4 * weights.length);
  body.writeUInt8(0, 0);
  for (let i = 0; i < weights.length; i++) {
    body.writeUInt32LE(weights[i], 1 + 4 * i);
  }
  return body;
}

/**
 * Sparse response: the given ids (strictly increasing) carry their exact
 * weights; the receiver spreads the rest by floor division with the
 * remainder going to the lowest unlisted ids.
 */
export function packSparseResponse(
  ids: Uint32Array,
  listed: Uint32Array,
  rest: number,
): Buffer {
  const count = ids.length;
  const body = Buffer.alloc(1 + 4 + 8 * count + 4);
  body.writeUInt8(1, 0);
  body.writeUInt32LE(count, 1);
  for (let i = 0; i < count; i++) {
    body.writeUInt32LE(ids[i], 5 + 8 * i);
    body.writeUInt32LE(listed[i], 9 + 8 * i);
  }
  body.writeUInt32LE(rest, 5 + 8 * count);
  return body;
}

export function packError(message: string): Buffer {
  return Buffer.from(message, "utf-8");
}
