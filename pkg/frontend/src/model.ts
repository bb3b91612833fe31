/**
 * Causal byte model: pretrained context counts blended with counts taken
 * from the request context itself.
 *
 * score(t) = 1 + sum over orders j of 8^j * (pre_j(ctx_j, t)
 *                                            + 16 * local_j(ctx_j, t))
 *
 * where ctx_j is the last j bytes of the context and local_j counts the
 * (context, next byte) pairs inside the request window only.  Everything
 * is integer arithmetic over deterministic tables, so a given context maps
 * to exactly one PMF, in any process, forever: the property the decode
 * side of the wire protocol relies on.
 */

import { quantizeScores } from "./quantize";
import { trainingText } from "./textgen";

export const VOCAB_SIZE = 256;
export const MODEL_ORDER = 5;
const ORDER_MULT = [1, 8, 64, 512, 4096, 32768];
const LOCAL_WEIGHT = 16;

/** Pack up to 5 context bytes and their length into one integer key. */
function ctxKey(ctx: number[], end: number, j: number): number {
  let key = 0;
  for (let i = end - j; i < end; i++) key = key * 256 + ctx[i];
  return key;
}

type CountTable = Map<number, Map<number, number>>;

function bump(table: CountTable, key: number, token: number, step: number): void {
  let row = table.get(key);
  if (row === undefined) {
    row = new Map();
    table.set(key, row);
  }
  const next = (row.get(token) ?? 0) + step;
  if (next === 0) {
    row.delete(token);
    if (row.size === 0) table.delete(key);
  } else {
    row.set(token, next);
  }
}

/** Sliding-window counts over a token sequence, maintained incrementally. */
export class WindowCounts {
  readonly order0 = new Int32Array(VOCAB_SIZE);
  readonly tables: CountTable[] = [];
  private window: number[] = [];

  constructor(private maxOrder: number) {
    for (let j = 0; j <= maxOrder; j++) this.tables.push(new Map());
  }

  /** Counts must equal a fresh build over exactly this context. */
  sync(ctx: number[]): void {
    const w = this.window;
    const n = ctx.length;
    if (n === w.length + 1 && prefixEqual(w, ctx, w.length)) {
      this.pushLast(ctx);
    } else if (n >= 1 && n === w.length && shiftedByOne(w, ctx)) {
      this.dropOldest();
      this.pushLast(ctx);
    } else if (!(n === w.length && prefixEqual(w, ctx, n))) {
      this.rebuild(ctx);
    }
  }

  private pushLast(ctx: number[]): void {
    const pos = ctx.length - 1;
    const t = ctx[pos];
    this.order0[t] += 1;
    for (let j = 1; j <= this.maxOrder && j <= pos; j++) {
      bump(this.tables[j], ctxKey(ctx, pos, j), t, 1);
    }
    this.window = ctx.slice();
  }

  private dropOldest(): void {
    // Removing the window head invalidates exactly the pairs whose
    // context would reach past the new start: one pair per order.
    const w = this.window;
    this.order0[w[0]] -= 1;
    for (let j = 1; j <= this.maxOrder && j < w.length; j++) {
      bump(this.tables[j], ctxKey(w, j, j), w[j], -1);
    }
    // careful: pair at order j is (w[0..j-1] -> w[j]); the target byte of
    // the order-0 pair is w[0] itself
    this.window = w.slice(1);
  }

  private rebuild(ctx: number[]): void {
    this.order0.fill(0);
    for (let j = 1; j <= this.maxOrder; j++) this.tables[j].clear();
    this.window = [];
    for (let i = 0; i < ctx.length; i++) {
      this.pushLast(ctx.slice(0, i + 1));
    }
  }
}

function prefixEqual(w: number[], ctx: number[], n: number): boolean {
  for (let i = 0; i < n; i++) if (w[i] !== ctx[i]) return false;
  return true;
}

function shiftedByOne(w: number[], ctx: number[]): boolean {
  for (let i = 1; i < w.length; i++) if (w[i] !== ctx[i - 1]) return false;
  return true;
}

export interface ModelConfig {
  trainBytes: number;
  seed: number;
}

export const DEFAULT_CONFIG: ModelConfig = { trainBytes: 400_000, seed: 777 };

export class CausalByteModel {
  readonly modelTag: string;
  private pre0 = new Int32Array(VOCAB_SIZE);
  private preTables: CountTable[] = [];

  constructor(config: ModelConfig = DEFAULT_CONFIG) {
    this.modelTag = `ctxmix-k${MODEL_ORDER}-v1:seed${config.seed}:train${config.trainBytes}`;
    for (let j = 0; j <= MODEL_ORDER; j++) this.preTables.push(new Map());
    const text = trainingText(config.trainBytes, config.seed);
    const ctx: number[] = Array.from(text.values());
    for (let i = 0; i < ctx.length; i++) {
      this.pre0[ctx[i]] += 1;
      for (let j = 1; j <= MODEL_ORDER && j <= i; j++) {
        bump(this.preTables[j], ctxKey(ctx, i, j), ctx[i], 1);
      }
    }
  }

  /**
   * Weights for the next byte after `ctx`.  `local` must already be
   * synced to `ctx`; passing none builds the window counts from scratch.
   */
  weightsFor(ctx: number[], local?: WindowCounts): Uint32Array {
    let counts = local;
    if (counts === undefined) {
      counts = new WindowCounts(MODEL_ORDER);
      counts.sync(ctx);
    }
    const scores = new Float64Array(VOCAB_SIZE);
    for (let t = 0; t < VOCAB_SIZE; t++) {
      scores[t] = 1 + this.pre0[t] + LOCAL_WEIGHT * counts.order0[t];
    }
    const n = ctx.length;
    for (let j = 1; j <= MODEL_ORDER && j <= n; j++) {
      const key = ctxKey(ctx, n, j);
      const mult = ORDER_MULT[j];
      const pre = this.preTables[j].get(key);
      if (pre !== undefined) {
        for (const [t, c] of pre) scores[t] += mult * c;
      }
      const loc = counts.tables[j].get(key);
      if (loc !== undefined) {
        for (const [t, c] of loc) scores[t] += mult * LOCAL_WEIGHT * c;
      }
    }
    return quantizeScores(scores);
  }
}
