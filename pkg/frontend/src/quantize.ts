/**
 * Deterministic fixed-point PMF quantization.
 *
 * weight[t] = 1 + floor(score[t] * (PMF_TOTAL - D) / S) with S the score
 * sum, then the leftover mass goes one unit each to the largest division
 * remainders, ties broken by ascending token id.  BigInt keeps the
 * products exact whatever the score magnitudes.
 */

import { PMF_TOTAL } from "./protocol";

export function quantizeScores(scores: ArrayLike<number>): Uint32Array {
  const d = scores.length;
  if (d < 1) throw new Error("no scores");
  if (d > PMF_TOTAL / 2) throw new Error("vocabulary too large for PMF");
  let allZero = true;
  for (let i = 0; i < d; i++) {
    if (scores[i] < 0) throw new Error("negative score");
    if (scores[i] !== 0) allZero = false;
  }
  const span = BigInt(PMF_TOTAL - d);
  let total = 0n;
  const vals = new Array<bigint>(d);
  for (let i = 0; i < d; i++) {
    const v = BigInt(allZero ? 1 : Math.floor(scores[i]));
    vals[i] = v;
    total += v;
  }
  const weights = new Uint32Array(d);
  const rems = new Array<bigint>(d);
  let assigned = 0;
  for (let i = 0; i < d; i++) {
    const prod = vals[i] * span;
    const q = prod / total;
    weights[i] = 1 + Number(q);
    rems[i] = prod - q * total;
    assigned += weights[i];
  }
  let deficit = PMF_TOTAL - assigned;
  if (deficit > 0) {
    const order = Array.from({ length: d }, (_, i) => i);
    order.sort((a, b) => (rems[a] === rems[b] ? a - b : rems[b] > rems[a] ? 1 : -1));
    for (let i = 0; i < deficit; i++) weights[order[i]] += 1;
  } else if (deficit < 0) {
    throw new Error("quantizer overshot the PMF total");
  }
  return weights;
}
