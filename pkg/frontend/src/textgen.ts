/**
 * Deterministic English-like training text.
 *
 * The model trains itself at startup from this generator, so the server is
 * reproducible across processes and machines without shipping a counts
 * artifact.  Output alphabet is lowercase letters and single spaces.
 */

const FUNCTION_WORDS = (
  "the of and to a in is was that it for on as with he be at by had not " +
  "are but from or have an they which one you were her all she there " +
  "would their we him been has when who will no more if out so said what " +
  "up its about into than them can only other new some could time these " +
  "two may then do first any my now such like our over man me even most " +
  "made after also did many before must through years where much your way " +
  "down should because each just those people how too little good very"
).split(" ");

const CONTENT_WORDS = (
  "house garden winter summer morning evening river valley mountain forest " +
  "village market harbor island journey road traveler bridge tower gate " +
  "church bell horse wagon merchant silver grain bread cloth leather rope " +
  "candle hammer stone wall window door roof fire smoke ash water earth " +
  "iron copper gold glass timber wheel mill engine steam field meadow " +
  "branch leaf root seed harvest soil shore cloud storm rain wind frost " +
  "mist snow thunder sunlight shadow book letter page scholar library " +
  "school lesson master student history story legend song poem language " +
  "word name number record map science question answer reason thought " +
  "memory truth knowledge father mother brother sister child friend " +
  "neighbor stranger king queen soldier guard farmer fisherman hunter " +
  "doctor priest crowd voice heart courage fear hope sorrow joy anger " +
  "silence laughter promise honor work labor duty battle army enemy " +
  "victory peace treaty council law justice trial prison debt order " +
  "command message warning signal watch defense attack banner sword " +
  "shield arrow wine milk honey meat fish apple orchard cattle sheep " +
  "wool thread needle year month week day hour moment season century " +
  "beginning ending change growth fortune chance fate custom habit " +
  "festival ceremony dawn dusk midnight tomorrow yesterday future past " +
  "present elder captain sailor anchor tide wave coast compass chart " +
  "north south east west border kingdom province city capital camp tent"
).split(" ");

/** LCG (Numerical Recipes constants), 32-bit state, fully deterministic. */
class Lcg {
  private state: number;

  constructor(seed: number) {
    this.state = seed >>> 0;
  }

  next(): number {
    // state = state * 1664525 + 1013904223 mod 2^32, split to stay exact
    const s = this.state;
    const lo = (s & 0xffff) * 1664525;
    const hi = ((s >>> 16) * 1664525) & 0xffff;
    this.state = (((hi << 16) >>> 0) + lo + 1013904223) >>> 0;
    return this.state;
  }

  below(n: number): number {
    return this.next() % n;
  }

  /** Skewed index: min of several uniform draws, favoring low indices. */
  skewed(n: number, draws: number): number {
    let idx = this.below(n);
    for (let i = 1; i < draws; i++) {
      const other = this.below(n);
      if (other < idx) idx = other;
    }
    return idx;
  }
}

export function trainingText(nBytes: number, seed: number): Buffer {
  const rng = new Lcg(seed);
  const words: string[] = [];
  const topicSize = 40;
  let length = 0;
  let topicStart = 0;
  let topicLeft = 0;
  while (length < nBytes) {
    if (topicLeft <= 0) {
      topicStart = rng.below(CONTENT_WORDS.length - topicSize);
      topicLeft = 60 + rng.below(120);
    }
    const roll = rng.below(100);
    let word: string;
    if (roll < 44) {
      word = FUNCTION_WORDS[rng.skewed(FUNCTION_WORDS.length, 3)];
    } else if (roll < 82) {
      word = CONTENT_WORDS[topicStart + rng.skewed(topicSize, 2)];
    } else {
      word = CONTENT_WORDS[rng.skewed(CONTENT_WORDS.length, 3)];
    }
    words.push(word);
    length += word.length + 1;
    topicLeft -= 1;
  }
  return Buffer.from(words.join(" ").slice(0, nBytes), "ascii");
}
