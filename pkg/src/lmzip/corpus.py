"""Deterministic English-like corpus synthesis for benchmarks and demos.

Output contains only lowercase letters and single spaces, the same shape
``preprocess_text8`` produces.  Words are drawn with Zipf-like frequencies
from an embedded vocabulary, with slowly rotating topic emphasis so the
text has local statistical structure without long verbatim repeats.  The
same (seed, size) pair always yields identical bytes.
"""

from __future__ import annotations

import random
from bisect import bisect
from itertools import accumulate

_FUNCTION_WORDS = (
    "the of and to a in is was that it for on as with he be at by had not "
    "are but from or have an they which one you were her all she there "
    "would their we him been has when who will no more if out so said what "
    "up its about into than them can only other new some could time these "
    "two may then do first any my now such like our over man me even most "
    "made after also did many before must through years where much your "
    "way down should because each just those people how too little good"
).split()

_TOPIC_WORDS = (
    # landscape and weather
    "river mountain valley forest meadow stone shore cloud storm rain wind "
    "winter summer autumn spring morning evening shadow sunlight frost mist "
    "snow thunder horizon field garden branch leaf root seed harvest soil "
    # town and trade
    "village market street bridge tower gate wall house roof window door "
    "church bell square lantern wagon horse merchant trader coin silver "
    "grain bread cloth leather barrel rope candle hammer anvil forge smith "
    # sea and travel
    "ship sail harbor island voyage captain sailor anchor tide wave coast "
    "compass chart journey road path traveler inn distance north south east "
    "west border kingdom province city capital frontier camp tent fire "
    # learning and record
    "book letter page ink scholar library school lesson master student "
    "history story legend song poem language word name number record scroll "
    "map science question answer reason thought memory truth knowledge art "
    # people and feeling
    "father mother brother sister child friend neighbor stranger king queen "
    "soldier guard farmer fisherman hunter doctor priest widow crowd voice "
    "heart courage fear hope sorrow joy anger silence laughter promise honor "
    # work and conflict
    "work labor duty battle army enemy victory defeat peace treaty council "
    "law justice crime trial prison debt tax order command message warning "
    "signal watch defense attack retreat siege banner sword shield arrow "
    # matter and craft
    "water earth iron copper gold glass clay brick timber plank wheel gear "
    "mill engine furnace steam smoke ash dust salt sugar wine milk honey "
    "meat fish apple orchard vineyard cattle sheep wool thread needle loom "
    # time and change
    "year month week day hour moment season century beginning ending change "
    "growth decline fortune chance fate custom habit festival ceremony dawn "
    "dusk midnight tomorrow yesterday future past present journeyman elder"
).split()


def _zipf_cumulative(n: int, skew: float) -> list[float]:
    return list(accumulate((i + 1.0) ** -skew for i in range(n)))


def synthetic_corpus(n_bytes: int, seed: int = 0) -> bytes:
    """Generate exactly n_bytes of lowercase English-like text."""
    if n_bytes <= 0:
        return b""
    rng = random.Random(seed)
    fn_cum = _zipf_cumulative(len(_FUNCTION_WORDS), 1.0)
    content = list(_TOPIC_WORDS)
    topic_size = 48
    topic_cum = _zipf_cumulative(topic_size, 0.7)
    global_cum = _zipf_cumulative(len(content), 0.9)

    out: list[str] = []
    length = 0
    sentence_left = 0
    topic_left = 0
    topic: list[str] = []
    while length < n_bytes:
        if topic_left <= 0:
            start = rng.randrange(len(content) - topic_size)
            topic = content[start : start + topic_size]
            topic_left = rng.randint(80, 200)
        if sentence_left <= 0:
            sentence_left = rng.randint(5, 14)
        roll = rng.random()
        if roll < 0.42:
            pool, cum = _FUNCTION_WORDS, fn_cum
        elif roll < 0.82:
            pool, cum = topic, topic_cum
        else:
            pool, cum = content, global_cum
        word = pool[bisect(cum, rng.random() * cum[-1])]
        out.append(word)
        length += len(word) + 1
        sentence_left -= 1
        topic_left -= 1
    text = " ".join(out).encode("ascii")
    return text[:n_bytes]


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="emit a synthetic benchmark corpus")
    parser.add_argument("--bytes", type=int, default=1_000_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    with open(args.out, "wb") as fh:
        fh.write(synthetic_corpus(args.bytes, args.seed))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
