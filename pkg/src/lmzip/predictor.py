"""Next-token predictors and the fixed-point PMF they all emit.

Every predictor is a session object with two methods:

``predict()``
    returns the :class:`QuantizedPmf` for the next token.  Calling it again
    without an intervening ``update`` must return identical weights.
``update(token_id)``
    tells the session which token actually occurred.  The encoder and the
    decoder drive their sessions identically, so both sides see the same
    PMF sequence; that symmetry is the whole correctness argument of the
    codecs built on top.

All weights are integers summing to ``PMF_TOTAL`` with a floor of 1, so
every token is codable and nothing downstream ever touches floating point.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidPmfError, VocabularyTooLargeError

PMF_TOTAL = 1 << 24

# Dense order-1 count tables are only worth it for small alphabets; beyond
# this the (D x D) array would dwarf the sparse representation.
_DENSE_ORDER1_LIMIT = 1024


class QuantizedPmf:
    """Integer weight vector over the vocabulary, summing to PMF_TOTAL.

    ``cache`` holds per-PMF derived products (cumulative intervals, rank
    permutations, canonical codes).  Predictors that return the same object
    across epochs let the codecs reuse those products for free.
    """

    __slots__ = ("weights", "cache")

    def __init__(self, weights: np.ndarray, _checked: bool = False):
        weights = np.asarray(weights, dtype=np.int64)
        if not _checked:
            if weights.size < 1:
                raise InvalidPmfError("empty weight vector")
            if int(weights.min()) < 1:
                raise InvalidPmfError("weight below 1")
            if int(weights.sum()) != PMF_TOTAL:
                raise InvalidPmfError("weights do not sum to PMF total")
        self.weights = weights
        self.cache: dict = {}

    @property
    def size(self) -> int:
        return int(self.weights.size)

    def cumulative(self) -> np.ndarray:
        """Length D+1 cumulative weights: the interval of token t is
        [cum[t], cum[t+1]) and the intervals partition [0, PMF_TOTAL)."""
        cum = self.cache.get("cum")
        if cum is None:
            cum = np.zeros(self.weights.size + 1, dtype=np.int64)
            np.cumsum(self.weights, out=cum[1:])
            self.cache["cum"] = cum
        return cum


def quantize_scores(scores, _trusted: bool = False, _max_hint: int | None = None) -> QuantizedPmf:
    """Deterministically turn non-negative integer scores into a PMF.

    weight_t = 1 + floor(score_t * (PMF_TOTAL - D) / S) with S the score
    sum; the remaining mass is handed out one unit each to the tokens with
    the largest division remainders, ties broken by ascending token id.
    An all-zero score vector is treated as all ones.

    ``_trusted`` skips the non-negativity scan and ``_max_hint`` the max
    scan, for the one caller per token that constructs scores itself and
    tracks an upper bound incrementally.
    """
    arr = np.asarray(scores, dtype=np.int64)
    d = int(arr.size)
    if d < 1:
        raise InvalidPmfError("no scores")
    if d > PMF_TOTAL // 2:
        raise VocabularyTooLargeError(
            f"vocabulary of {d} tokens exceeds PMF capacity {PMF_TOTAL // 2}"
        )
    if not _trusted and int(arr.min()) < 0:
        raise InvalidPmfError("negative score")
    top = _max_hint if _max_hint is not None else int(arr.max())
    if top == 0:
        arr = np.ones(d, dtype=np.int64)
        top = 1
    span = PMF_TOTAL - d
    if top <= (1 << 62) // span and top * d <= (1 << 62):
        total = int(arr.sum())
        prod = arr * span
        weights, rem = np.divmod(prod, total)
        weights += 1
        deficit = PMF_TOTAL - int(weights.sum())
        if deficit:
            # Bump the `deficit` largest remainders; ties go to the lowest
            # token ids.  Partition finds the threshold in O(D).
            kth = np.partition(rem, d - deficit)[d - deficit]
            above = rem > kth
            weights[above] += 1
            need = deficit - int(np.count_nonzero(above))
            if need > 0:
                ties = np.nonzero(rem == kth)[0][:need]
                assert ties.size == need, "remainder distribution out of balance"
                weights[ties] += 1
            elif need < 0:
                raise AssertionError("remainder distribution overshot")
    else:
        # Exact big-integer path for scores too large for int64 products.
        vals = [int(v) for v in arr.tolist()]
        total = sum(vals)
        weights_l = [1 + v * span // total for v in vals]
        rems = [v * span % total for v in vals]
        deficit = PMF_TOTAL - sum(weights_l)
        for t in sorted(range(d), key=lambda t: (-rems[t], t))[:deficit]:
            weights_l[t] += 1
        weights = np.asarray(weights_l, dtype=np.int64)
    return QuantizedPmf(weights, _checked=True)


def _validated(pmf: QuantizedPmf) -> QuantizedPmf:
    # Guard on every predict.  Minimum weight 1 holds by construction
    # (1 + non-negative floor, bumps only add), so one reduction suffices.
    assert int(pmf.weights.sum()) == PMF_TOTAL, "PMF mass does not sum to total"
    return pmf


class UniformModel:
    """Every token equally likely; prediction never changes."""

    model_id = "uniform"

    def __init__(self, vocab_size: int, memory: int = 0, order: int = 0):
        self.vocab_size = vocab_size
        self.memory = memory
        self.order = 0
        self._pmf = _validated(quantize_scores(np.ones(vocab_size, dtype=np.int64)))

    def predict(self) -> QuantizedPmf:
        return self._pmf

    def update(self, token_id: int) -> None:
        pass


class FixedModel:
    """Static predictor pinned to one score vector.

    Useful as an oracle: a memoryless source with known probabilities gets
    a matched predictor whose cross entropy equals the source entropy.
    """

    model_id = "fixed"

    def __init__(self, scores, memory: int = 0):
        self.memory = memory
        self.order = 0
        self._pmf = _validated(quantize_scores(scores))
        self.vocab_size = self._pmf.size

    def predict(self) -> QuantizedPmf:
        return self._pmf

    def update(self, token_id: int) -> None:
        pass


class AdaptiveModel:
    """Order-k backoff counting model over a sliding window of M tokens.

    score(t) = 1 + sum over orders j of 4^j * count(context_j -> t), where
    context_j is the last j tokens of the window.  Counts accumulate over
    the whole update history; the window only bounds how much context the
    next prediction conditions on (orders are capped at min(k, M, tokens
    seen)).  Everything is integer arithmetic, so two sessions fed the same
    updates are bit-identical forever.
    """

    model_id = "adaptive"

    def __init__(self, vocab_size: int, order: int = 3, memory: int = 64):
        if order < 0:
            raise ValueError("order must be >= 0")
        if memory < 0:
            raise ValueError("memory must be >= 0")
        self.vocab_size = vocab_size
        self.order = order
        self.memory = memory
        self._order0 = np.zeros(vocab_size, dtype=np.int64)
        self._dense1 = order >= 1 and vocab_size <= _DENSE_ORDER1_LIMIT
        # Count tables store counts pre-scaled by their 4^j backoff weight,
        # so score assembly is pure addition.
        self._order1 = (
            np.zeros((vocab_size, vocab_size), dtype=np.int64) if self._dense1 else None
        )
        first_sparse = 2 if self._dense1 else 1
        self._first_sparse = first_sparse
        # Context keys are byte strings when ids fit a byte (compact, fast
        # to hash), tuples otherwise.
        self._byte_keys = vocab_size <= 256
        self._sparse: dict[int, dict] = {j: {} for j in range(first_sparse, order + 1)}
        self._window = bytearray() if self._byte_keys else []
        self._pmf: QuantizedPmf | None = None
        # Incremental overflow guard: no score can exceed 1 + updates * sum(4^j).
        self._bound_step = sum(4**j for j in range(order + 1))
        self._score_bound = 1

    def predict(self) -> QuantizedPmf:
        pmf = self._pmf
        if pmf is None:
            win = self._window
            scores = np.add(self._order0, 1)
            hi = self.order
            avail = len(win)
            if avail < hi:
                hi = avail
            if self.memory < hi:
                hi = self.memory
            if hi >= 1 and self._dense1:
                scores += self._order1[win[-1]]
            byte_keys = self._byte_keys
            for j in range(self._first_sparse, hi + 1):
                tail = win[-j:]
                counts = self._sparse[j].get(bytes(tail) if byte_keys else tuple(tail))
                if counts:
                    for t, c in counts.items():
                        scores[t] += c
            # quantize_scores asserts the mass balance it constructs, which
            # is the per-predict PMF validity guard for this hot path.
            pmf = self._pmf = quantize_scores(
                scores, _trusted=True, _max_hint=self._score_bound
            )
        return pmf

    def update(self, token_id: int) -> None:
        win = self._window
        self._order0[token_id] += 1
        hi = self.order
        avail = len(win)
        if avail < hi:
            hi = avail
        if self.memory < hi:
            hi = self.memory
        if hi >= 1 and self._dense1:
            self._order1[win[-1], token_id] += 4
        byte_keys = self._byte_keys
        for j in range(self._first_sparse, hi + 1):
            by_ctx = self._sparse[j]
            tail = win[-j:]
            ctx = bytes(tail) if byte_keys else tuple(tail)
            step = 4**j
            counts = by_ctx.get(ctx)
            if counts is None:
                by_ctx[ctx] = {token_id: step}
            else:
                counts[token_id] = counts.get(token_id, 0) + step
        if self.memory > 0:
            win.append(token_id)
            if len(win) > 2 * self.memory:
                del win[: len(win) - self.memory]
        self._score_bound += self._bound_step
        self._pmf = None


def make_session(name: str, vocab_size: int, memory: int, order: int):
    """Build a predictor session from its container/CLI identifier."""
    if name == "uniform":
        return UniformModel(vocab_size)
    if name == "adaptive":
        return AdaptiveModel(vocab_size, order=order, memory=memory)
    raise ValueError(f"unknown predictor {name!r}")
