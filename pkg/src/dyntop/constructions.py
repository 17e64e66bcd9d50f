"""Explicit sequences: the FIP counterexample, the combination-block mixing
sequence, Champernowne points and alternating-block partners.

Combination-block stream
------------------------
``A_1 = 10``.  Stage ``k + 1`` is ``A_k 0^k 1^k`` followed by the combination
blocks ``c(W1, W2, k)`` of all ordered pairs of distinct subblocks of
``A_k``.  Pairs are taken with ``W1`` in (length, lexicographic) order and,
for each ``W1``, ``W2`` in the same order.  The order is part of the output
contract: changing it changes the stream.  Pairs with ``W1 == W2`` are
included.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .exceptions import FIPHoldsError, HorizonError
from .symbolic import Point, Word, WordLike, parse_word, word_str
from .timeset import TimeSet

PAIR_ORDER_TAG = "length-lex/1"
# subblock enumeration is quadratic in the stage length
MAX_SUBBLOCK_SOURCE = 20_000


def fip_counterexample_point(sets: Sequence[TimeSet]) -> Point:
    """Point whose symbol at ``n`` is the least ``i`` with ``n`` outside ``sets[i]``.

    Symbol ``i`` never appears at a time in ``sets[i]``, so no symbol is
    visited inside every set.  Raises :class:`FIPHoldsError` when the sets
    share an element, since then no such symbol exists at that time.
    """
    if not sets:
        raise ValueError("need at least one set")
    H = sets[0].horizon
    if any(F.horizon != H for F in sets):
        raise HorizonError("sets must share a horizon")
    masks = np.array([F.mask for F in sets], dtype=bool)
    common = np.flatnonzero(masks.all(axis=0))
    if common.size:
        raise FIPHoldsError(int(common[0]))
    # argmin of a boolean column finds the first False
    return Point(masks.argmin(axis=0), "fip-counterexample")


@dataclass(frozen=True)
class BlockDecomposition:
    """``W = a^i Q b^j`` with maximal constant head and tail."""

    a: int
    i: int
    Q: Word
    b: int
    j: int

    def assemble(self) -> Word:
        return (self.a,) * self.i + self.Q + (self.b,) * self.j


def decompose_block(w: WordLike) -> BlockDecomposition:
    w = parse_word(w)
    a = w[0]
    i = 1
    while i < len(w) and w[i] == a:
        i += 1
    if i == len(w):
        # a constant word has no tail; its tail symbol is taken as 0
        return BlockDecomposition(a, i, (), 0, 0)
    rest = w[i:]
    b = rest[-1]
    j = 1
    while j < len(rest) and rest[-1 - j] == b:
        j += 1
    return BlockDecomposition(a, i, rest[:len(rest) - j], b, j)


def _combination_str(d1: BlockDecomposition, d2: BlockDecomposition, k: int) -> str:
    a, q1, b = str(d1.a), word_str(d1.Q), str(d1.b)
    c, q2, d = str(d2.a), word_str(d2.Q), str(d2.b)
    first = a * (k + d1.i) + q1 + b * (d1.j + k)
    second = c * (k + d2.i) + q2 + d * (k + d2.j)
    return first + second + a * (k + d1.i) + q1 + b * (d1.j + k + 1) + second


def combination_block(w1: WordLike, w2: WordLike, k: int) -> Word:
    """The combination block of two binary words at stage ``k``.

    Its length is ``2 (|w1| + |w2|) + 8 k + 1`` for all inputs.
    """
    if k < 1:
        raise ValueError("stage must be positive")
    d1, d2 = decompose_block(w1), decompose_block(w2)
    if any(s not in (0, 1) for s in d1.assemble() + d2.assemble()):
        raise ValueError("combination blocks need binary words")
    return parse_word(_combination_str(d1, d2, k))


def distinct_subblocks(w: WordLike) -> list:
    """All distinct nonempty subwords of ``w`` in (length, lexicographic) order."""
    s = w if isinstance(w, str) else word_str(parse_word(w))
    if len(s) > MAX_SUBBLOCK_SOURCE:
        raise ValueError(f"word of length {len(s)} is too long to enumerate subblocks")
    found = {s[p:p + L] for L in range(1, len(s) + 1) for p in range(len(s) - L + 1)}
    return sorted(found, key=lambda t: (len(t), t))


def _next_stage_pieces(block: str, k: int) -> Iterator[str]:
    yield block
    yield "0" * k + "1" * k
    subs = distinct_subblocks(block)
    decs = [decompose_block(t) for t in subs]
    for d1 in decs:
        for d2 in decs:
            yield _combination_str(d1, d2, k)


def _next_stage_length(block: str, k: int) -> int:
    subs = distinct_subblocks(block)
    n = len(subs)
    total = sum(len(t) for t in subs)
    return len(block) + 2 * k + 4 * n * total + (8 * k + 1) * n * n


@dataclass
class ASequencePrefix:
    symbols: np.ndarray
    truncated: bool
    stage_lengths: list = field(default_factory=list)
    pair_order: str = PAIR_ORDER_TAG

    def metadata(self) -> dict:
        return {"length": int(self.symbols.size), "truncated": self.truncated,
                "stage_lengths": self.stage_lengths, "pair_order": self.pair_order}


def stage_lengths(stages: int) -> list:
    """``|A_1|, ..., |A_stages|``; ``None`` once a stage is too long to enumerate."""
    lengths: list = [2]
    block: Optional[str] = "10"
    for k in range(1, stages):
        if block is None or len(block) > MAX_SUBBLOCK_SOURCE:
            lengths.append(None)
            block = None
            continue
        lengths.append(_next_stage_length(block, k))
        if lengths[-1] <= MAX_SUBBLOCK_SOURCE:
            block = "".join(_next_stage_pieces(block, k))
        else:
            block = None
    return lengths


def a_sequence_prefix(stages: int, length: int) -> ASequencePrefix:
    """First ``length`` symbols of the stage-``stages`` combination-block word.

    Every stage begins with the previous one, so only stages whose prefix is
    shorter than ``length`` are expanded, and each expansion stops as soon
    as ``length`` symbols exist.
    """
    if not 1 <= stages <= 4:
        raise ValueError("stages must be in [1, 4]")
    if length < 1:
        raise ValueError("length must be positive")
    block = "10"
    for k in range(1, stages):
        if len(block) >= length or len(block) > MAX_SUBBLOCK_SOURCE:
            break
        parts, total = [], 0
        for piece in _next_stage_pieces(block, k):
            parts.append(piece)
            total += len(piece)
            if total >= length:
                break
        block = "".join(parts)
    text = block[:length]
    symbols = np.frombuffer(text.encode(), dtype=np.uint8).astype(np.int64) - 48
    return ASequencePrefix(symbols, symbols.size < length, stage_lengths(stages))


def stage_block(m: int) -> str:
    """The complete stage-``m`` block, for stages short enough to hold."""
    if m < 1:
        raise ValueError("stage must be positive")
    block = "10"
    for k in range(1, m):
        if _next_stage_length(block, k) > MAX_SUBBLOCK_SOURCE:
            raise ValueError(f"stage {m} is too long to materialize")
        block = "".join(_next_stage_pieces(block, k))
    return block


def mixing_tail_bound(w1: WordLike, w2: WordLike, m: int) -> int:
    """Time after which ``C[w1]`` reaches ``C[w2]`` at every step.

    ``m + |w1|`` when the tail symbol of ``w1`` equals the head symbol of
    ``w2``, else ``2 m + |w1|``.  Both words must be subblocks of ``A_m``.
    """
    w1, w2 = parse_word(w1), parse_word(w2)
    block = stage_block(m)
    for w in (w1, w2):
        if word_str(w) not in block:
            raise ValueError(f"{word_str(w)} is not a subblock of stage {m}")
    if decompose_block(w1).b == decompose_block(w2).a:
        return m + len(w1)
    return 2 * m + len(w1)


def champernowne_point(alphabet: int, max_len: int, length: Optional[int] = None) -> Point:
    """All words of length ``1..max_len`` in length-lexicographic order, concatenated.

    With ``length`` given, longer words keep being appended until the prefix
    reaches that length; it is an error if the words up to ``max_len`` do
    not fit.
    """
    if alphabet < 2 or max_len < 1:
        raise ValueError("need alphabet >= 2 and max_len >= 1")
    base = sum(L * alphabet ** L for L in range(1, max_len + 1))
    if length is not None and base > length:
        raise HorizonError(f"words up to length {max_len} need {base} > {length} symbols")
    target = base if length is None else length
    out: list = []
    L = 1
    while len(out) < target:
        for w in itertools.product(range(alphabet), repeat=L):
            out.extend(w)
            if len(out) >= target:
                break
        L += 1
    return Point(np.array(out[:target]), f"champernowne:{alphabet}:{max_len}")


def alternating_partner(x: Point, alphabet: int = 2) -> Point:
    """Agrees with ``x`` on the blocks ``[4^i, 2 * 4^i)`` and differs everywhere else."""
    agree = np.zeros(len(x), dtype=bool)
    start = 1
    while start < len(x):
        agree[start:2 * start] = True
        start *= 4
    y = np.where(agree, x.symbols, (x.symbols + 1) % alphabet)
    return Point(y, "alternating-partner")

