"""Horizon-truncated subsets of the nonnegative integers.

A :class:`TimeSet` stands for a subset of ``Z+`` observed on ``[0, H)``.  It is
backed by a read-only boolean mask, so membership is O(1) and every set
operation is linear in ``H``.  Largeness predicates (thick, syndetic,
cofinite, thickly syndetic, IP) are exposed as parameterized surrogates: a
truncation can never certify an asymptotic property, only a finite witness.
"""

from __future__ import annotations

import json
from typing import Iterable, Iterator, Optional

import numpy as np

from .exceptions import HorizonError, SchemaError


def _runs(mask: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Start positions and lengths of the maximal runs of ``True``."""
    padded = np.concatenate(([0], mask.view(np.int8), [0]))
    d = np.diff(padded)
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return starts, ends - starts


class TimeSet:
    """An immutable subset of ``{0, ..., horizon - 1}``.

    ``clipped`` counts members that fell off the end of the horizon when the
    set was produced by :meth:`shift_plus`; it does not take part in equality.
    """

    __slots__ = ("horizon", "_mask", "clipped", "_bits")

    def __init__(self, horizon: int, members: Iterable[int] = (), *, clipped: int = 0):
        horizon = int(horizon)
        if horizon < 1:
            raise HorizonError(f"horizon must be positive, got {horizon}")
        mask = np.zeros(horizon, dtype=bool)
        idx = np.fromiter((int(m) for m in members), dtype=np.int64)
        if idx.size:
            if idx.min() < 0 or idx.max() >= horizon:
                bad = int(idx.max()) if idx.max() >= horizon else int(idx.min())
                raise HorizonError(f"member {bad} outside [0, {horizon})")
            mask[idx] = True
        self._init(horizon, mask, clipped)

    def _init(self, horizon: int, mask: np.ndarray, clipped: int) -> None:
        mask.flags.writeable = False
        self.horizon = horizon
        self._mask = mask
        self.clipped = clipped
        self._bits: Optional[int] = None

    @classmethod
    def from_mask(cls, mask, *, clipped: int = 0) -> "TimeSet":
        mask = np.array(mask, dtype=bool, copy=True).ravel()
        if mask.size < 1:
            raise HorizonError("horizon must be positive")
        obj = cls.__new__(cls)
        obj._init(int(mask.size), mask, clipped)
        return obj

    @classmethod
    def empty(cls, horizon: int) -> "TimeSet":
        return cls.from_mask(np.zeros(horizon, dtype=bool))

    @classmethod
    def full(cls, horizon: int) -> "TimeSet":
        return cls.from_mask(np.ones(horizon, dtype=bool))

    @classmethod
    def interval(cls, horizon: int, start: int, stop: Optional[int] = None) -> "TimeSet":
        """The run ``[start, stop)`` clipped to the horizon (``stop`` defaults to ``H``)."""
        mask = np.zeros(horizon, dtype=bool)
        mask[max(start, 0): horizon if stop is None else max(stop, 0)] = True
        return cls.from_mask(mask)

    @classmethod
    def residues(cls, horizon: int, modulus: int, residues: Iterable[int] = (0,)) -> "TimeSet":
        """All ``n < horizon`` whose residue mod ``modulus`` is listed."""
        r = np.arange(horizon) % modulus
        return cls.from_mask(np.isin(r, [x % modulus for x in residues]))

    # -- basic protocol -------------------------------------------------

    @property
    def mask(self) -> np.ndarray:
        """Read-only boolean membership vector of length ``horizon``."""
        return self._mask

    @property
    def members(self) -> list[int]:
        return np.flatnonzero(self._mask).tolist()

    @property
    def bits(self) -> int:
        """Membership as a Python integer bitmask (bit ``n`` set iff ``n`` is a member)."""
        if self._bits is None:
            packed = np.packbits(self._mask, bitorder="little")
            self._bits = int.from_bytes(packed.tobytes(), "little")
        return self._bits

    def __len__(self) -> int:
        return int(np.count_nonzero(self._mask))

    def __bool__(self) -> bool:
        return bool(self._mask.any())

    def __iter__(self) -> Iterator[int]:
        return iter(self.members)

    def __contains__(self, n) -> bool:
        return 0 <= n < self.horizon and bool(self._mask[n])

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSet):
            return NotImplemented
        return self.horizon == other.horizon and bool(np.array_equal(self._mask, other._mask))

    def __hash__(self) -> int:
        return hash((self.horizon, np.packbits(self._mask).tobytes()))

    def __repr__(self) -> str:
        ms = self.members
        body = ", ".join(map(str, ms[:12])) + (", ..." if len(ms) > 12 else "")
        return f"TimeSet(H={self.horizon}, {{{body}}})"

    def _check(self, other: "TimeSet") -> None:
        if self.horizon != other.horizon:
            raise HorizonError(f"horizon mismatch: {self.horizon} != {other.horizon}")

    def __and__(self, other: "TimeSet") -> "TimeSet":
        self._check(other)
        return TimeSet.from_mask(self._mask & other._mask)

    def __or__(self, other: "TimeSet") -> "TimeSet":
        self._check(other)
        return TimeSet.from_mask(self._mask | other._mask)

    def __sub__(self, other: "TimeSet") -> "TimeSet":
        self._check(other)
        return TimeSet.from_mask(self._mask & ~other._mask)

    def __xor__(self, other: "TimeSet") -> "TimeSet":
        self._check(other)
        return TimeSet.from_mask(self._mask ^ other._mask)

    def __invert__(self) -> "TimeSet":
        return TimeSet.from_mask(~self._mask)

    def __le__(self, other: "TimeSet") -> bool:
        self._check(other)
        return not bool((self._mask & ~other._mask).any())

    def __ge__(self, other: "TimeSet") -> bool:
        return other.__le__(self)

    issubset = __le__
    issuperset = __ge__

    def isdisjoint(self, other: "TimeSet") -> bool:
        self._check(other)
        return not bool((self._mask & other._mask).any())

    def min(self) -> Optional[int]:
        """Least member, or ``None`` when empty."""
        hit = np.flatnonzero(self._mask[: self.horizon])
        return int(hit[0]) if hit.size else None

    def truncate(self, horizon: int) -> "TimeSet":
        """Members below ``horizon``, re-housed on the shorter horizon."""
        if not 0 < horizon <= self.horizon:
            raise HorizonError(f"cannot truncate horizon {self.horizon} to {horizon}")
        return TimeSet.from_mask(self._mask[:horizon])

    def pad_tail(self, k: int) -> "TimeSet":
        """Union with the final window ``[H - k, H)``."""
        mask = self._mask.copy()
        if k > 0:
            mask[max(self.horizon - k, 0):] = True
        return TimeSet.from_mask(mask)

    # -- translations -----------------------------------------------------

    def shift_plus(self, i: int) -> "TimeSet":
        """``{j + i : j in F}``; members pushed past the horizon are clipped and counted."""
        if i < 0:
            raise ValueError("shift must be nonnegative")
        if i >= self.horizon:
            raise HorizonError(f"shift {i} exceeds horizon {self.horizon}")
        mask = np.zeros(self.horizon, dtype=bool)
        mask[i:] = self._mask[: self.horizon - i]
        lost = int(np.count_nonzero(self._mask[self.horizon - i:])) if i else 0
        return TimeSet.from_mask(mask, clipped=lost)

    def shift_minus(self, i: int) -> "TimeSet":
        """``{j - i : j in F, j >= i}`` on the same horizon."""
        if i < 0:
            raise ValueError("shift must be nonnegative")
        if i >= self.horizon:
            raise HorizonError(f"shift {i} exceeds horizon {self.horizon}")
        mask = np.zeros(self.horizon, dtype=bool)
        mask[: self.horizon - i] = self._mask[i:]
        return TimeSet.from_mask(mask)

    # -- largeness surrogates -------------------------------------------

    def max_run(self) -> int:
        """Length of the longest run of consecutive members."""
        _, lengths = _runs(self._mask)
        return int(lengths.max()) if lengths.size else 0

    def max_gap(self) -> Optional[int]:
        """Longest run of non-members, or ``None`` for the empty set."""
        if not self:
            return None
        _, lengths = _runs(~self._mask)
        return int(lengths.max()) if lengths.size else 0

    def thick_at(self, run_len: int) -> bool:
        """True iff ``run_len`` consecutive integers are all members."""
        if not 1 <= run_len <= self.horizon:
            raise ValueError(f"run length {run_len} outside [1, {self.horizon}]")
        return self.max_run() >= run_len

    def syndetic_with_gap(self, gap: int) -> bool:
        """True iff every window ``{i, ..., i + gap}`` inside ``[0, H)`` meets the set.

        A window misses the set exactly when it sits inside a run of
        non-members, so this reduces to comparing the longest such run.
        """
        if not 0 <= gap < self.horizon:
            raise ValueError(f"gap {gap} outside [0, {self.horizon})")
        longest = self.max_gap()
        return longest is not None and longest <= gap

    def cofinite_from(self) -> Optional[int]:
        """Smallest ``t`` with ``[t, H)`` inside the set; ``None`` if ``H - 1`` is missing."""
        if not self._mask[-1]:
            return None
        starts, _ = _runs(self._mask)
        return int(starts[-1])

    def run_starts(self, run_len: int) -> "TimeSet":
        """Positions where a run of ``run_len`` members begins.

        The result lives on horizon ``H - run_len + 1``: the positions at which
        such a run could start at all.
        """
        if not 1 <= run_len <= self.horizon:
            raise ValueError(f"run length {run_len} outside [1, {self.horizon}]")
        csum = np.concatenate(([0], np.cumsum(self._mask, dtype=np.int64)))
        window = csum[run_len:] - csum[:-run_len]
        return TimeSet.from_mask(window == run_len)

    def thickly_syndetic_at(self, run_len: int, gap: int) -> bool:
        """True iff the starts of ``run_len``-runs form a ``gap``-syndetic set."""
        if run_len < 1 or gap < 0 or run_len + gap >= self.horizon:
            raise ValueError("need run_len >= 1, gap >= 0 and run_len + gap < horizon")
        return self.run_starts(run_len).syndetic_with_gap(gap)

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "members": self.members}

    @classmethod
    def from_dict(cls, doc: dict) -> "TimeSet":
        """Accept ``{"horizon", "members"}`` or the run-length ``{"horizon", "runs"}`` form."""
        if not isinstance(doc, dict):
            raise SchemaError("time set must be a JSON object")
        horizon = doc.get("horizon")
        if not isinstance(horizon, int) or horizon < 1:
            raise SchemaError("field 'horizon': expected a positive integer")
        if "members" in doc:
            members = doc["members"]
            if not isinstance(members, list) or not all(isinstance(m, int) for m in members):
                raise SchemaError("field 'members': expected a list of integers")
            try:
                return cls(horizon, members)
            except HorizonError as exc:
                raise SchemaError(f"field 'members': {exc}") from None
        if "runs" in doc:
            mask = np.zeros(horizon, dtype=bool)
            for k, run in enumerate(doc["runs"]):
                if (not isinstance(run, list) or len(run) != 2
                        or not all(isinstance(v, int) for v in run)):
                    raise SchemaError(f"field 'runs[{k}]': expected [start, length]")
                start, length = run
                if start < 0 or length < 0 or start + length > horizon:
                    raise SchemaError(f"field 'runs[{k}]': run leaves [0, {horizon})")
                mask[start:start + length] = True
            return cls.from_mask(mask)
        raise SchemaError("time set needs a 'members' or 'runs' field")

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def find_fs_subset(F: TimeSet, n: int, *, max_n: int = 20) -> Optional[list[int]]:
    """Search for ``p_1 < ... < p_n`` whose nonempty subset sums all lie in ``F``.

    Depth-first in increasing ``p``.  Candidates for the next element are
    computed with bitmask shifts: ``p`` is allowed iff ``p`` and ``p + s`` are
    members for every subset sum ``s`` found so far.  Returns ``None`` when no
    such tuple exists below the horizon.
    """
    if not 1 <= n <= max_n:
        raise ValueError(f"n must be in [1, {max_n}]")
    fb = F.bits
    top = F.horizon - 1

    def extend(chosen: list[int], sums: int, total: int) -> Optional[list[int]]:
        depth = len(chosen)
        if depth == n:
            return chosen
        last = chosen[-1] if chosen else 0
        remaining = n - depth
        cand = fb
        rest = sums
        while rest and cand:
            low = rest & -rest
            cand &= fb >> (low.bit_length() - 1)
            rest ^= low
        cand >>= last + 1
        while cand:
            low = cand & -cand
            p = last + low.bit_length()
            # every later element exceeds p, and the grand total must stay below H
            if total + remaining * p + remaining * (remaining - 1) // 2 > top:
                return None
            found = extend(chosen + [p], sums | (sums << p) | (1 << p), total + p)
            if found is not None:
                return found
            cand ^= low
        return None

    return extend([], 0, 0)


def subset_sums(ps: Iterable[int]) -> list[int]:
    """All nonempty subset sums of ``ps`` (with multiplicity removed), sorted."""
    sums: set[int] = set()
    for p in ps:
        sums |= {s + p for s in sums} | {p}
    return sorted(sums)


def verify_fs(F: TimeSet, ps: Iterable[int]) -> bool:
    """True iff every nonempty subset sum of ``ps`` is a member of ``F``."""
    return all(s in F for s in subset_sums(ps))
