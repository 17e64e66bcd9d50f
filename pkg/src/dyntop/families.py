"""Finitely generated Furstenberg families and a brute-force oracle.

A :class:`FamilySpec` is the hereditary-upward closure of a finite list of
generator :class:`~dyntop.timeset.TimeSet` objects: ``F`` belongs to the
family iff ``F`` contains some generator.  Generators are kept as an
antichain; a family with an empty generator contains every set and is
reported as improper.

Only membership queries are offered for the dual family ``kF``: the dual of a
finitely generated family is usually not finitely generated.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Optional, Sequence

import numpy as np

from .exceptions import HorizonError, SchemaError, UniverseTooLargeError
from .timeset import TimeSet


def _containment(rows: np.ndarray, gens: np.ndarray) -> np.ndarray:
    """``out[r, g]`` is True iff generator ``g`` is a subset of row ``r``.

    Uses ``|G \\ R| = |G| - <G, R>``; float32 dot products are exact for
    horizons below 2**24.
    """
    overlap = rows.astype(np.float32) @ gens.astype(np.float32).T
    return overlap == gens.sum(axis=1, dtype=np.int64)[None, :]


class FamilySpec:
    """Upward closure of finitely many generators on a common horizon."""

    __slots__ = ("horizon", "generators", "_G")

    def __init__(self, generators: Iterable[TimeSet]):
        gens = list(generators)
        if not gens:
            raise ValueError("a family needs at least one generator")
        horizon = gens[0].horizon
        for g in gens:
            if g.horizon != horizon:
                raise HorizonError(f"generator horizons differ: {g.horizon} != {horizon}")
        self.horizon = horizon
        self.generators = self._canonical(gens)
        self._G = np.array([g.mask for g in self.generators], dtype=bool)
        self._G.flags.writeable = False

    @staticmethod
    def _canonical(gens: list[TimeSet]) -> tuple[TimeSet, ...]:
        # smallest first, so a kept generator can only be dropped by an earlier one
        order = sorted(gens, key=len)
        kept: list[TimeSet] = []
        packed: list[np.ndarray] = []
        for g in order:
            pg = np.packbits(g.mask)
            if packed and not np.all(np.any(np.array(packed) & ~pg, axis=1)):
                continue
            kept.append(g)
            packed.append(pg)
        kept.sort(key=lambda g: (len(g), g.members))
        return tuple(kept)

    def __repr__(self) -> str:
        return f"FamilySpec(H={self.horizon}, generators={len(self.generators)})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, FamilySpec):
            return NotImplemented
        return self.horizon == other.horizon and self.generators == other.generators

    def __hash__(self) -> int:
        return hash((self.horizon, self.generators))

    def _check(self, F: TimeSet) -> None:
        if F.horizon != self.horizon:
            raise HorizonError(f"set horizon {F.horizon} != family horizon {self.horizon}")

    # -- membership ---------------------------------------------------------

    def member(self, F: TimeSet) -> bool:
        """True iff ``F`` contains some generator."""
        self._check(F)
        return bool(_containment(F.mask[None, :], self._G).any())

    def member_many(self, sets: Sequence[TimeSet]) -> np.ndarray:
        """Vectorized :meth:`member` over a batch of sets."""
        for F in sets:
            self._check(F)
        if not sets:
            return np.zeros(0, dtype=bool)
        rows = np.array([F.mask for F in sets], dtype=bool)
        return _containment(rows, self._G).any(axis=1)

    def dual_member(self, F: TimeSet) -> bool:
        """True iff ``F`` belongs to the dual family ``kF``.

        Meeting every generator is the same as meeting every member of the
        upward closure, so the finite generator list decides this exactly.
        """
        self._check(F)
        return bool((self._G & F.mask[None, :]).any(axis=1).all())

    # -- algebra ------------------------------------------------------------

    def interaction(self, other: "FamilySpec") -> "FamilySpec":
        """The family of all ``F1 & F2`` with ``F1`` in self and ``F2`` in ``other``.

        Generated by the pairwise generator intersections.  If any of those is
        empty the result contains the empty set and :meth:`is_proper` is False.
        """
        if other.horizon != self.horizon:
            raise HorizonError(f"horizon mismatch: {self.horizon} != {other.horizon}")
        pieces = [TimeSet.from_mask(g & other._G[j])
                  for g in self._G for j in range(len(other._G))]
        return FamilySpec(pieces)

    def intersection(self) -> TimeSet:
        """Intersection of all generators."""
        return TimeSet.from_mask(np.logical_and.reduce(self._G, axis=0))

    def has_fip(self) -> Optional[int]:
        """Least element common to every member, or ``None`` if FIP fails.

        With finitely many generators, every finite subcollection of the
        closure contains supersets of some generators, so FIP of the whole
        family is equivalent to one nonempty intersection of all generators.
        """
        return self.intersection().min()

    def is_free_at_horizon(self) -> bool:
        return not self.intersection()

    def min_intersection_size(self) -> int:
        return len(self.intersection())

    def is_proper(self) -> bool:
        return bool(self._G.any(axis=1).all())

    def is_filter(self) -> bool:
        """Proper, and every pairwise generator intersection is a member."""
        if not self.is_proper():
            return False
        for i in range(len(self._G)):
            rows = self._G[i][None, :] & self._G[i:]
            if not _containment(rows, self._G).any(axis=1).all():
                return False
        return True

    # -- translation invariance ----------------------------------------------

    def _check_shift_range(self, imax: int, edge_guard: bool) -> None:
        if imax < 0 or imax >= self.horizon:
            raise ValueError(f"imax {imax} outside [0, {self.horizon})")
        if edge_guard and 2 * imax >= self.horizon:
            raise ValueError(f"imax {imax} must stay below H/2 = {self.horizon / 2}")

    def plus_invariant_upto(self, imax: int, *, edge_guard: bool = True) -> bool:
        """Every generator shifted by ``1..imax`` (tail-padded) is still a member.

        The pad ``[H - i, H)`` replaces the members lost to clipping, so only
        genuine invariance failures are reported.
        """
        self._check_shift_range(imax, edge_guard)
        shifted = [g.shift_plus(i).pad_tail(i)
                   for i in range(1, imax + 1) for g in self.generators]
        return bool(self.member_many(shifted).all())

    def minus_invariant_upto(self, imax: int, *, edge_guard: bool = True) -> bool:
        """As :meth:`plus_invariant_upto` for the backward shift ``g^{-i}``."""
        self._check_shift_range(imax, edge_guard)
        shifted = [g.shift_minus(i).pad_tail(i)
                   for i in range(1, imax + 1) for g in self.generators]
        return bool(self.member_many(shifted).all())

    def tau_member(self, F: TimeSet, shift_bound: int, n: int, *,
                   edge_guard: bool = True) -> bool:
        """Every intersection of ``n`` backward shifts of ``F`` (shifts <= ``shift_bound``) is a member.

        Intersections are padded with ``[H - shift_bound, H)``.
        """
        self._check(F)
        if not 1 <= n <= 4:
            raise ValueError("n must be in [1, 4]")
        if shift_bound < 0 or (edge_guard and 4 * shift_bound > self.horizon):
            raise ValueError(f"shift bound {shift_bound} must be in [0, H/4]")
        shifts = [F.shift_minus(i).mask for i in range(shift_bound + 1)]
        tail = TimeSet.empty(self.horizon).pad_tail(shift_bound).mask
        rows = []
        for combo in itertools.combinations_with_replacement(range(shift_bound + 1), n):
            m = tail.copy()
            m |= np.logical_and.reduce([shifts[i] for i in combo], axis=0)
            rows.append(TimeSet.from_mask(m))
        return bool(self.member_many(rows).all())

    # -- serialization --------------------------------------------------------

    def to_dict(self) -> dict:
        return {"horizon": self.horizon, "generators": [g.to_dict() for g in self.generators]}

    @classmethod
    def from_dict(cls, doc: dict) -> "FamilySpec":
        if not isinstance(doc, dict) or not isinstance(doc.get("generators"), list):
            raise SchemaError("field 'generators': expected a list of time sets")
        horizon = doc.get("horizon")
        gens = []
        for k, g in enumerate(doc["generators"]):
            if isinstance(g, dict) and "horizon" not in g and horizon is not None:
                g = {"horizon": horizon, **g}
            try:
                gens.append(TimeSet.from_dict(g))
            except SchemaError as exc:
                raise SchemaError(f"generators[{k}]: {exc}") from None
        if not gens:
            raise SchemaError("field 'generators': needs at least one entry")
        if horizon is not None and any(g.horizon != horizon for g in gens):
            raise SchemaError("field 'horizon': disagrees with a generator horizon")
        return cls(gens)


def up(*generators: TimeSet) -> FamilySpec:
    """Shorthand for the upward closure of the given generators."""
    return FamilySpec(generators)


def tails_family(horizon: int, starts: Iterable[int]) -> FamilySpec:
    """Upward closure of the tails ``[t, H)``; a finite stand-in for the cofinite family."""
    return FamilySpec(TimeSet.interval(horizon, t) for t in starts)


def builtin_family(name: str, horizon: int) -> FamilySpec:
    """Named families: ``evens``, ``odds``, ``tails:t`` and ``syndetic-sample``.

    ``syndetic-sample`` is generated by the residue classes 0 mod 3, 1 mod 2
    and 2 mod 5, each a syndetic set.
    """
    if name == "evens":
        return up(TimeSet.residues(horizon, 2, [0]))
    if name == "odds":
        return up(TimeSet.residues(horizon, 2, [1]))
    if name.startswith("tails:"):
        try:
            t = int(name.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad tail start in {name!r}") from None
        if not 0 <= t < horizon:
            raise HorizonError(f"tail start {t} outside [0, {horizon})")
        return tails_family(horizon, [t])
    if name == "syndetic-sample":
        return up(TimeSet.residues(horizon, 3, [0]), TimeSet.residues(horizon, 2, [1]),
                  TimeSet.residues(horizon, 5, [2]))
    raise ValueError(f"unknown built-in family {name!r}")


# -- exhaustive oracle ---------------------------------------------------------

ORACLE_MAX_UNIVERSE = 16


class OracleFamily:
    """An upward-closed family over ``[0, U)`` stored as a table of all ``2**U`` subsets.

    Subsets are integer bitmasks.  Every operation below enumerates subsets
    directly instead of reasoning about generators, which makes this a
    cross-check for :class:`FamilySpec`.
    """

    def __init__(self, universe: int, table):
        if not 0 < universe <= ORACLE_MAX_UNIVERSE:
            raise UniverseTooLargeError(f"universe {universe} outside [1, {ORACLE_MAX_UNIVERSE}]")
        table = np.asarray(table, dtype=bool)
        if table.shape != (1 << universe,):
            raise ValueError("table must have 2**universe entries")
        self.universe = universe
        self.table = table
        self.table.flags.writeable = False

    @classmethod
    def from_generators(cls, universe: int, generators: Iterable[int]) -> "OracleFamily":
        if not 0 < universe <= ORACLE_MAX_UNIVERSE:
            raise UniverseTooLargeError(f"universe {universe} outside [1, {ORACLE_MAX_UNIVERSE}]")
        subsets = np.arange(1 << universe, dtype=np.int64)
        gens = np.array(list(generators), dtype=np.int64)
        if gens.size == 0:
            return cls(universe, np.zeros(1 << universe, dtype=bool))
        return cls(universe, ((gens[None, :] & ~subsets[:, None]) == 0).any(axis=1))

    @classmethod
    def from_spec(cls, spec: FamilySpec) -> "OracleFamily":
        return cls.from_generators(spec.horizon, [g.bits for g in spec.generators])

    def __eq__(self, other) -> bool:
        if not isinstance(other, OracleFamily):
            return NotImplemented
        return self.universe == other.universe and bool(np.array_equal(self.table, other.table))

    @property
    def full(self) -> int:
        return (1 << self.universe) - 1

    def members(self) -> np.ndarray:
        return np.flatnonzero(self.table)

    def minimal_members(self) -> np.ndarray:
        """Members none of whose one-element deletions is a member."""
        ms = self.members()
        keep = np.ones(ms.size, dtype=bool)
        for b in range(self.universe):
            bit = 1 << b
            has = (ms & bit) != 0
            keep &= ~(has & self.table[ms & ~bit])
        return ms[keep]

    def is_upward_closed(self) -> bool:
        ms = self.members()
        return all(self.table[ms | (1 << b)].all() for b in range(self.universe))


def oracle_member(fam: OracleFamily, subset: int) -> bool:
    return bool(fam.table[subset])


def oracle_dual(fam: OracleFamily) -> OracleFamily:
    """Table of all subsets meeting every member of ``fam``."""
    subsets = np.arange(1 << fam.universe, dtype=np.int64)
    ms = fam.minimal_members() if fam.universe > 12 else fam.members()
    if ms.size == 0:
        return OracleFamily(fam.universe, np.ones(subsets.size, dtype=bool))
    table = np.ones(subsets.size, dtype=bool)
    for chunk in np.array_split(ms, max(1, ms.size // 256)):
        table &= ((subsets[:, None] & chunk[None, :]) != 0).all(axis=1)
    return OracleFamily(fam.universe, table)


def oracle_interaction(a: OracleFamily, b: OracleFamily) -> OracleFamily:
    """Table of all ``A & B`` with ``A`` in ``a`` and ``B`` in ``b``."""
    if a.universe != b.universe:
        raise HorizonError("oracle universes differ")
    if a.universe <= 12:
        hits = np.unique(np.bitwise_and.outer(a.members(), b.members()))
        table = np.zeros(1 << a.universe, dtype=bool)
        table[hits] = True
        return OracleFamily(a.universe, table)
    # larger universes: minimal intersections, then close upward
    hits = np.unique(np.bitwise_and.outer(a.minimal_members(), b.minimal_members()))
    return OracleFamily.from_generators(a.universe, hits.tolist())


def oracle_has_fip(fam: OracleFamily) -> Optional[int]:
    """Least element common to all members, or ``None``."""
    ms = fam.members()
    if ms.size == 0:
        return None
    common = int(np.bitwise_and.reduce(ms))
    if common == 0:
        return None
    return (common & -common).bit_length() - 1


def oracle_is_filter(fam: OracleFamily) -> bool:
    if fam.table[0] or not fam.table[fam.full]:
        return False
    ms = fam.members()
    return bool(fam.table[np.bitwise_and.outer(ms, ms)].all())


def oracle_plus_invariant(fam: OracleFamily, imax: int, *, pad: bool = False) -> bool:
    """Every member shifted forward by ``1..imax`` stays a member.

    Without ``pad`` clipped elements are simply dropped; with ``pad`` the
    window ``[U - i, U)`` is added, matching :meth:`FamilySpec.plus_invariant_upto`.
    """
    ms = fam.members()
    U = fam.universe
    for i in range(1, imax + 1):
        tail = (fam.full >> (U - i)) << (U - i) if pad else 0
        if not fam.table[((ms << i) & fam.full) | tail].all():
            return False
    return True


def oracle_minus_invariant(fam: OracleFamily, imax: int, *, pad: bool = False) -> bool:
    ms = fam.members()
    U = fam.universe
    for i in range(1, imax + 1):
        tail = (fam.full >> (U - i)) << (U - i) if pad else 0
        if not fam.table[(ms >> i) | tail].all():
            return False
    return True
