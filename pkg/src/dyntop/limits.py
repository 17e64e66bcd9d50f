"""Cell-level approximations of family limit sets.

At precision ``L`` a limit point is recorded only through the ``L``-word it
starts with (or the grid box it lies in).  A cell ``w`` belongs to the
approximation of ``omega_F(x)`` when, for every generator ``G`` of ``F``,
the point visits ``C[w]`` at some time in ``G``.  A nonempty approximation
at every precision is what compactness turns into a nonempty limit set, so
emptiness at any single precision is a certificate of emptiness while
nonemptiness is only evidence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import HorizonError
from .families import FamilySpec
from .numeric import TorusSystem
from .symbolic import Point, SymbolicSystem, decode_word, sliding_codes, word_str


@dataclass(frozen=True)
class OmegaApprox:
    precision: int
    cells: tuple
    exact: bool
    kind: str = "words"
    tail_slack: Optional[int] = field(default=None, compare=False)

    def __len__(self) -> int:
        return len(self.cells)

    def __bool__(self) -> bool:
        return bool(self.cells)

    def __contains__(self, cell) -> bool:
        return tuple(cell) in self.cells

    def to_dict(self) -> dict:
        if self.kind == "words":
            cells = [word_str(c) for c in self.cells]
        else:
            cells = [list(c) for c in self.cells]
        return {"precision": self.precision, "cells": cells, "exact": self.exact}


def _point_codes(sys: SymbolicSystem, x: Point, L: int) -> np.ndarray:
    if not 1 <= L <= sys.lmax:
        raise ValueError(f"precision {L} outside [1, {sys.lmax}]")
    H = sys.horizon
    if len(x) < H + L - 1:
        raise HorizonError(f"point prefix {len(x)} too short for H={H}, L={L}")
    return sliding_codes(x.symbols[:H + L - 1], L, sys.alphabet)


def _intersect_over(codes: np.ndarray, fam: FamilySpec) -> np.ndarray:
    common: Optional[np.ndarray] = None
    for g in fam.generators:
        seen = np.unique(codes[g.mask])
        common = seen if common is None else np.intersect1d(common, seen, assume_unique=True)
        if common.size == 0:
            break
    return common


def omega_approx(sys: SymbolicSystem, x: Point, fam: FamilySpec, L: int) -> OmegaApprox:
    """``L``-words visited inside every generator of ``fam``."""
    if fam.horizon != sys.horizon:
        raise HorizonError(f"family horizon {fam.horizon} != system horizon {sys.horizon}")
    codes = _point_codes(sys, x, L)
    common = _intersect_over(codes, fam)
    cells = tuple(decode_word(int(c), L, sys.alphabet) for c in common)
    return OmegaApprox(L, cells, True)


def omega_T_approx(sys: SymbolicSystem, x: Point, L: int,
                   tail_slack: Optional[int] = None) -> OmegaApprox:
    """``L``-words that still occur in the last ``tail_slack`` positions before ``H``.

    A tail window stands in for "infinitely often"; the slack defaults to ``H // 4``.
    """
    H = sys.horizon
    slack = H // 4 if tail_slack is None else tail_slack
    if not 0 < slack < H:
        raise ValueError(f"tail slack {slack} outside (0, {H})")
    codes = _point_codes(sys, x, L)
    common = np.unique(codes[H - slack:])
    cells = tuple(decode_word(int(c), L, sys.alphabet) for c in common)
    return OmegaApprox(L, cells, True, tail_slack=slack)


def omega_approx_numeric(sys: TorusSystem, fam: FamilySpec) -> OmegaApprox:
    """Grid boxes visited by the seed orbit inside every generator of ``fam``.

    Box membership is decided in floating point, so the result is not
    flagged exact.
    """
    if fam.horizon != sys.horizon:
        raise HorizonError(f"family horizon {fam.horizon} != system horizon {sys.horizon}")
    cells = np.floor(sys.orbit() * sys.grid).astype(np.int64)
    codes = cells[:, 0] if sys.dim == 1 else cells[:, 0] * sys.grid + cells[:, 1]
    common = _intersect_over(codes, fam)
    if sys.dim == 1:
        boxes = tuple((int(c),) for c in common)
    else:
        boxes = tuple(divmod(int(c), sys.grid) for c in common)
    return OmegaApprox(sys.grid, boxes, False, kind="boxes")


def is_kF_transitive_point(sys: SymbolicSystem, x: Point, fam: FamilySpec, L: int) -> bool:
    """Every admissible ``L``-word is visited inside every generator of ``fam``."""
    got = omega_approx(sys, x, fam, L)
    return list(got.cells) == sys.admissible_words(L)
