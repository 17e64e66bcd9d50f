"""Circle rotation and the skew map ``(x, y) -> (x + alpha, x + y)`` on the torus.

Open sets are grid boxes of side ``1/m``.  Rotation transfer sets are exact
for the floating-point ``alpha`` actually stored (float comparisons with an
error margin, falling back to rational arithmetic near the boundary).
Everything built from a lattice sample of a box is a lower bound.

Orbits use closed forms.  ``frac(k * v)`` is evaluated by splitting ``v``
into a 30-bit fixed-point head, whose products with integers are exact in
int64, and a tiny tail.
"""

from __future__ import annotations

import bisect
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .exceptions import SchemaError
from .timeset import TimeSet

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_HEAD_BITS = 30
_HEAD_SCALE = float(1 << _HEAD_BITS)
_HEAD_MASK = (1 << _HEAD_BITS) - 1
_EDGE_EPS = 1e-9


def frac_mul(k, v) -> np.ndarray:
    """``frac(k * v)`` for nonnegative integers ``k`` and ``v`` in ``[0, 1)``.

    Accurate to about ``k * 2**-82`` as long as ``k < 2**33``.
    """
    k = np.asarray(k, dtype=np.int64)
    v = np.asarray(v, dtype=np.float64)
    head = np.floor(v * _HEAD_SCALE).astype(np.int64)
    tail = v - head / _HEAD_SCALE
    out = ((k * head) & _HEAD_MASK) / _HEAD_SCALE + k * tail
    return out - np.floor(out)


def _two_sum(a: float, b: float) -> tuple[float, float]:
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def _parse_alpha(alpha) -> float:
    if isinstance(alpha, str):
        if alpha == "golden":
            return GOLDEN
        if "/" in alpha:
            raise ValueError(f"rational rotation number {alpha!r} rejected")
        try:
            alpha = float(alpha)
        except ValueError:
            raise ValueError(f"bad rotation number {alpha!r}") from None
    if isinstance(alpha, (Fraction, int)) and not isinstance(alpha, bool):
        raise ValueError(f"rational rotation number {alpha} rejected")
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha {alpha} outside (0, 1)")
    return alpha


@dataclass(frozen=True)
class GridBox:
    """Axis-aligned box ``prod [i/m, (i+1)/m)``."""

    indices: tuple
    m: int

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx or any(not 0 <= i < self.m for i in idx):
            raise ValueError(f"box indices {idx} outside [0, {self.m})")
        object.__setattr__(self, "indices", idx)

    @property
    def lower(self) -> np.ndarray:
        return np.array(self.indices, dtype=np.float64) / self.m

    def contains(self, pts: np.ndarray) -> np.ndarray:
        cells = np.floor(pts * self.m).astype(np.int64)
        return np.all(cells == np.array(self.indices), axis=-1)

    def lattice(self, s: int) -> np.ndarray:
        """Centered ``s``-per-axis lattice; refining ``s`` by 3 keeps every old point."""
        ticks = (np.arange(s) + 0.5) / (s * self.m)
        axes = [self.lower[a] + ticks for a in range(len(self.indices))]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([g.ravel() for g in mesh], axis=-1)


class TorusSystem:
    """Rotation of the circle (``kind="rotation"``) or the skew map of the 2-torus."""

    def __init__(self, kind: str = "rotation", alpha: Union[float, str] = "golden",
                 seed: Optional[Sequence[float]] = None, horizon: int = 10_000,
                 grid: int = 10, sample: int = 8):
        if kind not in ("rotation", "skew"):
            raise ValueError(f"unknown map kind {kind!r}")
        self.kind = kind
        self.dim = 1 if kind == "rotation" else 2
        self.alpha = _parse_alpha(alpha)
        self._alpha_label = "golden" if alpha == "golden" else self.alpha
        seed = [0.0] * self.dim if seed is None else [float(c) for c in seed]
        if len(seed) != self.dim or any(not 0.0 <= c < 1.0 for c in seed):
            raise ValueError(f"seed must be {self.dim} coordinates in [0, 1)")
        if horizon < 1 or grid < 1 or sample < 1:
            raise ValueError("horizon, grid and sample must be positive")
        if horizon > 1 << 17 and kind == "skew":
            # n(n-1)/2 times a 30-bit head must stay inside int64
            raise ValueError("skew closed form is limited to horizons up to 2**17")
        self.seed = tuple(seed)
        self.horizon = horizon
        self.grid = grid
        self.sample = sample
        self._orbit: Optional[np.ndarray] = None

    def __repr__(self) -> str:
        return (f"TorusSystem({self.kind}, alpha={self.alpha:.12g}, H={self.horizon}, "
                f"m={self.grid}, s={self.sample})")

    def descriptor(self) -> dict:
        return {"kind": self.kind, "alpha": self._alpha_label, "seed": list(self.seed),
                "horizon": self.horizon, "grid": self.grid, "sample": self.sample}

    @classmethod
    def from_descriptor(cls, doc: dict) -> "TorusSystem":
        if "kind" not in doc:
            raise SchemaError("field 'kind': missing from system descriptor")
        try:
            return cls(doc["kind"], doc.get("alpha", "golden"), doc.get("seed"),
                       doc.get("horizon", 10_000), doc.get("grid", 10), doc.get("sample", 8))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"system descriptor: {exc}") from None

    def refined(self, factor: int = 3) -> "TorusSystem":
        return TorusSystem(self.kind, self._alpha_label, self.seed, self.horizon,
                           self.grid, self.sample * factor)

    def box(self, *indices: int) -> GridBox:
        if len(indices) != self.dim:
            raise ValueError(f"a box needs {self.dim} indices")
        return GridBox(indices, self.grid)

    def boxes(self) -> list:
        return [GridBox(ix, self.grid)
                for ix in itertools.product(range(self.grid), repeat=self.dim)]

    # -- orbits ---------------------------------------------------------------

    def orbits_from(self, starts: np.ndarray) -> np.ndarray:
        """Closed-form orbits, shape ``(len(starts), H, dim)``."""
        starts = np.atleast_2d(np.asarray(starts, dtype=np.float64))
        n = np.arange(self.horizon, dtype=np.int64)
        xs = starts[:, 0:1] + frac_mul(n, self.alpha)[None, :]
        xs -= np.floor(xs)
        if self.kind == "rotation":
            return xs[:, :, None]
        tri = n * (n - 1) // 2
        ys = (starts[:, 1:2] + frac_mul(n[None, :], starts[:, 0:1])
              + frac_mul(tri, self.alpha)[None, :])
        ys -= np.floor(ys)
        return np.stack([xs, ys], axis=-1)

    def orbit(self) -> np.ndarray:
        """Seed orbit, shape ``(H, dim)``, coordinates in ``[0, 1)``."""
        if self._orbit is None:
            self._orbit = self.orbits_from(np.array([self.seed]))[0]
            self._orbit.flags.writeable = False
        return self._orbit

    def step(self, p: Sequence[float]) -> tuple:
        if self.kind == "rotation":
            return ((p[0] + self.alpha) % 1.0,)
        return ((p[0] + self.alpha) % 1.0, (p[0] + p[1]) % 1.0)

    def iterate(self) -> np.ndarray:
        """Orbit by repeated compensated addition; a cross-check for :meth:`orbit`."""
        out = np.empty((self.horizon, self.dim))
        x, xc = self.seed[0], 0.0
        y, yc = (self.seed[1], 0.0) if self.dim == 2 else (0.0, 0.0)
        for t in range(self.horizon):
            out[t, 0] = (x + xc) % 1.0
            if self.dim == 2:
                out[t, 1] = (y + yc) % 1.0
                y, e = _two_sum(y, x)
                yc += e + xc
                shift = math.floor(y)
                y -= shift
            x, e = _two_sum(x, self.alpha)
            xc += e
            x -= math.floor(x)
        return out


# -- hit sets -----------------------------------------------------------------

def n_hit_numeric(sys: TorusSystem, box: GridBox) -> TimeSet:
    """Times the seed orbit spends in ``box``."""
    return TimeSet.from_mask(box.contains(sys.orbit()))


def _rotation_transfers(sys: TorusSystem, U: GridBox, V: GridBox) -> np.ndarray:
    # equal arcs [a, a+w) + n alpha and [b, b+w) meet iff frac(n alpha + a - b) lies within w of 0
    w = 1.0 / sys.grid
    H = sys.horizon
    shift = (U.indices[0] - V.indices[0]) / sys.grid
    c = frac_mul(np.arange(H, dtype=np.int64), sys.alpha) + shift
    c -= np.floor(c)
    hit = (c < w) | (c > 1.0 - w)
    unsure = np.flatnonzero((np.abs(c - w) < _EDGE_EPS) | (np.abs(c - (1.0 - w)) < _EDGE_EPS)
                            | (c < _EDGE_EPS) | (c > 1.0 - _EDGE_EPS))
    if unsure.size:
        a = Fraction(sys.alpha)
        wf = Fraction(1, sys.grid)
        sf = Fraction(U.indices[0] - V.indices[0], sys.grid)
        for n in unsure.tolist():
            cf = (n * a + sf) % 1
            hit[n] = cf < wf or cf > 1 - wf
    return hit


def N_hit_numeric(sys: TorusSystem, U: GridBox, V: GridBox) -> TimeSet:
    """Transfer times from ``U`` to ``V``.

    Exact for rotations.  For the skew map, ``n`` is included when some
    lattice sample point of ``U`` lands in ``V`` at time ``n``.
    """
    if sys.kind == "rotation":
        return TimeSet.from_mask(_rotation_transfers(sys, U, V))
    orbits = sys.orbits_from(U.lattice(sys.sample))
    return TimeSet.from_mask(V.contains(orbits).any(axis=0))


def _lattice_differences(pts: np.ndarray) -> np.ndarray:
    """Distinct differences ``p - q`` between sample points, one sign per pair."""
    i, j = np.triu_indices(pts.shape[0], k=1)
    d = pts[i] - pts[j]
    flip = (d[:, 0] < 0) | ((d[:, 0] == 0) & (d[:, -1] < 0))
    d[flip] *= -1
    return np.unique(np.round(d, 12), axis=0)


def S_hit_numeric(sys: TorusSystem, box: GridBox, delta: float) -> TimeSet:
    """Times at which two lattice samples of ``box`` are more than ``delta`` apart.

    Distance is the largest per-axis circle distance.  Both maps are affine
    with linear part ``(dx, dy) -> (dx, dx + dy)``, so only the distinct
    sample differences need to be evolved.
    """
    if not 0.0 < delta < 0.5:
        raise ValueError(f"delta {delta} outside (0, 1/2)")
    diffs = _lattice_differences(box.lattice(sys.sample))
    mask = np.zeros(sys.horizon, dtype=bool)
    if diffs.size == 0:
        return TimeSet.from_mask(mask)
    dx = np.abs(diffs[:, 0])
    mask |= bool((np.minimum(dx, 1.0 - dx) > delta).any())
    if sys.kind == "skew":
        n = np.arange(sys.horizon, dtype=np.int64)
        for chunk in np.array_split(diffs, max(1, diffs.shape[0] // 32)):
            dy = chunk[:, 1:2] + frac_mul(n[None, :], chunk[:, 0:1])
            dy -= np.floor(dy)
            mask |= (np.minimum(dy, 1.0 - dy) > delta).any(axis=0)
    return TimeSet.from_mask(mask)


def three_distance_gap_bound(alpha: float, arc_len: float, limit: int = 1 << 20) -> int:
    """Smallest ``N`` such that every gap between ``{k alpha}``, ``k < N``, is shorter than ``arc_len``.

    Then every open arc of length ``arc_len`` contains some ``(j + k) alpha``
    with ``k < N``, whatever ``j`` is, so each return-time set to such an arc
    misses at most ``N - 1`` consecutive times.
    """
    if not 0.0 < arc_len <= 1.0:
        raise ValueError("arc length must be in (0, 1]")
    pts = [0.0]
    for N in range(2, limit):
        bisect.insort(pts, float(frac_mul(N - 1, alpha)))
        widest = max(1.0 - pts[-1] + pts[0], max(b - a for a, b in zip(pts, pts[1:])))
        if widest < arc_len:
            return N
    raise ValueError(f"no gap bound below {limit}")
