"""One-sided subshifts truncated at a horizon.

Two backends are supported.  ``full`` is the full shift on ``A`` symbols and
every hit set is computed exactly from cylinder combinatorics.  ``orbit`` is
the orbit closure of a stored prefix of a generating sequence; hit sets are
certified by witnesses found inside that prefix, so they are lower bounds
unless the system was built by :meth:`SymbolicSystem.periodic`, where every
point of the closure is a shift of the stored prefix.

The metric is ``d(x, y) = 2 ** -min{i : x_i != y_i}``, so a resolution ``k``
stands for ``delta = 2 ** -k``: two points are more than ``delta`` apart iff
they differ in coordinates ``[0, k)``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .exceptions import HorizonError, InadmissibleError, SchemaError
from .families import FamilySpec
from .timeset import TimeSet

Word = tuple
WordLike = Union[str, Sequence[int]]

DEFAULT_OCCURRENCE_CAP = 256
_DIRECT_SCAN_LIMIT = 64


def parse_word(w: WordLike) -> Word:
    """``"0110"`` or ``[0, 1, 1, 0]`` -> ``(0, 1, 1, 0)``."""
    if isinstance(w, str):
        if not w or not w.isdigit():
            raise ValueError(f"bad word {w!r}")
        return tuple(int(c) for c in w)
    out = tuple(int(c) for c in w)
    if not out:
        raise ValueError("empty word")
    return out


def word_str(w: Word) -> str:
    return "".join(str(c) for c in w)


def word_code(w: Word, alphabet: int) -> int:
    code = 0
    for c in w:
        code = code * alphabet + c
    return code


def decode_word(code: int, length: int, alphabet: int) -> Word:
    out = []
    for _ in range(length):
        code, r = divmod(code, alphabet)
        out.append(r)
    return tuple(reversed(out))


def sliding_codes(symbols: np.ndarray, length: int, alphabet: int) -> np.ndarray:
    """Base-``alphabet`` code of every window ``symbols[p:p+length]``."""
    n = symbols.size - length + 1
    if n <= 0:
        return np.zeros(0, dtype=np.int64)
    codes = np.zeros(n, dtype=np.int64)
    for j in range(length):
        codes *= alphabet
        codes += symbols[j:j + n]
    return codes


@dataclass(frozen=True)
class OpenSet:
    """A finite union of cylinders ``C[w]``."""

    cylinders: tuple

    def __post_init__(self):
        if not self.cylinders:
            raise ValueError("an open set needs at least one cylinder")
        words = sorted({parse_word(w) for w in self.cylinders}, key=lambda w: (len(w), w))
        object.__setattr__(self, "cylinders", tuple(words))

    @classmethod
    def of(cls, *words: WordLike) -> "OpenSet":
        return cls(tuple(parse_word(w) for w in words))

    @property
    def max_len(self) -> int:
        return max(len(w) for w in self.cylinders)

    def __str__(self) -> str:
        return " u ".join(f"C[{word_str(w)}]" for w in self.cylinders)

    def to_list(self) -> list:
        return [word_str(w) for w in self.cylinders]


def C(*words: WordLike) -> OpenSet:
    return OpenSet.of(*words)


@dataclass(frozen=True, eq=False)
class Point:
    """A point given by a finite prefix of its symbol sequence."""

    symbols: np.ndarray
    kind: str = "explicit"

    def __post_init__(self):
        arr = np.asarray(self.symbols, dtype=np.int64)
        arr.flags.writeable = False
        object.__setattr__(self, "symbols", arr)

    def __len__(self) -> int:
        return int(self.symbols.size)

    def shift(self, i: int) -> "Point":
        if not 0 <= i < len(self):
            raise HorizonError(f"cannot shift a prefix of length {len(self)} by {i}")
        return Point(self.symbols[i:], kind=f"{self.kind}+{i}")

    def __repr__(self) -> str:
        head = word_str(self.symbols[:16].tolist())
        return f"Point({self.kind}, {head}{'...' if len(self) > 16 else ''})"


class SymbolicSystem:
    """A subshift with a horizon ``H`` and a longest usable word length ``lmax``."""

    def __init__(self, backend: str, alphabet: int, horizon: int, lmax: int,
                 prefix: Optional[np.ndarray] = None, *, period: Optional[Word] = None,
                 occurrence_cap: int = DEFAULT_OCCURRENCE_CAP, source: Optional[str] = None):
        if backend not in ("full", "orbit"):
            raise ValueError(f"unknown backend {backend!r}")
        if alphabet < 2:
            raise ValueError("alphabet must have at least 2 symbols")
        if horizon < 1 or lmax < 1:
            raise ValueError("horizon and lmax must be positive")
        if alphabet ** lmax >= 2 ** 62:
            raise ValueError("alphabet ** lmax overflows 62-bit word codes")
        self.backend = backend
        self.alphabet = alphabet
        self.horizon = horizon
        self.lmax = lmax
        self.period = period
        self.occurrence_cap = occurrence_cap
        self.source = source
        self._codes: dict[int, np.ndarray] = {}
        self._langs: dict[int, np.ndarray] = {}
        if backend == "orbit":
            prefix = np.asarray(prefix, dtype=np.int64)
            if prefix.size < horizon + lmax:
                raise HorizonError(
                    f"prefix length {prefix.size} < H + lmax = {horizon + lmax}")
            if prefix.min() < 0 or prefix.max() >= alphabet:
                raise InadmissibleError("prefix symbol outside the alphabet")
            prefix.flags.writeable = False
            self.prefix = prefix
        else:
            self.prefix = None

    # -- constructors -----------------------------------------------------

    @classmethod
    def full_shift(cls, alphabet: int, horizon: int, lmax: int) -> "SymbolicSystem":
        return cls("full", alphabet, horizon, lmax)

    @classmethod
    def orbit_closure(cls, sequence: Sequence[int], alphabet: int, horizon: int, lmax: int,
                      *, occurrence_cap: int = DEFAULT_OCCURRENCE_CAP,
                      source: Optional[str] = None) -> "SymbolicSystem":
        """Closure of the orbit of a sequence known through a finite prefix."""
        return cls("orbit", alphabet, horizon, lmax, np.asarray(sequence),
                   occurrence_cap=occurrence_cap, source=source)

    @classmethod
    def periodic(cls, word: WordLike, alphabet: int, horizon: int, lmax: int) -> "SymbolicSystem":
        """Orbit closure of ``word`` repeated forever; hit sets are exact."""
        w = parse_word(word)
        need = horizon + lmax + len(w)
        reps = -(-need // len(w))
        return cls("orbit", alphabet, horizon, lmax, np.tile(np.array(w), reps), period=w)

    @property
    def exact(self) -> bool:
        return self.backend == "full" or self.period is not None

    def __repr__(self) -> str:
        extra = ""
        if self.period is not None:
            extra = f", period={word_str(self.period)}"
        elif self.backend == "orbit":
            extra = f", prefix={self.prefix.size}"
        return (f"SymbolicSystem({self.backend}, A={self.alphabet}, H={self.horizon}, "
                f"lmax={self.lmax}{extra})")

    def descriptor(self) -> dict:
        doc = {"backend": self.backend, "alphabet": self.alphabet,
               "horizon": self.horizon, "lmax": self.lmax}
        if self.period is not None:
            doc["word"] = word_str(self.period)
        elif self.source is not None:
            doc["source"] = self.source
        return doc

    # -- language -----------------------------------------------------------

    def _check_len(self, L: int) -> None:
        if not 1 <= L <= self.lmax:
            raise ValueError(f"word length {L} outside [1, {self.lmax}]")

    def prefix_codes(self, L: int) -> np.ndarray:
        if L not in self._codes:
            self._codes[L] = sliding_codes(self.prefix, L, self.alphabet)
        return self._codes[L]

    def language_codes(self, L: int) -> np.ndarray:
        """Sorted codes of the admissible words of length ``L``."""
        self._check_len(L)
        if L not in self._langs:
            if self.backend == "full":
                self._langs[L] = np.arange(self.alphabet ** L, dtype=np.int64)
            else:
                self._langs[L] = np.unique(self.prefix_codes(L))
        return self._langs[L]

    def admissible_words(self, L: int) -> list:
        return [decode_word(int(c), L, self.alphabet) for c in self.language_codes(L)]

    def is_admissible(self, w: Word) -> bool:
        if not 1 <= len(w) <= self.lmax or any(not 0 <= c < self.alphabet for c in w):
            return False
        if self.backend == "full":
            return True
        codes = self.language_codes(len(w))
        c = word_code(w, self.alphabet)
        i = np.searchsorted(codes, c)
        return bool(i < codes.size and codes[i] == c)

    def check_open(self, U: OpenSet) -> None:
        for w in U.cylinders:
            if len(w) > self.lmax:
                raise HorizonError(f"cylinder {word_str(w)} longer than lmax={self.lmax}")
            if not self.is_admissible(w):
                raise InadmissibleError(f"cylinder {word_str(w)} is not admissible")

    # -- points -------------------------------------------------------------

    def check_point(self, x: Point) -> None:
        s = x.symbols
        if s.size and (s.min() < 0 or s.max() >= self.alphabet):
            raise InadmissibleError("point symbol outside the alphabet")
        if self.backend == "orbit":
            L = min(self.lmax, s.size)
            have = np.unique(sliding_codes(s, L, self.alphabet))
            ok = np.isin(have, self.language_codes(L))
            if not ok.all():
                bad = decode_word(int(have[~ok][0]), L, self.alphabet)
                raise InadmissibleError(f"point contains inadmissible word {word_str(bad)}")

    def point_length(self) -> int:
        return self.horizon + self.lmax

    def generating_point(self) -> Point:
        if self.backend != "orbit":
            raise ValueError("the full shift has no stored generating point")
        return Point(self.prefix, "generating")

    def shifted_point(self, k: int) -> Point:
        x = self.generating_point()
        if self.prefix.size - k < self.horizon:
            raise HorizonError(f"shift {k} leaves fewer than H symbols of the prefix")
        return x.shift(k) if k else x

    def periodic_point(self, word: WordLike) -> Point:
        w = parse_word(word)
        n = self.point_length()
        x = Point(np.tile(np.array(w), -(-n // len(w)))[:n], f"periodic:{word_str(w)}")
        self.check_point(x)
        return x

    def explicit_point(self, symbols: Sequence[int]) -> Point:
        x = Point(np.asarray(symbols), "explicit")
        self.check_point(x)
        return x

    def random_point(self, rng: np.random.Generator) -> Point:
        if self.backend != "full":
            raise ValueError("random points are only defined on the full shift")
        return Point(rng.integers(0, self.alphabet, size=self.point_length()), "random")

    # -- occurrences --------------------------------------------------------

    def occurrence_mask(self, U: OpenSet) -> np.ndarray:
        """Positions of the prefix where some cylinder of ``U`` starts."""
        mask = np.zeros(self.prefix.size, dtype=bool)
        for w in U.cylinders:
            codes = self.prefix_codes(len(w))
            mask[:codes.size] |= codes == word_code(w, self.alphabet)
        return mask

    def occurrences(self, U: OpenSet) -> tuple[np.ndarray, bool]:
        """Representative occurrence positions, at most ``occurrence_cap`` per cylinder.

        Periodic systems keep one position per phase, since same-phase
        positions give the same point.  The flag reports whether a cap cut
        the list short.
        """
        capped = False
        picks = []
        for w in U.cylinders:
            codes = self.prefix_codes(len(w))
            pos = np.flatnonzero(codes == word_code(w, self.alphabet))
            if self.period is not None:
                _, first = np.unique(pos % len(self.period), return_index=True)
                pos = np.sort(pos[first])
            if pos.size > self.occurrence_cap:
                pos, capped = pos[:self.occurrence_cap], True
            picks.append(pos)
        return np.unique(np.concatenate(picks)), capped


# -- hit sets ---------------------------------------------------------------

def n_hit(sys: SymbolicSystem, x: Point, G: OpenSet) -> TimeSet:
    """Times ``n < H`` at which ``x`` shifted by ``n`` lies in ``G``."""
    H = sys.horizon
    sys.check_open(G)
    if len(x) < H + G.max_len - 1:
        raise HorizonError(f"point prefix {len(x)} too short for H={H} and |w|={G.max_len}")
    mask = np.zeros(H, dtype=bool)
    for w in G.cylinders:
        codes = sliding_codes(x.symbols[:H + len(w) - 1], len(w), sys.alphabet)
        mask |= codes == word_code(w, sys.alphabet)
    return TimeSet.from_mask(mask)


def _overlap_ok(u: Word, v: Word, n: int) -> bool:
    # can a point start with u and have v at offset n?
    top = min(len(u), n + len(v))
    return all(u[j] == v[j - n] for j in range(n, top))


def _lagged_hits(a: np.ndarray, b: np.ndarray, H: int) -> np.ndarray:
    """``out[n]`` is True iff ``a[p] and b[p + n]`` for some ``p``, ``0 <= n < H``."""
    out = np.zeros(H, dtype=bool)
    pa = np.flatnonzero(a)
    if pa.size == 0 or not b.any():
        return out
    if pa.size <= _DIRECT_SCAN_LIMIT:
        for p in pa:
            seg = b[p:p + H]
            out[:seg.size] |= seg
        return out
    size = 1 << int(a.size + H).bit_length()
    fa = np.fft.rfft(a.astype(np.float64), size)
    fb = np.fft.rfft(b.astype(np.float64), size)
    corr = np.fft.irfft(np.conj(fa) * fb, size)[:H]
    return corr > 0.5


def N_hit(sys: SymbolicSystem, U: OpenSet, V: OpenSet) -> TimeSet:
    """Transfer times ``{n < H : U meets T^-n V}``.

    Exact on the full shift.  On an orbit closure, ``n`` is included iff the
    stored prefix shows a ``U`` occurrence at ``p`` and a ``V`` occurrence at
    ``p + n``.
    """
    H = sys.horizon
    sys.check_open(U)
    sys.check_open(V)
    if sys.backend == "full":
        mask = np.zeros(H, dtype=bool)
        for u in U.cylinders:
            mask[len(u):] = True
            for v in V.cylinders:
                for n in range(min(len(u), H)):
                    if not mask[n] and _overlap_ok(u, v, n):
                        mask[n] = True
        return TimeSet.from_mask(mask)
    return TimeSet.from_mask(_lagged_hits(sys.occurrence_mask(U), sys.occurrence_mask(V), H))


def N_hit_product(sysA: SymbolicSystem, sysB: SymbolicSystem, U1: OpenSet, U2: OpenSet,
                  V1: OpenSet, V2: OpenSet) -> TimeSet:
    """Transfer times of ``U1 x U2`` into ``V1 x V2`` under the product map."""
    return N_hit(sysA, U1, V1) & N_hit(sysB, U2, V2)


@dataclass(frozen=True)
class SpreadReport:
    times: TimeSet
    exact: bool
    capped: bool


def S_hit_report(sys: SymbolicSystem, U: OpenSet, k: int) -> SpreadReport:
    """Times at which two points of ``U`` differ somewhere in ``[n, n + k)``."""
    H = sys.horizon
    if not 1 <= k <= sys.lmax:
        raise ValueError(f"resolution {k} outside [1, {sys.lmax}]")
    sys.check_open(U)
    if sys.backend == "full":
        mask = np.zeros(H, dtype=bool)
        words = U.cylinders
        for w1, w2 in itertools.combinations_with_replacement(words, 2):
            pinned = min(len(w1), len(w2))
            # a free coordinate in the window lets the two points disagree
            mask[max(0, pinned - k + 1):] = True
            for j in range(pinned):
                if w1[j] != w2[j]:
                    mask[max(0, j - k + 1):j + 1] = True
        return SpreadReport(TimeSet.from_mask(mask), True, False)
    pos, capped = sys.occurrences(U)
    codes = sys.prefix_codes(k)
    idx = pos[:, None] + np.arange(H)[None, :]
    valid = idx < codes.size
    vals = codes[np.minimum(idx, codes.size - 1)]
    big = np.iinfo(np.int64).max
    lo = np.where(valid, vals, big).min(axis=0)
    hi = np.where(valid, vals, -1).max(axis=0)
    mask = (hi >= 0) & (lo != hi)
    return SpreadReport(TimeSet.from_mask(mask), sys.exact and not capped, capped)


def S_hit(sys: SymbolicSystem, U: OpenSet, k: int) -> TimeSet:
    return S_hit_report(sys, U, k).times


def preimage(sys: SymbolicSystem, U: OpenSet, i: int) -> OpenSet:
    """``T^-i U`` as a union of cylinders ``p + w`` with ``|p| = i``."""
    if i < 0:
        raise ValueError("preimage depth must be nonnegative")
    if i == 0:
        return U
    if i + U.max_len > sys.lmax:
        raise HorizonError(f"i + |w| = {i + U.max_len} exceeds lmax={sys.lmax}")
    out = []
    for p in sys.admissible_words(i):
        for w in U.cylinders:
            pw = p + w
            if sys.is_admissible(pw):
                out.append(pw)
    if not out:
        raise InadmissibleError("preimage is empty")
    return OpenSet(tuple(out))


# -- families ----------------------------------------------------------------

def n_family(sys: SymbolicSystem, Lgen: int) -> FamilySpec:
    """Family generated by ``N(C[u], C[v])`` over admissible words of length ``Lgen``."""
    words = sys.admissible_words(Lgen)
    return FamilySpec(N_hit(sys, OpenSet((u,)), OpenSet((v,))) for u in words for v in words)


def s_family(sys: SymbolicSystem, resolution: int, Lgen: int) -> FamilySpec:
    """Family generated by ``S(C[w], resolution)`` over admissible words of length ``Lgen``."""
    return FamilySpec(S_hit(sys, OpenSet((w,)), resolution) for w in sys.admissible_words(Lgen))


# -- files -------------------------------------------------------------------

def load_sequence(path: Union[str, Path]) -> tuple[int, np.ndarray]:
    """Read a sequence file: plain digits, or JSON ``{"alphabet", "symbols"}``.

    Plain-digit files get the alphabet ``max symbol + 1`` (at least 2).
    """
    text = Path(path).read_text().strip()
    if text.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"sequence file is not valid JSON: {exc}") from None
        if not isinstance(doc.get("alphabet"), int):
            raise SchemaError("field 'alphabet': expected an integer")
        if not isinstance(doc.get("symbols"), list):
            raise SchemaError("field 'symbols': expected a list")
        symbols = np.array(doc["symbols"], dtype=np.int64)
        alphabet = doc["alphabet"]
    else:
        digits = "".join(text.split())
        if not digits.isdigit():
            raise SchemaError("sequence file must contain only digits")
        symbols = np.frombuffer(digits.encode(), dtype=np.uint8).astype(np.int64) - 48
        alphabet = max(2, int(symbols.max()) + 1)
    if symbols.size and (symbols.min() < 0 or symbols.max() >= alphabet):
        raise SchemaError("field 'symbols': symbol outside the alphabet")
    return alphabet, symbols


def system_from_descriptor(doc: dict, base_dir: Union[str, Path, None] = None) -> SymbolicSystem:
    for key in ("backend", "alphabet", "horizon", "lmax"):
        if key not in doc:
            raise SchemaError(f"field {key!r}: missing from system descriptor")
    backend, A, H, L = doc["backend"], doc["alphabet"], doc["horizon"], doc["lmax"]
    if backend == "full":
        return SymbolicSystem.full_shift(A, H, L)
    if backend != "orbit":
        raise SchemaError(f"field 'backend': unknown value {backend!r}")
    if "word" in doc:
        return SymbolicSystem.periodic(doc["word"], A, H, L)
    if "source" not in doc:
        raise SchemaError("field 'source': orbit systems need a sequence file or a 'word'")
    path = Path(doc["source"])
    if base_dir is not None and not path.is_absolute():
        path = Path(base_dir) / path
    file_alphabet, symbols = load_sequence(path)
    if file_alphabet > A:
        raise SchemaError("field 'alphabet': smaller than the sequence file's alphabet")
    return SymbolicSystem.orbit_closure(symbols, A, H, L, source=str(doc["source"]))


def words_of_length(alphabet: int, L: int) -> Iterable[Word]:
    return itertools.product(range(alphabet), repeat=L)
