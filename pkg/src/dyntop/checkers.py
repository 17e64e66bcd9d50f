"""Finite-horizon verdicts for transitivity, mixing, sensitivity and related properties.

Each checker returns a :class:`Verdict`.  Outcomes follow one rule: a claim
backed by a found witness may be reported as ``holds`` from lower-bound hit
sets, but a missing witness becomes ``fails`` only when the hit sets are
exact; otherwise it is ``not-found-at-horizon``.

Word tuples are enumerated in length-lexicographic order and the first
failing tuple is reported, so witnesses are reproducible.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .exceptions import SchemaError
from .families import FamilySpec
from .limits import is_kF_transitive_point, omega_approx
from .numeric import GridBox, N_hit_numeric, S_hit_numeric, TorusSystem
from .symbolic import (
    N_hit, OpenSet, Point, S_hit_report, SymbolicSystem, n_family, n_hit, s_family, word_str,
)
from .timeset import TimeSet, find_fs_subset, verify_fs

HOLDS = "holds"
FAILS = "fails"
NOT_FOUND = "not-found-at-horizon"
OUTCOMES = (HOLDS, FAILS, NOT_FOUND)
SCHEMA_TAG = "dyntop/1"
MINIMALITY_NOTE = "minimality assumed from theory"

VERDICT_SCHEMA = {
    "type": "object",
    "required": ["schema", "property", "outcome", "witnesses", "parameters", "exact"],
    "properties": {
        "schema": {"const": SCHEMA_TAG},
        "property": {"type": "string"},
        "outcome": {"enum": list(OUTCOMES)},
        "witnesses": {"type": "array"},
        "parameters": {"type": "object"},
        "exact": {"type": "boolean"},
        "notes": {"type": "array", "items": {"type": "string"}},
        "details": {"type": "object"},
    },
    "additionalProperties": False,
}


@dataclass
class Verdict:
    property: str
    outcome: str
    witnesses: list
    parameters: dict
    exact: bool
    notes: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")

    @property
    def holds(self) -> bool:
        return self.outcome == HOLDS

    def to_dict(self) -> dict:
        return {"schema": SCHEMA_TAG, **asdict(self)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, doc: dict) -> "Verdict":
        if doc.get("schema") != SCHEMA_TAG:
            raise SchemaError(f"field 'schema': expected {SCHEMA_TAG!r}")
        try:
            return cls(doc["property"], doc["outcome"], list(doc["witnesses"]),
                       dict(doc["parameters"]), bool(doc["exact"]),
                       list(doc.get("notes", [])), dict(doc.get("details", {})))
        except KeyError as exc:
            raise SchemaError(f"field {exc.args[0]!r}: missing from verdict") from None
        except ValueError as exc:
            raise SchemaError(f"field 'outcome': {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "Verdict":
        return cls.from_dict(json.loads(text))

    def csv_row(self) -> list:
        witness = json.dumps(self.witnesses[0], sort_keys=True) if self.witnesses else ""
        return [self.property, self.outcome, witness,
                json.dumps(self.parameters, sort_keys=True)]


CSV_HEADER = ["property", "outcome", "witness", "params"]


def verdicts_to_csv(verdicts: Iterable[Verdict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for v in verdicts:
        writer.writerow(v.csv_row())
    return buf.getvalue()


def verdicts_to_markdown(verdicts: Iterable[Verdict]) -> str:
    lines = ["| property | outcome | exact | witness | params |", "|---|---|---|---|---|"]
    for v in verdicts:
        prop, outcome, witness, params = v.csv_row()
        lines.append(f"| {prop} | {outcome} | {str(v.exact).lower()} | {witness} | {params} |")
    return "\n".join(lines) + "\n"


def combine_exit_code(verdicts: Sequence[Verdict]) -> int:
    """0 if everything holds, 1 if anything fails, 2 if only inconclusive outcomes remain."""
    outcomes = {v.outcome for v in verdicts}
    if FAILS in outcomes:
        return 1
    if NOT_FOUND in outcomes:
        return 2
    return 0


# -- helpers ------------------------------------------------------------------

def _pmap(fn: Callable, items: list, threads: int) -> list:
    if threads <= 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def words_upto(sys: SymbolicSystem, L: int) -> list:
    if not 1 <= L <= sys.lmax:
        raise ValueError(f"word length {L} outside [1, {sys.lmax}]")
    return [w for l in range(1, L + 1) for w in sys.admissible_words(l)]


def _cyl(w) -> OpenSet:
    return OpenSet((tuple(w),))


def _transfer_table(sys: SymbolicSystem, words: list, threads: int = 1):
    pairs = [(u, v) for u in words for v in words]
    sets = _pmap(lambda p: N_hit(sys, _cyl(p[0]), _cyl(p[1])), pairs, threads)
    return pairs, sets


def _miss(found_all: bool, exact: bool) -> str:
    if found_all:
        return HOLDS
    return FAILS if exact else NOT_FOUND


def _params(sys, **extra) -> dict:
    out = {"H": sys.horizon}
    out.update(extra)
    return out


def _pair_json(u, v) -> list:
    return [word_str(u), word_str(v)]


def _nonempty_products(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """``out[i, j]`` is True iff ``rows[i] & cols[j]`` is nonempty."""
    return (rows.astype(np.float32) @ cols.astype(np.float32).T) > 0.5


# -- transitivity and mixing ---------------------------------------------------

def check_transitive(sys: SymbolicSystem, L: int, *, threads: int = 1) -> Verdict:
    """Every ``N(C[u], C[v])`` with ``|u|, |v| <= L`` is nonempty."""
    words = words_upto(sys, L)
    pairs, sets = _transfer_table(sys, words, threads)
    bad = [p for p, s in zip(pairs, sets) if not s]
    witnesses = [{"pair": _pair_json(*bad[0])}] if bad else []
    return Verdict("transitive", _miss(not bad, sys.exact), witnesses,
                   _params(sys, L=L), sys.exact)


def check_totally_transitive(sys: SymbolicSystem, L: int, kmax: int, *,
                             threads: int = 1) -> Verdict:
    """For each ``j <= kmax`` every ``N(C[u], C[v])`` contains a multiple of ``j``."""
    if kmax < 1:
        raise ValueError("kmax must be positive")
    words = words_upto(sys, L)
    pairs, sets = _transfer_table(sys, words, threads)
    for j in range(1, kmax + 1):
        mult = TimeSet.residues(sys.horizon, j, [0])
        for p, s in zip(pairs, sets):
            if s.isdisjoint(mult):
                return Verdict("totally-transitive", _miss(False, sys.exact),
                               [{"power": j, "pair": _pair_json(*p)}],
                               _params(sys, L=L, kmax=kmax), sys.exact)
    return Verdict("totally-transitive", HOLDS, [], _params(sys, L=L, kmax=kmax), sys.exact)


def check_weak_mixing(sys: SymbolicSystem, L: int, *, threads: int = 1) -> Verdict:
    """All pairwise intersections of transfer sets are nonempty (transitivity of the square)."""
    words = words_upto(sys, L)
    pairs, sets = _transfer_table(sys, words, threads)
    M = np.array([s.mask for s in sets], dtype=bool)
    meet = _nonempty_products(M, M)
    bad = np.argwhere(~np.triu(meet) & np.triu(np.ones_like(meet)))
    if bad.size:
        i, j = bad[0]
        w = [{"pairs": [_pair_json(*pairs[i]), _pair_json(*pairs[j])]}]
        return Verdict("weak-mixing", _miss(False, sys.exact), w, _params(sys, L=L), sys.exact)
    return Verdict("weak-mixing", HOLDS, [], _params(sys, L=L), sys.exact)


def check_mixing(sys: SymbolicSystem, L: int, threshold: Optional[int] = None, *,
                 threads: int = 1) -> Verdict:
    """Every transfer set contains the tail ``[t, H)`` for some ``t <= threshold``.

    The threshold defaults to ``H // 2``; the per-pair tail starts are reported.
    """
    thr = sys.horizon // 2 if threshold is None else threshold
    words = words_upto(sys, L)
    pairs, sets = _transfer_table(sys, words, threads)
    starts = {f"{word_str(u)}>{word_str(v)}": s.cofinite_from() for (u, v), s in zip(pairs, sets)}
    bad = [(p, s.cofinite_from()) for p, s in zip(pairs, sets)
           if s.cofinite_from() is None or s.cofinite_from() > thr]
    known = [t for t in starts.values() if t is not None]
    details = {"tail_starts": starts, "max_tail_start": max(known) if known else None}
    params = _params(sys, L=L, threshold=thr)
    if bad:
        (u, v), t = bad[0]
        return Verdict("mixing", _miss(False, sys.exact),
                       [{"pair": _pair_json(u, v), "tail_start": t}], params, sys.exact,
                       details=details)
    return Verdict("mixing", HOLDS, [], params, sys.exact, details=details)


def check_transitive_compact(sys: SymbolicSystem, points: Sequence[Point], Lgen: int,
                             L: int) -> Verdict:
    """Each point has a nonempty limit-set approximation for the transfer-set family."""
    fam = n_family(sys, Lgen)
    return _family_compact("transitive-compact", sys, fam, points, L,
                           _params(sys, Lgen=Lgen, L=L, points=len(points)))


def _family_compact(name: str, sys: SymbolicSystem, fam: FamilySpec, points, L: int,
                    params: dict, exact: Optional[bool] = None) -> Verdict:
    exact = sys.exact if exact is None else exact
    details = {"fip_witness": fam.has_fip(), "generators": len(fam.generators)}
    if not fam.is_proper():
        return Verdict(name, _miss(False, exact), [{"improper_family": True}], params, exact,
                       ["some generator is empty"], details)
    for idx, x in enumerate(points):
        if not omega_approx(sys, x, fam, L):
            return Verdict(name, _miss(False, exact), [{"point": idx, "kind": x.kind}],
                           params, exact, details=details)
    return Verdict(name, HOLDS, [], params, exact, details=details)


# -- sensitivity ----------------------------------------------------------------

def _spread_table(sys: SymbolicSystem, words: list, resolution: int, threads: int = 1):
    reports = _pmap(lambda w: S_hit_report(sys, _cyl(w), resolution), words, threads)
    exact = all(r.exact for r in reports)
    capped = any(r.capped for r in reports)
    return [r.times for r in reports], exact, capped


def check_multi_sensitive(sys: SymbolicSystem, k: int, resolution: int, L: int, *,
                          threads: int = 1) -> Verdict:
    """Every ``k`` cylinders of length ``<= L`` share a spreading time at the given resolution."""
    if k < 1:
        raise ValueError("k must be positive")
    words = words_upto(sys, L)
    sets, exact, capped = _spread_table(sys, words, resolution, threads)
    params = _params(sys, k=k, resolution=resolution, L=L)
    details = {"occurrence_cap": sys.occurrence_cap, "capped": capped} if sys.backend == "orbit" else {}
    for combo in itertools.combinations_with_replacement(range(len(words)), k):
        common = sets[combo[0]]
        for i in combo[1:]:
            common = common & sets[i]
        if not common:
            return Verdict("multi-sensitive", _miss(False, exact),
                           [{"cylinders": [word_str(words[i]) for i in combo]}],
                           params, exact, details=details)
    return Verdict("multi-sensitive", HOLDS, [], params, exact, details=details)


def check_transitively_sensitive(sys: SymbolicSystem, resolution: int, L: int, *,
                                 threads: int = 1) -> Verdict:
    """Each spreading set ``S(C[w])`` meets each transfer set ``N(C[u], C[v])``."""
    words = words_upto(sys, L)
    spreads, exact_s, capped = _spread_table(sys, words, resolution, threads)
    pairs, transfers = _transfer_table(sys, words, threads)
    exact = exact_s and sys.exact
    S = np.array([s.mask for s in spreads], dtype=bool)
    N = np.array([s.mask for s in transfers], dtype=bool)
    meet = _nonempty_products(S, N)
    params = _params(sys, resolution=resolution, L=L)
    bad = np.argwhere(~meet)
    if bad.size:
        i, j = bad[0]
        return Verdict("transitively-sensitive", _miss(False, exact),
                       [{"spread": word_str(words[i]), "pair": _pair_json(*pairs[j])}],
                       params, exact)
    return Verdict("transitively-sensitive", HOLDS, [], params, exact)


def check_sensitive_compact(sys: SymbolicSystem, points: Sequence[Point], resolution: int,
                            Lgen: int, L: int) -> Verdict:
    """Each point has a nonempty limit-set approximation for the spreading-set family."""
    fam = s_family(sys, resolution, Lgen)
    exact = all(S_hit_report(sys, _cyl(w), resolution).exact for w in sys.admissible_words(Lgen))
    return _family_compact("sensitive-compact", sys, fam, points, L,
                           _params(sys, resolution=resolution, Lgen=Lgen, L=L,
                                   points=len(points)), exact)


# -- products -------------------------------------------------------------------

def check_weak_disjoint(sysA: SymbolicSystem, sysB: SymbolicSystem, L: int,
                        points: Optional[Sequence[Point]] = None, *,
                        threads: int = 1) -> Verdict:
    """Transitivity of the product, plus the transitive-point form when points are given.

    The point form asks for a supplied point of ``sysA`` that visits every
    ``L``-word inside every transfer set of ``sysB``.  It can only be refuted
    when ``sysA`` is periodic and the points cover its whole orbit.
    """
    if sysA.horizon != sysB.horizon:
        raise ValueError("systems must share a horizon")
    wa, wb = words_upto(sysA, L), words_upto(sysB, L)
    pa, na = _transfer_table(sysA, wa, threads)
    pb, nb = _transfer_table(sysB, wb, threads)
    exact = sysA.exact and sysB.exact
    meet = _nonempty_products(np.array([s.mask for s in na]), np.array([s.mask for s in nb]))
    params = _params(sysA, L=L)
    bad = np.argwhere(~meet)
    if bad.size:
        i, j = bad[0]
        outcome = _miss(False, exact)
        witnesses = [{"pair_a": _pair_json(*pa[i]), "pair_b": _pair_json(*pb[j]),
                      "transfers_a": na[i].members[:8], "transfers_b": nb[j].members[:8]}]
    else:
        outcome, witnesses = HOLDS, []
    details = {}
    if points is not None:
        details["point_form"] = weak_disjoint_point_form(sysA, sysB, L, points)
    return Verdict("weak-disjoint", outcome, witnesses, params, exact, details=details)


def weak_disjoint_point_form(sysA: SymbolicSystem, sysB: SymbolicSystem, L: int,
                             points: Sequence[Point]) -> str:
    famB = n_family(sysB, L)
    for x in points:
        if is_kF_transitive_point(sysA, x, famB, L):
            return HOLDS
    covers_orbit = False
    if sysA.period is not None and sysB.exact:
        p = len(sysA.period)
        phases = set()
        for x in points:
            head = x.symbols[:p].tolist()
            for r in range(p):
                if head == list(np.roll(np.array(sysA.period), -r)):
                    phases.add(r)
        covers_orbit = len(phases) == p
    return FAILS if covers_orbit else NOT_FOUND


# -- IP sets, Li-Yorke pairs, largeness -----------------------------------------------

def ip_witness(sys: SymbolicSystem, x: Point, G: OpenSet, U: OpenSet, V: OpenSet,
               n: int) -> Optional[list]:
    """Generators of a finite-sums set of size ``n`` inside ``n_hit(x, G) & N(U, V)``."""
    if not 1 <= n <= 10:
        raise ValueError("n must be in [1, 10]")
    target = n_hit(sys, x, G) & N_hit(sys, U, V)
    ps = find_fs_subset(target, n)
    if ps is not None and not verify_fs(target, ps):
        raise AssertionError("finite-sums witness failed verification")
    return ps


def check_ip(sys: SymbolicSystem, x: Point, G: OpenSet, U: OpenSet, V: OpenSet,
             n: int) -> Verdict:
    """Only an empty target refutes; a nonempty target without a witness is inconclusive."""
    ps = ip_witness(sys, x, G, U, V, n)
    params = _params(sys, n=n, G=G.to_list(), U=U.to_list(), V=V.to_list())
    exact = sys.exact
    if ps is None:
        target = n_hit(sys, x, G) & N_hit(sys, U, V)
        outcome = _miss(False, exact) if not target else NOT_FOUND
        return Verdict("ip-witness", outcome, [], params, exact,
                       details={"target_size": len(target)})
    return Verdict("ip-witness", HOLDS, [{"generators": ps}], params, exact)


def liyorke_scan(sys: SymbolicSystem, pairs: Sequence[tuple], k: int, k_sep: int) -> Verdict:
    """Look for pairs that agree on some ``[n, n + k)`` and still differ late in the horizon.

    A pair is counted as not asymptotic when it disagrees inside
    ``[n, n + k_sep)`` for some ``n`` in the final quarter of the horizon.
    Neither proximality nor asymptoticity can be refuted at a finite
    horizon, so an empty scan is inconclusive.
    """
    H = sys.horizon
    if not (1 <= k <= sys.lmax and 1 <= k_sep <= sys.lmax):
        raise ValueError(f"k and k_sep must be in [1, {sys.lmax}]")
    late = H - H // 4
    found = []
    rows = []
    for idx, (x, y) in enumerate(pairs):
        need = H + max(k, k_sep) - 1
        if len(x) < need or len(y) < need:
            raise ValueError(f"pair {idx} is shorter than {need} symbols")
        diff = (x.symbols[:need] != y.symbols[:need]).astype(np.int64)
        csum = np.concatenate([[0], np.cumsum(diff)])
        agree = np.flatnonzero(csum[k:H + k] - csum[:H] == 0)
        differ_late = np.flatnonzero(csum[late + k_sep:H + k_sep] - csum[late:H] > 0)
        proximal = agree.size > 0
        non_asym = differ_late.size > 0
        rows.append({"pair": idx, "proximal": proximal, "non_asymptotic": non_asym})
        if proximal and non_asym:
            found.append({"pair": idx, "agree_at": int(agree[-1]),
                          "differ_at": int(late + differ_late[0])})
    params = _params(sys, k=k, k_sep=k_sep, pairs=len(pairs))
    outcome = HOLDS if found else NOT_FOUND
    return Verdict("li-yorke", outcome, found, params, False, details={"scan": rows})


def largeness_report(F: TimeSet, fs_bound: int = 5) -> dict:
    """Size, tail, gap, run and finite-sums diagnostics for a time set."""
    run = F.max_run()
    sweep = {}
    if run:
        for r in range(1, min(run, 16) + 1):
            sweep[r] = F.run_starts(r).max_gap()
    depth = 0
    for n in range(1, fs_bound + 1):
        if find_fs_subset(F, n) is None:
            break
        depth = n
    return {"card": len(F), "cofinite_from": F.cofinite_from(), "gap": F.max_gap(),
            "max_run": run, "run_start_gaps": sweep, "fs_depth": depth}


def transfer_family_overlap(sys: SymbolicSystem, fam: FamilySpec, L: int) -> dict:
    """Smallest ``|N(C[u], C[v]) & G|`` over word pairs and generators.

    A diagnostic for how large transfer sets meet members of a family; a
    single shared element at a finite horizon says nothing about infinitude.
    """
    words = words_upto(sys, L)
    _, sets = _transfer_table(sys, words)
    sizes = [len(s & g) for s in sets for g in fam.generators]
    return {"min_overlap": min(sizes), "pairs": len(sets), "generators": len(fam.generators)}


# -- numeric --------------------------------------------------------------------

def _numeric_notes(sys: TorusSystem) -> list:
    return [MINIMALITY_NOTE]


def check_multi_sensitive_numeric(sys: TorusSystem, boxes: Sequence[GridBox],
                                  delta: float) -> Verdict:
    """The spreading sets of the given boxes share a time (lattice-sample lower bounds)."""
    common = S_hit_numeric(sys, boxes[0], delta)
    for b in boxes[1:]:
        common = common & S_hit_numeric(sys, b, delta)
    params = {"H": sys.horizon, "delta": delta, "boxes": [list(b.indices) for b in boxes],
              "sample": sys.sample, "kind": sys.kind}
    if common:
        return Verdict("multi-sensitive", HOLDS, [{"time": common.min()}], params, False,
                       _numeric_notes(sys))
    return Verdict("multi-sensitive", NOT_FOUND, [], params, False, _numeric_notes(sys))


def check_weak_mixing_numeric(sys: TorusSystem, run_len: int = 3,
                              pairs: Optional[Sequence[tuple]] = None) -> Verdict:
    """Every transfer set between boxes contains a run of ``run_len`` consecutive times.

    Exact for rotations; lower bounds for the skew map.
    """
    if pairs is None:
        boxes = sys.boxes()
        pairs = [(U, V) for U in boxes for V in boxes]
    exact = sys.kind == "rotation"
    params = {"H": sys.horizon, "run_len": run_len, "grid": sys.grid, "kind": sys.kind}
    for U, V in pairs:
        if not N_hit_numeric(sys, U, V).thick_at(run_len):
            return Verdict("weak-mixing", _miss(False, exact),
                           [{"boxes": [list(U.indices), list(V.indices)]}], params, exact,
                           _numeric_notes(sys))
    return Verdict("weak-mixing", HOLDS, [], params, exact, _numeric_notes(sys))


def check_transitive_numeric(sys: TorusSystem) -> Verdict:
    boxes = sys.boxes()
    exact = sys.kind == "rotation"
    params = {"H": sys.horizon, "grid": sys.grid, "kind": sys.kind}
    for U in boxes:
        for V in boxes:
            if not N_hit_numeric(sys, U, V):
                return Verdict("transitive", _miss(False, exact),
                               [{"boxes": [list(U.indices), list(V.indices)]}], params, exact,
                               _numeric_notes(sys))
    return Verdict("transitive", HOLDS, [], params, exact, _numeric_notes(sys))
