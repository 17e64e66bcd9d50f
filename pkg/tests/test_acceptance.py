"""The ten acceptance criteria, each with its tolerance and runtime budget.

Run directly with ``python tests/test_acceptance.py`` or through pytest; a
pass/fail line per criterion is printed in the terminal summary.
"""

import itertools

import numpy as np
import pytest

from dyntop.checkers import (
    FAILS, HOLDS, check_multi_sensitive, check_sensitive_compact,
    check_transitively_sensitive, check_weak_disjoint, ip_witness, words_upto,
)
from dyntop.constructions import (
    a_sequence_prefix, champernowne_point, fip_counterexample_point, mixing_tail_bound,
    stage_lengths,
)
from dyntop.families import (
    FamilySpec, OracleFamily, oracle_dual, oracle_has_fip, oracle_interaction,
    oracle_is_filter, oracle_member,
)
from dyntop.limits import omega_approx
from dyntop.numeric import N_hit_numeric, S_hit_numeric, TorusSystem
from dyntop.symbolic import C, N_hit, OpenSet, S_hit, SymbolicSystem, n_hit, preimage
from dyntop.timeset import TimeSet, subset_sums


def _random_sets(rng, H, k, density):
    return rng.random((k, H)) < density


def test_01_empty_intersection_gives_empty_limit_set(criterion):
    with criterion(1, "FIP necessity: counterexample point has empty limit set", 1.0):
        rng = np.random.default_rng(101)
        H = 512
        for _ in range(50):
            k = int(rng.integers(2, 7))
            masks = _random_sets(rng, H, k, rng.uniform(0.3, 0.9))
            common = masks.all(axis=0)
            masks[int(rng.integers(k))] &= ~common
            sets = [TimeSet.from_mask(m) for m in masks]
            x = fip_counterexample_point(sets)
            sys = SymbolicSystem.full_shift(k, H, 1)
            assert not omega_approx(sys, x, FamilySpec(sets), 1)
            for i, F in enumerate(sets):
                assert n_hit(sys, x, C((i,))).isdisjoint(F)


def test_02_fip_gives_nonempty_limit_sets(criterion):
    with criterion(2, "FIP sufficiency: nonempty limit sets for random points", 5.0):
        rng = np.random.default_rng(202)
        H = 512
        sys = SymbolicSystem.full_shift(2, H, 8)
        for _ in range(50):
            k = int(rng.integers(1, 6))
            witness = int(rng.integers(0, H - 8 + 1))
            masks = _random_sets(rng, H, k, rng.uniform(0.05, 0.5))
            masks[:, witness] = True
            fam = FamilySpec(TimeSet.from_mask(m) for m in masks)
            assert fam.has_fip() is not None
            for _ in range(20):
                x = sys.random_point(rng)
                L = int(rng.integers(1, 9))
                assert omega_approx(sys, x, fam, L)


def _random_spec(rng, U):
    k = int(rng.integers(1, 5))
    gens = []
    for _ in range(k):
        size = int(rng.integers(0, 5))
        gens.append(TimeSet(U, rng.choice(U, size=size, replace=False).tolist()))
    return FamilySpec(gens)


def test_03_family_calculus_matches_oracle(criterion):
    with criterion(3, "family calculus agrees with exhaustive oracle (U=10)", 30.0):
        rng = np.random.default_rng(303)
        U = 10
        subsets = [TimeSet(U, [i for i in range(U) if bits >> i & 1]) for bits in range(1 << U)]
        for _ in range(200):
            fam, other = _random_spec(rng, U), _random_spec(rng, U)
            o1, o2 = OracleFamily.from_spec(fam), OracleFamily.from_spec(other)
            dual = oracle_dual(o1)
            member = np.array([fam.member(F) for F in subsets])
            dual_member = np.array([fam.dual_member(F) for F in subsets])
            assert np.array_equal(member, o1.table)
            assert np.array_equal(dual_member, dual.table)
            assert oracle_interaction(o1, o2) == OracleFamily.from_spec(fam.interaction(other))
            assert oracle_has_fip(o1) == fam.has_fip()
            assert oracle_dual(dual) == o1
            is_filter = fam.is_filter()
            assert is_filter == oracle_is_filter(o1)
            # the improper family up({}) is closed under intersection but is no filter
            assert is_filter == (fam.is_proper() and oracle_interaction(o1, o1) == o1)
            probe = int(rng.integers(1 << U))
            assert oracle_member(o1, probe) == fam.member(subsets[probe])


def _mixing_system(H, lmax):
    seq = a_sequence_prefix(3, 100_000).symbols
    return SymbolicSystem.orbit_closure(seq, 2, H, lmax)


def test_04_transfer_shift_identity(criterion):
    with criterion(4, "shift_minus(N(U,V), i) = N(U, T^-i V), H=4096"):
        H = 4096
        mismatches = 0
        for sys in (SymbolicSystem.full_shift(2, H, 7), _mixing_system(H, 7)):
            words = words_upto(sys, 3)
            for u, v in itertools.product(words, repeat=2):
                N = N_hit(sys, C(u), C(v))
                for i in range(0, 5):
                    # times in [H - i, H) of the pulled-back set have no counterpart below H
                    window = TimeSet.interval(H, 0, H - i)
                    if N.shift_minus(i) != N_hit(sys, C(u), preimage(sys, C(v), i)) & window:
                        mismatches += 1
        assert mismatches == 0


def _run_starts(text, k):
    marks = np.zeros(len(text), dtype=bool)
    arr = np.frombuffer(text.encode(), dtype=np.uint8)
    for sym in (48, 49):
        hit = np.ones(len(text) - k + 1, dtype=bool)
        for j in range(k):
            hit &= arr[j:len(text) - k + 1 + j] == sym
        marks[:hit.size] |= hit
    return np.flatnonzero(marks)


def test_05_combination_block_sequence(criterion):
    with criterion(5, "combination-block prefix: runs, fixed blocks, mixing tails", 10.0):
        pre = a_sequence_prefix(3, 100_000)
        text = "".join(map(str, pre.symbols.tolist()))
        lengths = stage_lengths(3)
        for k in (1, 2):
            W = lengths[k - 1] + 2 * k
            starts = _run_starts(text, k)
            first = max(0, lengths[k - 1] - W + 1)
            windows = np.arange(first, len(text) - W + 1)
            nxt = np.searchsorted(starts, windows)
            ok = (nxt < starts.size) & (starts[np.minimum(nxt, starts.size - 1)] <= windows + W - k)
            assert ok.all(), f"k={k}: window at {windows[~ok][0]} has no run"
        for k in (1, 2, 3):
            assert "0" * k in text and "1" * k in text
        H = 4096
        sys = SymbolicSystem.orbit_closure(pre.symbols, 2, H, 4)
        for w1, w2 in itertools.product(["0", "1", "10"], repeat=2):
            bound = mixing_tail_bound(w1, w2, 1)
            assert TimeSet.interval(H, bound) <= N_hit(sys, C(w1), C(w2))


def test_06_sensitivity_hierarchy(criterion):
    with criterion(6, "sensitivity hierarchy on full shift and periodic closure"):
        H, L, res = 4096, 2, 2
        full = SymbolicSystem.full_shift(2, H, 4)
        rng = np.random.default_rng(606)
        points = [full.random_point(rng) for _ in range(8)]
        assert check_multi_sensitive(full, 3, res, L).outcome == HOLDS
        assert check_sensitive_compact(full, points, res, 2, L).outcome == HOLDS
        assert check_transitively_sensitive(full, res, L).outcome == HOLDS

        alt = SymbolicSystem.periodic("01", 2, H, 4)
        alt_points = [alt.generating_point(), alt.shifted_point(1)]
        multi = check_multi_sensitive(alt, 3, res, L)
        compact = check_sensitive_compact(alt, alt_points, res, 2, L)
        trans = check_transitively_sensitive(alt, res, L)
        assert multi.outcome == compact.outcome == trans.outcome == FAILS
        assert not S_hit(alt, C(multi.witnesses[0]["cylinders"][0]), res)
        assert not S_hit(alt, C(trans.witnesses[0]["spread"]), res)
        assert compact.witnesses == [{"improper_family": True}]

        words = words_upto(full, 3)
        long_words = [w for w in words if len(w) >= res]
        for _ in range(100):
            u, v, w = (words[j] for j in rng.integers(0, len(words), 3))
            w1 = long_words[rng.integers(len(long_words))]
            w2 = [x for x in long_words if x[:res] != w1[:res]][0]
            lhs = N_hit(full, C(u), C(v)) & N_hit(full, C(w), C(w1)) & N_hit(full, C(w), C(w2))
            assert lhs <= N_hit(full, C(u), C(v)) & S_hit(full, C(w), res)


def test_07_weak_disjointness(criterion):
    with criterion(7, "weak disjointness: pair form and point form agree"):
        H, L = 1024, 2
        full = SymbolicSystem.full_shift(2, H, 4)
        alt = SymbolicSystem.periodic("01", 2, H, 4)
        pts = {"full": [champernowne_point(2, 6, full.point_length())],
               "alt": [alt.generating_point(), alt.shifted_point(1)]}
        systems = {"full": full, "alt": alt}
        v = check_weak_disjoint(full, full, L, pts["full"])
        assert v.outcome == HOLDS
        v = check_weak_disjoint(alt, alt, L, pts["alt"])
        assert v.outcome == FAILS
        a = TimeSet(H, v.witnesses[0]["transfers_a"])
        b = TimeSet(H, v.witnesses[0]["transfers_b"])
        assert {n % 2 for n in a} | {n % 2 for n in b} == {0, 1}
        assert len({n % 2 for n in a}) == len({n % 2 for n in b}) == 1
        for x, y in itertools.product(systems, repeat=2):
            v = check_weak_disjoint(systems[x], systems[y], L, pts[x])
            assert v.details["point_form"] == v.outcome, (x, y)


def test_08_ip_witness(criterion):
    with criterion(8, "IP witnesses of size 4 in visit-and-transfer sets, H=8192", 20.0):
        H = 8192
        sys = SymbolicSystem.full_shift(2, H, 3)
        x = champernowne_point(2, 9, sys.point_length())
        rng = np.random.default_rng(808)
        words = words_upto(sys, 2)
        for _ in range(20):
            G, U, V = (OpenSet((words[j],)) for j in rng.integers(0, len(words), 3))
            ps = ip_witness(sys, x, G, U, V, 4)
            assert ps is not None and len(ps) == 4
            target = n_hit(sys, x, G) & N_hit(sys, U, V)
            sums = subset_sums(ps)
            assert len(sums) == 15 and all(s in target for s in sums)


def test_09_numeric_engine(criterion):
    with criterion(9, "rotation transfers, no thick returns, skew multi-sensitivity", 5.0):
        rot = TorusSystem("rotation", alpha="golden", horizon=10_000)
        N = N_hit_numeric(rot, rot.box(0), rot.box(0))
        assert N.members[:4] == [0, 5, 8, 13]
        assert not N.thick_at(3)
        skew = TorusSystem("skew", seed=(0.1, 0.2), horizon=10_000)
        boxes = [skew.box(0, 0), skew.box(4, 7), skew.box(9, 2)]
        common = S_hit_numeric(skew, boxes[0], 0.25)
        for b in boxes[1:]:
            common = common & S_hit_numeric(skew, b, 0.25)
        assert common


def test_10_limit_set_suffix_containment(criterion):
    with criterion(10, "limit sets shift with the point (suffix containment), H=2048"):
        H = 2048
        sys = SymbolicSystem.full_shift(2, H, 6)
        rng = np.random.default_rng(1010)
        for _ in range(100):
            x = sys.random_point(rng)
            k = int(rng.integers(1, 5))
            fam = FamilySpec(TimeSet.from_mask(m) for m in _random_sets(rng, H, k, rng.uniform(0.01, 0.3)))
            L = int(rng.integers(2, 7))
            here = omega_approx(sys, x, fam, L)
            there = omega_approx(sys, x.shift(1), fam, L - 1)
            assert all(w[1:] in there for w in here.cells)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
