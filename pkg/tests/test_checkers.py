import itertools
import json

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyntop.checkers import (
    FAILS, HOLDS, NOT_FOUND, VERDICT_SCHEMA, Verdict, check_ip, check_mixing,
    check_multi_sensitive, check_multi_sensitive_numeric, check_sensitive_compact,
    check_totally_transitive, check_transitive, check_transitive_compact,
    check_transitive_numeric, check_transitively_sensitive, check_weak_disjoint,
    check_weak_mixing, check_weak_mixing_numeric, combine_exit_code, ip_witness,
    largeness_report, liyorke_scan, transfer_family_overlap, verdicts_to_csv,
    verdicts_to_markdown, words_upto,
)
from dyntop.constructions import (
    a_sequence_prefix, alternating_partner, champernowne_point, mixing_tail_bound,
)
from dyntop.families import builtin_family
from dyntop.numeric import TorusSystem
from dyntop.symbolic import C, N_hit, OpenSet, S_hit, SymbolicSystem, n_family, preimage
from dyntop.timeset import TimeSet, verify_fs

H = 64


@pytest.fixture(scope="module")
def full():
    return SymbolicSystem.full_shift(2, H, 4)


@pytest.fixture(scope="module")
def alt():
    return SymbolicSystem.periodic("01", 2, H, 4)


@pytest.fixture(scope="module")
def mixing_orbit():
    seq = a_sequence_prefix(3, 20_000).symbols
    return SymbolicSystem.orbit_closure(seq, 2, 512, 4)


def brute_weak_mixing(sys, L):
    words = words_upto(sys, L)
    sets = [N_hit(sys, C(u), C(v)) for u in words for v in words]
    return all(not a.isdisjoint(b) for a, b in itertools.product(sets, repeat=2))


class TestTransitivity:
    def test_examples(self, full, alt):
        assert check_transitive(full, 3).outcome == HOLDS
        assert check_transitive(alt, 2).outcome == HOLDS
        v = check_totally_transitive(alt, 2, 2)
        assert v.outcome == FAILS and v.witnesses[0]["power"] == 2
        assert check_totally_transitive(full, 2, 4).outcome == HOLDS

    def test_fixed_point_not_transitive(self):
        sys = SymbolicSystem.orbit_closure([0] * 200, 2, H, 2)
        v = check_transitive(sys, 1)
        assert v.outcome == HOLDS  # a single word is trivially transitive
        two = SymbolicSystem.orbit_closure([1] + [0] * 200, 2, H, 2)
        v = check_transitive(two, 1)
        assert v.outcome == NOT_FOUND and v.witnesses == [{"pair": ["0", "1"]}]

    def test_threads_do_not_change_output(self, mixing_orbit):
        a = check_weak_mixing(mixing_orbit, 2, threads=1).to_json()
        b = check_weak_mixing(mixing_orbit, 2, threads=4).to_json()
        assert a == b


class TestMixing:
    def test_examples(self, full, alt):
        assert check_weak_mixing(full, 2).outcome == HOLDS
        v = check_weak_mixing(alt, 2)
        assert v.outcome == FAILS
        assert check_mixing(full, 2).outcome == HOLDS
        assert check_mixing(full, 3).details["max_tail_start"] == 3
        assert check_mixing(alt, 2).outcome == FAILS

    @pytest.mark.parametrize("name", ["full", "alt", "mixing_orbit"])
    def test_weak_mixing_matches_fip(self, name, request):
        sys = request.getfixturevalue(name)
        v = check_weak_mixing(sys, 2)
        assert v.holds == (n_family(sys, 2).has_fip() is not None)
        assert v.holds == brute_weak_mixing(sys, 2)

    def test_mixing_orbit(self, mixing_orbit):
        v = check_mixing(mixing_orbit, 2)
        assert v.outcome == HOLDS and not v.exact
        assert v.details["max_tail_start"] <= 6
        for w1, w2 in itertools.product(["0", "1", "10"], repeat=2):
            assert v.details["tail_starts"][f"{w1}>{w2}"] <= mixing_tail_bound(w1, w2, 1)

    def test_lower_bound_never_fails(self):
        sys = SymbolicSystem.orbit_closure([0, 1] * 100, 2, H, 3)
        assert check_weak_mixing(sys, 2).outcome == NOT_FOUND


class TestSensitivity:
    def test_examples(self, full, alt):
        assert check_multi_sensitive(full, 3, 2, 2).outcome == HOLDS
        assert check_multi_sensitive(alt, 2, 2, 2).outcome == FAILS
        assert check_transitively_sensitive(full, 2, 2).outcome == HOLDS
        assert check_transitively_sensitive(alt, 2, 2).outcome == FAILS

    @pytest.mark.parametrize("name", ["full", "alt", "mixing_orbit"])
    def test_implication_chain(self, name, request):
        sys = request.getfixturevalue(name)
        points = [sys.generating_point() if sys.backend != "full"
                  else champernowne_point(2, 6, 1000)]
        multi = check_multi_sensitive(sys, 2, 2, 2)
        compact = check_sensitive_compact(sys, points, 2, 2, 2)
        trans = check_transitively_sensitive(sys, 2, 2)
        if multi.holds:
            assert compact.holds
        if compact.holds:
            assert trans.holds



cyl_sets = st.lists(st.lists(st.integers(0, 1), min_size=1, max_size=4).map(tuple),
                    min_size=1, max_size=3)


class TestSpreadShifts:
    @settings(max_examples=60)
    @given(cyl_sets, st.integers(1, 3), st.integers(1, 3))
    def test_preimage_spreads_shift_forward(self, words, i, k):
        full = SymbolicSystem.full_shift(2, H, 8)
        U = OpenSet.of(*words)
        back = S_hit(full, preimage(full, U, i), k) & TimeSet.interval(H, i)
        assert back <= S_hit(full, U, k).shift_plus(i)
        zeros = OpenSet.of(*[(0,) * i + w for w in words])
        assert S_hit(full, zeros, k) & TimeSet.interval(H, i) <= S_hit(full, U, k).shift_plus(i)

    @settings(max_examples=60)
    @given(cyl_sets, st.integers(1, 4), st.integers(1, 3))
    def test_image_spreads_shift_back(self, words, i, k):
        full = SymbolicSystem.full_shift(2, H, 8)
        U = OpenSet.of(*words)
        longer = [w for w in words if len(w) > i]
        image = OpenSet.of(longer[0][i:]) if longer else OpenSet.of((0,))
        assert S_hit(full, image, k) & TimeSet.interval(H, 0, H - i) <= S_hit(full, U, k).shift_minus(i)

    @pytest.mark.parametrize("name", ["full", "mixing_orbit"])
    def test_triple_transfer_inside_spread(self, name, request):
        sys = request.getfixturevalue(name)
        rng = np.random.default_rng(5)
        k = 2
        words = words_upto(sys, 3)
        for _ in range(100):
            u, v, w = (words[j] for j in rng.integers(0, len(words), 3))
            long_words = [x for x in words if len(x) >= k]
            w1 = long_words[rng.integers(len(long_words))]
            others = [x for x in long_words if x[:k] != w1[:k]]
            w2 = others[rng.integers(len(others))]
            lhs = N_hit(sys, C(u), C(v)) & N_hit(sys, C(w), C(w1)) & N_hit(sys, C(w), C(w2))
            assert lhs <= N_hit(sys, C(u), C(v)) & S_hit(sys, C(w), k)


class TestCompactForms:
    def test_transitive_compact(self, full, alt):
        x = champernowne_point(2, 6, 1000)
        assert check_transitive_compact(full, [x], 1, 2).outcome == HOLDS
        assert check_transitive_compact(alt, [alt.generating_point()], 1, 1).outcome == FAILS
        # tails families only need the point to keep returning somewhere
        assert check_transitive_compact(full, [full.periodic_point("0")], 1, 1).holds
        v = check_transitive_compact(alt, [alt.shifted_point(1)], 1, 1)
        assert v.witnesses == [{"point": 0, "kind": v.witnesses[0]["kind"]}]


class TestWeakDisjoint:
    def test_pair_and_point_forms(self, full, alt):
        x = champernowne_point(2, 6, 1000)
        v = check_weak_disjoint(full, full, 2, [x])
        assert v.outcome == HOLDS and v.details["point_form"] == HOLDS
        v = check_weak_disjoint(alt, alt, 2, [alt.generating_point(), alt.shifted_point(1)])
        assert v.outcome == FAILS and v.details["point_form"] == FAILS
        v = check_weak_disjoint(full, alt, 2, [x])
        assert v.outcome == HOLDS and v.details["point_form"] == HOLDS

    def test_horizon_mismatch(self, full):
        with pytest.raises(ValueError):
            check_weak_disjoint(full, SymbolicSystem.full_shift(2, H + 1, 2), 1)


class TestIP:
    def test_champernowne_example(self):
        x = champernowne_point(2, 9, 12_000)
        sys = SymbolicSystem.full_shift(2, 4096, 4)
        ps = ip_witness(sys, x, C("0"), C("0"), C("0"), 3)
        assert ps is not None and len(ps) == 3
        from dyntop.symbolic import n_hit
        assert verify_fs(n_hit(sys, x, C("0")) & N_hit(sys, C("0"), C("0")), ps)
        assert check_ip(sys, x, C("0"), C("0"), C("0"), 3).holds

    def test_sparse_target_is_inconclusive(self):
        sys = SymbolicSystem.full_shift(2, 8192, 3)
        x = champernowne_point(2, 9, sys.point_length())
        v = check_ip(sys, x, C("101"), C("000"), C("000"), 4)
        assert v.outcome == NOT_FOUND and v.details["target_size"] == 1024

    def test_empty_target_fails(self):
        alt = SymbolicSystem.periodic("01", 2, 64, 2)
        v = check_ip(alt, alt.generating_point(), C("0"), C("0"), C("1"), 1)
        assert v.outcome == FAILS

    def test_none_when_impossible(self):
        sys = SymbolicSystem.full_shift(2, 32, 2)
        x = sys.periodic_point("1")
        assert ip_witness(sys, x, C("0"), C("0"), C("0"), 2) is None
        with pytest.raises(ValueError):
            ip_witness(sys, x, C("0"), C("0"), C("0"), 11)


class TestLiYorke:
    def test_alternating_partner(self):
        Hs = 4096
        sys = SymbolicSystem.full_shift(2, Hs, 8)
        x = champernowne_point(2, 8, Hs + 16)
        y = alternating_partner(x)
        v = liyorke_scan(sys, [(x, y), (x, x)], 8, 8)
        assert v.outcome == HOLDS and [w["pair"] for w in v.witnesses] == [0]
        assert v.details["scan"][1] == {"pair": 1, "proximal": True, "non_asymptotic": False}

    def test_nothing_found(self):
        sys = SymbolicSystem.full_shift(2, 64, 4)
        v = liyorke_scan(sys, [(sys.periodic_point("01"), sys.periodic_point("10"))], 2, 2)
        assert v.outcome == NOT_FOUND


class TestLargeness:
    def test_evens_example(self):
        r = largeness_report(TimeSet.residues(100, 2, [0]))
        assert r["card"] == 50 and r["gap"] == 1 and r["max_run"] == 1 and r["fs_depth"] >= 3

    def test_empty(self):
        r = largeness_report(TimeSet.empty(10))
        assert r["card"] == 0 and r["fs_depth"] == 0

    @settings(max_examples=40)
    @given(st.integers(0, 2 ** 32))
    def test_monotone(self, seed):
        rng = np.random.default_rng(seed)
        A = TimeSet.from_mask(rng.random(80) < 0.4)
        B = A | TimeSet.from_mask(rng.random(80) < 0.2)
        ra, rb = largeness_report(A, 3), largeness_report(B, 3)
        assert rb["card"] >= ra["card"] and rb["max_run"] >= ra["max_run"]
        assert rb["fs_depth"] >= ra["fs_depth"]

    def test_transfer_overlap_with_syndetic_family(self):
        sys = SymbolicSystem.full_shift(2, 128, 3)
        fam = builtin_family("syndetic-sample", 128)
        assert transfer_family_overlap(sys, fam, 2)["min_overlap"] >= 2


class TestNumeric:
    def test_rotation(self):
        sys = TorusSystem("rotation", horizon=2000)
        assert check_transitive_numeric(sys).outcome == HOLDS
        v = check_weak_mixing_numeric(sys, 3)
        assert v.outcome == FAILS and "minimality assumed from theory" in v.notes

    def test_skew_multi_sensitive(self):
        sys = TorusSystem("skew", horizon=2000, seed=[0.1, 0.2])
        boxes = [sys.box(0, 0), sys.box(3, 7)]
        v = check_multi_sensitive_numeric(sys, boxes, 0.25)
        assert v.outcome in (HOLDS, NOT_FOUND) and not v.exact


class TestVerdictIO:
    def test_round_trip_and_schema(self, full, alt):
        vs = [check_transitive(full, 2), check_weak_mixing(alt, 2), check_mixing(full, 2)]
        for v in vs:
            doc = json.loads(v.to_json())
            jsonschema.validate(doc, VERDICT_SCHEMA)
            assert Verdict.from_json(v.to_json()) == v
        assert verdicts_to_csv(vs).splitlines()[0] == "property,outcome,witness,params"
        assert verdicts_to_markdown(vs).count("\n") == 5
        assert combine_exit_code(vs) == 1
        assert combine_exit_code(vs[:1]) == 0

    def test_rejects_bad_outcome(self):
        with pytest.raises(ValueError):
            Verdict("x", "maybe", [], {}, True)
