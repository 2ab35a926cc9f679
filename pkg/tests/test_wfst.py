import math
import random

import pytest

from ctxbias.errors import (
    AlphabetError,
    EmptyLanguageError,
    FormatError,
    PreconditionError,
    UnsupportedStructureError,
)
from ctxbias.wfst import (
    Arc,
    Fst,
    FstBuilder,
    SymbolTable,
    compose,
    determinize,
    enumerate_relation,
    fst_from_text,
    fst_to_text,
    is_deterministic,
    is_input_deterministic,
    linear_fst,
    minimize,
    shortest_path,
    shortest_path_fst,
    symbols_from_text,
    symbols_to_text,
    top_sort,
)

from oracles import (
    SIGMA,
    all_paths,
    assert_relation_close,
    brute_compose,
    brute_min_weight,
    brute_relation,
    myhill_nerode_states,
    random_acyclic_fst,
)

X = SymbolTable(["<eps>", "x", "y"])


def single_arc(isyms, osyms, i, o, w, final=0.0):
    return linear_fst(isyms, osyms, [(isyms.find(i), osyms.find(o))], [w], final)


def snapshot(fst):
    return (fst.arcs, fst.finals, fst.start)


class TestSymbolTable:
    def test_eps_is_zero(self):
        t = SymbolTable.of(["a", "b", "a"])
        assert t.find(0) == "<eps>"
        assert t.find("b") == 2
        assert len(t) == 3

    def test_rejects_missing_eps(self):
        with pytest.raises(FormatError):
            SymbolTable(["a"])

    def test_text_round_trip(self):
        t = SymbolTable.of(["ja", "in</w>", "@contact#"])
        assert symbols_from_text(symbols_to_text(t)) == t


class TestBuilderValidation:
    def test_nan_weight_rejected(self):
        b = FstBuilder(SIGMA)
        b.add_states(2)
        b.set_start(0)
        with pytest.raises(FormatError):
            b.add_arc(0, 1, 1, float("nan"), 1)

    def test_infinite_arc_weight_rejected(self):
        b = FstBuilder(SIGMA)
        b.add_states(2)
        with pytest.raises(FormatError):
            b.add_arc(0, 1, 1, math.inf, 1)

    def test_unknown_label_rejected(self):
        with pytest.raises(FormatError):
            Fst(((Arc(9, 1, 0.0, 0),),), (0.0,), 0, SIGMA, SIGMA)


class TestCompose:
    def test_single_path(self):
        a = single_arc(SIGMA, X, "a", "x", 1.0)
        b = single_arc(X, SIGMA, "x", "b", 2.0)
        assert enumerate_relation(compose(a, b)) == {(("a",), ("b",)): 3.0}

    def test_identity_right(self):
        rng = random.Random(3)
        ident = FstBuilder(SIGMA)
        ident.add_state()
        ident.set_start(0)
        ident.set_final(0, 0.0)
        for i in range(1, len(SIGMA)):
            ident.add_arc(0, i, i, 0.0, 0)
        ident = ident.build()
        for _ in range(50):
            a = random_acyclic_fst(rng)
            assert_relation_close(brute_relation(compose(a, ident)), brute_relation(a))

    def test_alphabet_mismatch(self):
        a = single_arc(SIGMA, X, "a", "x", 1.0)
        with pytest.raises(AlphabetError):
            compose(a, a)

    def test_epsilon_on_both_sides(self):
        # a: a:eps then eps:x ; b: eps:b then x:c
        b1 = FstBuilder(SIGMA, X)
        b1.add_states(3)
        b1.set_start(0)
        b1.add_arc(0, "a", "<eps>", 1.0, 1)
        b1.add_arc(1, "<eps>", "x", 0.5, 2)
        b1.set_final(2)
        b2 = FstBuilder(X, SIGMA)
        b2.add_states(3)
        b2.set_start(0)
        b2.add_arc(0, "<eps>", "b", 0.25, 1)
        b2.add_arc(1, "x", "c", 2.0, 2)
        b2.set_final(2)
        got = compose(b1.build(), b2.build())
        assert_relation_close(brute_relation(got), {(("a",), ("b", "c")): 3.75})
        # the filter admits a single interleaving of the two epsilon moves
        assert len(list(all_paths(got))) == 1

    def test_random_against_brute_force(self):
        rng = random.Random(11)
        for _ in range(300):
            a = random_acyclic_fst(rng, max_states=5)
            b = random_acyclic_fst(rng, max_states=5)
            assert_relation_close(brute_relation(compose(a, b)), brute_compose(a, b))

    def test_inputs_untouched(self):
        rng = random.Random(5)
        a, b = random_acyclic_fst(rng), random_acyclic_fst(rng)
        before = snapshot(a), snapshot(b)
        compose(a, b)
        assert (snapshot(a), snapshot(b)) == before


class TestDeterminize:
    def test_parallel_arcs_take_min(self):
        b = FstBuilder(SIGMA)
        b.add_states(3)
        b.set_start(0)
        b.add_arc(0, "a", "a", 1.0, 1)
        b.add_arc(0, "a", "a", 2.0, 2)
        b.set_final(1)
        b.set_final(2)
        d = determinize(b.build())
        assert enumerate_relation(d) == {(("a",), ("a",)): 1.0}
        assert is_input_deterministic(d)

    def test_deterministic_chain_unchanged(self):
        chain = linear_fst(SIGMA, SIGMA, [(1, 1), (2, 2)], [1.0, 2.0])
        d = determinize(chain)
        assert enumerate_relation(d) == {(("a", "b"), ("a", "b")): 3.0}
        assert d.num_states == 3

    def test_cyclic_rejected(self):
        b = FstBuilder(SIGMA)
        b.add_state()
        b.set_start(0)
        b.add_arc(0, 1, 1, 1.0, 0)
        b.set_final(0)
        with pytest.raises(UnsupportedStructureError):
            determinize(b.build())

    def test_random_acceptors_input_deterministic(self):
        rng = random.Random(21)
        for _ in range(300):
            a = random_acyclic_fst(rng, acceptor=True)
            d = determinize(a)
            assert is_input_deterministic(d)
            assert_relation_close(brute_relation(d), brute_relation(a))

    def test_random_transducers_preserve_relation(self):
        rng = random.Random(22)
        for _ in range(300):
            a = random_acyclic_fst(rng)
            d = determinize(a)
            assert is_deterministic(d)
            assert_relation_close(brute_relation(d), brute_relation(a))


class TestMinimize:
    def test_trie_merges_equivalent_finals(self):
        b = FstBuilder(SIGMA)
        b.add_states(4)
        b.set_start(0)
        b.add_arc(0, "a", "a", 0.0, 1)
        b.add_arc(1, "b", "b", 0.5, 2)
        b.add_arc(1, "c", "c", 0.5, 3)
        b.set_final(2)
        b.set_final(3)
        trie = b.build()
        m = minimize(trie)
        lang = {ins: w for (ins, _), w in brute_relation(trie).items()}
        assert m.num_states == myhill_nerode_states(lang) == 3
        assert_relation_close(brute_relation(m), brute_relation(trie))

    def test_minimal_chain_fixed_point(self):
        chain = linear_fst(SIGMA, SIGMA, [(1, 1), (2, 2), (3, 3)], [0.3, 0.3, 0.3])
        assert minimize(chain).num_states == chain.num_states

    def test_nondeterministic_rejected(self):
        b = FstBuilder(SIGMA)
        b.add_states(3)
        b.set_start(0)
        b.add_arc(0, "a", "a", 1.0, 1)
        b.add_arc(0, "a", "a", 2.0, 2)
        b.set_final(1)
        b.set_final(2)
        with pytest.raises(PreconditionError):
            minimize(b.build())

    def test_random_acceptors_reach_myhill_nerode_size(self):
        rng = random.Random(31)
        for _ in range(300):
            a = random_acyclic_fst(rng, acceptor=True)
            d = determinize(a)
            m = minimize(d)
            rel = brute_relation(a)
            assert_relation_close(brute_relation(m), rel)
            assert m.num_states <= d.num_states
            lang = {ins: w for (ins, _), w in rel.items()}
            if lang:
                assert m.num_states == myhill_nerode_states(lang)

    def test_random_transducers(self):
        rng = random.Random(32)
        for _ in range(300):
            d = determinize(random_acyclic_fst(rng))
            m = minimize(d)
            assert m.num_states <= d.num_states
            assert_relation_close(brute_relation(m), brute_relation(d))


class TestShortestPath:
    def test_min_of_two(self):
        b = FstBuilder(SIGMA)
        b.add_states(3)
        b.set_start(0)
        b.add_arc(0, "a", "a", 5.0, 1)
        b.add_arc(0, "b", "b", 2.0, 2)
        b.set_final(1)
        b.set_final(2)
        p = shortest_path(b.build())
        assert p.total_weight == 2.0
        assert p.output == ("b",)

    def test_single_path(self):
        chain = linear_fst(SIGMA, SIGMA, [(1, 1), (3, 3)], [0.5, 0.25], 1.0)
        p = shortest_path(chain)
        assert p.input == ("a", "c") and p.total_weight == 1.75

    def test_tie_broken_by_output(self):
        b = FstBuilder(SIGMA)
        b.add_states(3)
        b.set_start(0)
        b.add_arc(0, "a", "c", 1.0, 1)
        b.add_arc(0, "a", "b", 1.0, 2)
        b.set_final(1)
        b.set_final(2)
        assert shortest_path(b.build()).output == ("b",)

    def test_empty_language(self):
        b = FstBuilder(SIGMA)
        b.add_states(2)
        b.set_start(0)
        b.add_arc(0, 1, 1, 0.0, 1)
        with pytest.raises(EmptyLanguageError):
            shortest_path(b.build())

    def test_cyclic_nonnegative(self):
        b = FstBuilder(SIGMA)
        b.add_states(2)
        b.set_start(0)
        b.add_arc(0, 1, 1, 1.0, 0)
        b.add_arc(0, 2, 2, 3.0, 1)
        b.set_final(1, 0.5)
        p = shortest_path(b.build())
        assert p.total_weight == 3.5 and p.input == ("b",)

    def test_random_against_enumeration(self):
        rng = random.Random(41)
        for _ in range(300):
            a = random_acyclic_fst(rng, max_states=8, weights=[0.125 * k for k in range(30)])
            best = brute_min_weight(a)
            if best == math.inf:
                with pytest.raises(EmptyLanguageError):
                    shortest_path(a)
                continue
            p = shortest_path(a)
            assert abs(p.total_weight - best) <= 1e-9
            ties = [o for _, o, w, _ in all_paths(a) if abs(w - best) <= 1e-12]
            want = min(tuple(a.osymbols.find(x) for x in o) for o in ties)
            assert p.output == want
            lin = shortest_path_fst(a)
            assert_relation_close(brute_relation(lin), {(p.input, p.output): p.total_weight})


class TestTopSort:
    def test_sorted_chain_fixed(self):
        chain = linear_fst(SIGMA, SIGMA, [(1, 1), (2, 2)], [1.0, 1.0])
        assert snapshot(top_sort(chain)) == snapshot(chain)

    def test_reversed_chain(self):
        b = FstBuilder(SIGMA)
        b.add_states(4)
        b.set_start(3)
        b.add_arc(3, 1, 1, 1.0, 2)
        b.add_arc(2, 2, 2, 1.0, 1)
        b.add_arc(1, 3, 3, 1.0, 0)
        b.set_final(0)
        rev = b.build()
        t = top_sort(rev)
        assert t.start == 0
        assert [a.nextstate for arcs in t.arcs for a in arcs] == [1, 2, 3]
        assert brute_relation(t) == brute_relation(rev)

    def test_random(self):
        rng = random.Random(51)
        for _ in range(300):
            a = random_acyclic_fst(rng)
            t = top_sort(a)
            assert all(s < arc.nextstate for s in t.states() for arc in t.arcs[s])
            assert brute_relation(t) == brute_relation(a)

    def test_cycle_rejected(self):
        b = FstBuilder(SIGMA)
        b.add_states(2)
        b.set_start(0)
        b.add_arc(0, 1, 1, 0.0, 1)
        b.add_arc(1, 1, 1, 0.0, 0)
        b.set_final(1)
        with pytest.raises(UnsupportedStructureError):
            top_sort(b.build())


class TestEnumerateRelation:
    def test_empty(self):
        assert enumerate_relation(Fst.empty(SIGMA)) == {}

    def test_single_arc(self):
        a = single_arc(SIGMA, X, "a", "x", 1.5)
        assert enumerate_relation(a) == {(("a",), ("x",)): 1.5}

    def test_max_len_truncates(self):
        chain = linear_fst(SIGMA, SIGMA, [(1, 1), (2, 2)], [1.0, 1.0])
        assert enumerate_relation(chain, max_len=1) == {}

    def test_cyclic_needs_bound(self):
        b = FstBuilder(SIGMA)
        b.add_state()
        b.set_start(0)
        b.add_arc(0, 1, 1, 1.0, 0)
        b.set_final(0)
        with pytest.raises(UnsupportedStructureError):
            enumerate_relation(b.build())
        assert enumerate_relation(b.build(), max_len=2) == {
            ((), ()): 0.0, (("a",), ("a",)): 1.0, (("a", "a"), ("a", "a")): 2.0}

    def test_matches_oracle(self):
        rng = random.Random(61)
        for _ in range(200):
            a = random_acyclic_fst(rng)
            assert_relation_close(enumerate_relation(a), brute_relation(a), tol=0.0)


class TestTextFormat:
    def test_layout(self):
        a = single_arc(SIGMA, X, "a", "x", 1.5)
        assert fst_to_text(a) == "0\t1\ta\tx\t1.500000\n1\t0.000000\n"

    def test_round_trip(self):
        rng = random.Random(71)
        for _ in range(100):
            a = random_acyclic_fst(rng)
            back = fst_from_text(fst_to_text(a), SIGMA, SIGMA)
            assert fst_to_text(back) == fst_to_text(a)
            assert_relation_close(brute_relation(back), brute_relation(a), tol=5e-7)

    def test_unknown_symbol(self):
        with pytest.raises(FormatError):
            fst_from_text("0\t1\tq\tx\t0\n1\n", SIGMA, X)
