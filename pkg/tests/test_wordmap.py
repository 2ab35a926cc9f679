import itertools
import math
import random

import pytest

from ctxbias.errors import DataError, NoPronunciationMatch
from ctxbias.wfst import SymbolTable
from ctxbias.wordmap import (
    LetterRules,
    Lexicon,
    UnigramModel,
    WordMapper,
    build_mapping_transducer,
    fixture_mapper,
    map_pronunciations,
    parse_lexicon,
    parse_unigram,
    pron_to_fst,
)

from oracles import brute_relation


def lex(**entries):
    return Lexicon({w: [tuple(p.split()) for p in prons.split("|")] for w, prons in entries.items()})


@pytest.fixture(scope="module")
def mapper():
    return fixture_mapper()


class TestMappingTransducer:
    def test_single_word(self):
        d = build_mapping_transducer(lex(cat="K AE T"), UnigramModel({"cat": 1}))
        rel = brute_relation(d, 4)
        assert rel[(("K", "AE", "T"), ("cat",))] == 0.0

    def test_homophones_weighted_by_unigram(self):
        d = build_mapping_transducer(lex(a="AH", b="AH"), UnigramModel({"a": 3, "b": 1}))
        paths = {out: w for (ins, out), w in brute_relation(d, 2).items() if ins == ("AH",)}
        assert paths[("a",)] == pytest.approx(0.287682, abs=1e-6)
        assert paths[("b",)] == pytest.approx(1.386294, abs=1e-6)

    def test_closure_repeats_words(self):
        d = build_mapping_transducer(lex(cat="K AE T", dog="D AO G"), UnigramModel({"cat": 1, "dog": 3}))
        rel = brute_relation(d, 7)
        assert rel[(("K", "AE", "T", "K", "AE", "T"), ("cat", "cat"))] == pytest.approx(2 * -math.log(0.25))

    def test_missing_word(self):
        with pytest.raises(DataError):
            build_mapping_transducer(lex(cat="K AE T"), UnigramModel({"dog": 1}))


class TestPronFst:
    T = SymbolTable.of(["S", "IH", "T", "AH"])

    def test_single(self):
        f = pron_to_fst([("S", "IH", "S", "T", "AH")], self.T)
        assert list(brute_relation(f)) == [(("S", "IH", "S", "T", "AH"),) * 2]

    def test_two(self):
        assert len(brute_relation(pron_to_fst([("S",), ("T", "AH")], self.T))) == 2

    def test_duplicates_collapse(self):
        assert len(brute_relation(pron_to_fst([("S",), ("S",)], self.T))) == 1

    def test_empty(self):
        with pytest.raises(DataError):
            pron_to_fst([], self.T)


class TestFixtureMappings:
    def test_sista(self, mapper):
        assert mapper.map_word("sista").mapped == ("sister",)

    def test_yvanna(self, mapper):
        assert mapper.map_word("Yvanna").mapped == ("ivana",)

    def test_vandendriessche(self, mapper):
        assert mapper.map_word("Vandendriessche").mapped == ("vanden", "drey", "eske")

    def test_gershenwald(self, mapper):
        assert mapper.map_phrase(["Ellie", "Gershenwald"]).mapped == ("elle", "gershon", "walled")

    def test_phrase_reduces_to_one_word(self, mapper):
        assert mapper.map_phrase(["La", "Juana"]).mapped == ("lajuana",)
        assert mapper.map_word("la").mapped == ("la",)

    def test_common_word_maps_to_itself(self, mapper):
        assert mapper.map_word("michael").mapped == ("michael",)
        assert "michael" not in mapper.mapping_for(["michael", "mykel"])
        assert mapper.mapping_for(["mykel"]) == {"mykel": ("michael",)}

    def test_rules_fallback(self, mapper):
        # "jayne" is missing from the lexicon; rules give JH EY N EH -> no exact match
        with pytest.raises(NoPronunciationMatch):
            mapper.map_word("jayne")
        assert LetterRules({"j": ["JH"], "ai": ["EY"], "n": ["N"]}).pronounce("Jain") == ("JH", "EY", "N")

    def test_unknown_phoneme_is_no_match(self, mapper):
        from ctxbias.wordmap import map_word

        with pytest.raises(NoPronunciationMatch):
            map_word("x", [("QQ",)], mapper.d)

    def test_soundness(self, mapper):
        for w in ["sista", "yvanna", "vandendriessche", "kaytlin", "jaxon", "aleksandr"]:
            m = mapper.map_word(w)
            target = set(mapper.pronunciations(w))
            choices = itertools.product(*(mapper.lexicon.lookup(x) for x in m.mapped))
            assert any(tuple(ph for part in c for ph in part) in target for c in choices)


def brute_best(lexicon, uni, prons, max_words=4):
    """Minimum unigram cost over word sequences whose pronunciation matches."""
    best = math.inf
    words = sorted(uni.counts)
    targets = {tuple(p) for p in prons}
    for n in range(1, max_words + 1):
        for seq in itertools.product(words, repeat=n):
            for combo in itertools.product(*(lexicon.entries[w] for w in seq)):
                if tuple(ph for part in combo for ph in part) in targets:
                    best = min(best, sum(uni.cost(w) for w in seq))
    return best


def test_random_instances_against_brute_force():
    rng = random.Random(9)
    phones = ["A", "B", "C"]
    checked = 0
    for _ in range(150):
        entries = {}
        for i in range(rng.randint(2, 5)):
            entries[f"w{i}"] = [tuple(rng.choice(phones) for _ in range(rng.randint(1, 2)))
                                for _ in range(rng.randint(1, 2))]
        lexicon = Lexicon(entries)
        uni = UnigramModel({w: rng.randint(1, 20) for w in entries})
        d = build_mapping_transducer(lexicon, uni)
        prons = [tuple(rng.choice(phones) for _ in range(rng.randint(1, 4))) for _ in range(rng.randint(1, 2))]
        want = brute_best(lexicon, uni, prons)
        if want == math.inf:
            with pytest.raises(NoPronunciationMatch):
                map_pronunciations(prons, d)
            continue
        words, cost = map_pronunciations(prons, d)
        checked += 1
        assert abs(cost - want) <= 1e-9
        assert abs(sum(uni.cost(w) for w in words) - want) <= 1e-9
    assert checked > 50


def test_file_parsing():
    lx = parse_lexicon("sister\tS IH S T AH\nsister\tS IH S T ER\n# comment\n")
    assert lx.entries["sister"] == [("S", "IH", "S", "T", "AH"), ("S", "IH", "S", "T", "ER")]
    assert parse_unigram("a\t3\nb\t1\n").prob("a") == 0.75
