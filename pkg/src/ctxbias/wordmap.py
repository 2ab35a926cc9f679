"""Rare-word mapping through pronunciation.

``D = L o G`` turns phoneme strings into word sequences weighted by a
unigram; a rare word with pronunciations ``P_W`` is rewritten as the output
of ``TopSort(ShortestPath(P_W o D))``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import DataError, EmptyLanguageError, FormatError, NoPronunciationMatch
from .wfst import (
    EPSILON,
    Fst,
    FstBuilder,
    SymbolTable,
    compose,
    shortest_path_fst,
    top_sort,
    union_of_paths,
)

Pron = tuple[str, ...]


@dataclass
class Lexicon:
    entries: dict[str, list[Pron]]

    def __post_init__(self):
        for w, prons in self.entries.items():
            if not prons or any(not p for p in prons):
                raise DataError(f"lexicon word {w!r} needs at least one non-empty pronunciation")

    def lookup(self, word: str) -> list[Pron] | None:
        return self.entries.get(word) or self.entries.get(word.lower())

    def phonemes(self) -> list[str]:
        return sorted({ph for prons in self.entries.values() for p in prons for ph in p})


@dataclass
class UnigramModel:
    counts: dict[str, float]
    _total: float = field(init=False, repr=False)

    def __post_init__(self):
        if not self.counts:
            raise DataError("unigram model is empty")
        if any(not c > 0 for c in self.counts.values()):
            raise DataError("unigram counts must be positive")
        self._total = math.fsum(self.counts.values())

    def prob(self, word: str) -> float:
        return self.counts.get(word, 0.0) / self._total

    def cost(self, word: str) -> float:
        return -math.log(self.prob(word))


class LetterRules:
    """Longest-match grapheme -> phoneme rules, the fallback for words missing from the lexicon."""

    def __init__(self, rules: Mapping[str, Sequence[str]]):
        self.rules = {g.lower(): tuple(p) for g, p in rules.items()}
        self._longest = max((len(g) for g in self.rules), default=0)

    def pronounce(self, word: str) -> Pron:
        word = word.lower()
        out: list[str] = []
        i = 0
        while i < len(word):
            for n in range(min(self._longest, len(word) - i), 0, -1):
                g = word[i:i + n]
                if g in self.rules:
                    out.extend(self.rules[g])
                    i += n
                    break
            else:
                i += 1  # no rule covers this character; it is silent
        return tuple(out)


def pron_to_fst(prons: Iterable[Sequence[str]], phonemes: SymbolTable) -> Fst:
    """Acceptor for the union of ``prons`` with zero weights."""
    prons = list(dict.fromkeys(tuple(p) for p in prons))
    if not prons:
        raise DataError("pron_to_fst needs at least one pronunciation")
    paths = []
    for p in prons:
        try:
            ids = [phonemes.find(ph) for ph in p]
        except KeyError as e:
            raise DataError(f"phoneme {e.args[0]!r} is not in the phoneme inventory") from e
        paths.append(([(i, i) for i in ids], [0.0] * len(ids)))
    return union_of_paths(phonemes, phonemes, paths)


def build_lexicon_fst(lex: Lexicon, phonemes: SymbolTable, words: SymbolTable) -> Fst:
    """Closure of per-word phoneme paths; the word is emitted on the first phoneme."""
    b = FstBuilder(phonemes, words)
    home = b.add_state()
    b.set_start(home)
    b.set_final(home, 0.0)
    for w in sorted(lex.entries):
        for pron in dict.fromkeys(lex.entries[w]):
            s = home
            for k, ph in enumerate(pron):
                n = home if k == len(pron) - 1 else b.add_state()
                b.add_arc(s, ph, w if k == 0 else EPSILON, 0.0, n)
                s = n
    return b.build()


def build_grammar_fst(uni: UnigramModel, words: SymbolTable, insertion_penalty: float = 0.0) -> Fst:
    """Single-state unigram loop acceptor."""
    b = FstBuilder(words, words)
    s = b.add_state()
    b.set_start(s)
    b.set_final(s, 0.0)
    for w in sorted(uni.counts):
        b.add_arc(s, w, w, uni.cost(w) + insertion_penalty, s)
    return b.build()


def build_mapping_transducer(lex: Lexicon, uni: UnigramModel, insertion_penalty: float = 0.0) -> Fst:
    missing = sorted(w for w in uni.counts if w not in lex.entries)
    if missing:
        raise DataError(f"unigram words missing from the lexicon: {', '.join(missing[:5])}")
    phonemes = SymbolTable.of(lex.phonemes())
    words = SymbolTable.of(sorted(lex.entries))
    return compose(build_lexicon_fst(lex, phonemes, words), build_grammar_fst(uni, words, insertion_penalty))


@dataclass(frozen=True)
class WordMapping:
    original: tuple[str, ...]
    mapped: tuple[str, ...]
    cost: float


def map_pronunciations(prons: Sequence[Sequence[str]], d: Fst) -> tuple[tuple[str, ...], float]:
    """Best word sequence sharing one of ``prons``, and its unigram cost."""
    known = set(d.isymbols.symbols)
    # a phoneme no lexicon word uses can never be matched
    usable = [p for p in prons if p and all(ph in known for ph in p)]
    if not usable:
        raise NoPronunciationMatch("pronunciation uses phonemes outside the lexicon inventory")
    pw = pron_to_fst(usable, d.isymbols)
    try:
        best = top_sort(shortest_path_fst(compose(pw, d)))
    except EmptyLanguageError as e:
        raise NoPronunciationMatch("no word sequence matches the pronunciation") from e
    words = []
    cost = 0.0
    s = best.start
    while best.arcs[s]:
        a = best.arcs[s][0]
        if a.olabel != EPSILON:
            words.append(best.osymbols.find(a.olabel))
        cost += a.weight
        s = a.nextstate
    cost += best.finals[s]
    return tuple(words), cost


def map_word(word: str, prons: Sequence[Sequence[str]], d: Fst) -> WordMapping:
    mapped, cost = map_pronunciations(prons, d)
    return WordMapping((word,), mapped, cost)


class WordMapper:
    """Lexicon + unigram + optional letter rules, with ``D`` built once."""

    def __init__(self, lexicon: Lexicon, unigram: UnigramModel, rules: LetterRules | None = None,
                 insertion_penalty: float = 0.0, max_variants: int = 64):
        self.lexicon = lexicon
        self.unigram = unigram
        self.rules = rules
        self.max_variants = max_variants
        self.d = build_mapping_transducer(lexicon, unigram, insertion_penalty)

    def pronunciations(self, word: str) -> list[Pron]:
        prons = self.lexicon.lookup(word)
        if prons:
            return list(prons)
        if self.rules is not None:
            p = self.rules.pronounce(word)
            if p:
                return [p]
        raise NoPronunciationMatch(f"no pronunciation for {word!r}")

    def map_word(self, word: str) -> WordMapping:
        return map_word(word, self.pronunciations(word), self.d)

    def map_phrase(self, words: Sequence[str]) -> WordMapping:
        """Map a whole phrase through the concatenation of its words' pronunciations."""
        variants = itertools.islice(itertools.product(*(self.pronunciations(w) for w in words)), self.max_variants)
        prons = [tuple(ph for part in combo for ph in part) for combo in variants]
        mapped, cost = map_pronunciations(prons, self.d)
        return WordMapping(tuple(words), mapped, cost)

    def mapping_for(self, words: Iterable[str]) -> dict[str, tuple[str, ...]]:
        """Word -> mapped words, skipping words that map to themselves or cannot be mapped."""
        out = {}
        for w in dict.fromkeys(words):
            try:
                m = self.map_word(w)
            except NoPronunciationMatch:
                continue
            if m.mapped != (w,) and m.mapped != (w.lower(),):
                out[w] = m.mapped
        return out


def _tsv_rows(text: str, what: str, ncols: int):
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != ncols or not all(c.strip() for c in cols):
            raise FormatError(f"{what} line {n}: expected {ncols} tab-separated columns")
        yield n, [c.strip() for c in cols]


def parse_lexicon(text: str) -> Lexicon:
    entries: dict[str, list[Pron]] = {}
    for _, (word, pron) in _tsv_rows(text, "lexicon", 2):
        p = tuple(pron.split())
        entries.setdefault(word, [])
        if p not in entries[word]:
            entries[word].append(p)
    return Lexicon(entries)


def parse_unigram(text: str) -> UnigramModel:
    counts = {}
    for n, (word, count) in _tsv_rows(text, "unigram", 2):
        try:
            counts[word] = counts.get(word, 0.0) + float(count)
        except ValueError as e:
            raise FormatError(f"unigram line {n}: bad count {count!r}") from e
    return UnigramModel(counts)


def parse_rules(text: str) -> LetterRules:
    return LetterRules({g: tuple(p.split()) for _, (g, p) in _tsv_rows(text, "rules", 2)})


def read_lexicon(path: str | Path) -> Lexicon:
    return parse_lexicon(Path(path).read_text())


def read_unigram(path: str | Path) -> UnigramModel:
    return parse_unigram(Path(path).read_text())


def read_rules(path: str | Path) -> LetterRules:
    return parse_rules(Path(path).read_text())


def format_mappings(mappings: Iterable[WordMapping]) -> str:
    return "".join(f"{' '.join(m.original)}\t{' '.join(m.mapped)}\n" for m in mappings)


def fixture_text(name: str) -> str:
    return resources.files("ctxbias").joinpath("data", name).read_text()


def fixture_mapper() -> WordMapper:
    """Mapper over the shipped demo lexicon, unigram and letter rules."""
    return WordMapper(
        parse_lexicon(fixture_text("fixture_lexicon.tsv")),
        parse_unigram(fixture_text("fixture_unigram.tsv")),
        parse_rules(fixture_text("letter_rules.tsv")),
    )
