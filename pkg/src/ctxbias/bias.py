"""Contextual bias FSTs: one transducer per class from subword sequences to phrases.

A phrase with relative frequency f_i costs ``-log(f_i / sum_j f_j)``; the
cost is spread evenly over the arcs of each of its subword paths.  The union
of the phrase paths is determinized and minimized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .bpe import BpeModel
from .errors import DataError, FormatError
from .tags import enter_tag as make_enter, exit_tag as make_exit
from .wfst import EPSILON, Fst, SymbolTable, determinize, minimize, union_of_paths

# a subword path holds one token segment per original word
SubwordPath = tuple[tuple[str, ...], ...]


@dataclass(frozen=True)
class BiasPhrase:
    words: tuple[str, ...]
    frequency: float = 1.0
    subword_paths: tuple[SubwordPath, ...] = ()

    def __post_init__(self):
        if not self.words:
            raise DataError("bias phrase has no words")
        if not self.frequency > 0:
            raise DataError(f"phrase {self.text!r}: frequency must be positive, got {self.frequency}")
        for path in self.subword_paths:
            if len(path) != len(self.words) or any(not seg for seg in path):
                raise DataError(f"phrase {self.text!r}: subword path does not cover every word")

    @property
    def text(self) -> str:
        return " ".join(self.words)


def phrase_cost(frequencies: Sequence[float], i: int) -> float:
    """Cost of phrase ``i``: negative natural log of its relative frequency."""
    if any(not f > 0 for f in frequencies):
        raise DataError("phrase frequencies must all be positive")
    return -math.log(frequencies[i] / math.fsum(frequencies))


def split_cost(cost: float, num_arcs: int) -> float:
    if num_arcs < 1:
        raise DataError("a phrase path needs at least one arc")
    return cost / num_arcs


def tokenize_phrase(phrase: BiasPhrase, bpe: BpeModel | None) -> BiasPhrase:
    """Give ``phrase`` its original subword path if it has none yet."""
    if phrase.subword_paths:
        return phrase
    if bpe is None:
        raise DataError(f"phrase {phrase.text!r} has no subword path and no BPE model was given")
    path = tuple(bpe.segment_word(w) for w in phrase.words)
    return BiasPhrase(phrase.words, phrase.frequency, (path,))


def _merge_duplicates(phrases: Sequence[BiasPhrase]) -> list[BiasPhrase]:
    merged: dict[tuple[str, ...], BiasPhrase] = {}
    for p in phrases:
        if p.words in merged:
            q = merged[p.words]
            paths = q.subword_paths + tuple(x for x in p.subword_paths if x not in q.subword_paths)
            merged[p.words] = BiasPhrase(p.words, q.frequency + p.frequency, paths)
        else:
            merged[p.words] = BiasPhrase(p.words, p.frequency, tuple(dict.fromkeys(p.subword_paths)))
    return list(merged.values())


def phrase_union(phrases: Sequence[BiasPhrase], bpe: BpeModel | None = None) -> Fst:
    """The raw union T: one linear path per (phrase, subword path).

    Each word is emitted on the arc of its last subword (the one carrying the
    end-of-word marker), so phrases that share a subword prefix also share
    a deterministic prefix.  Repeated phrases are merged by summing their
    frequencies.
    """
    if not phrases:
        raise DataError("cannot build a bias FST from an empty phrase list")
    phrases = _merge_duplicates([tokenize_phrase(p, bpe) for p in phrases])
    freqs = [p.frequency for p in phrases]
    isyms = SymbolTable.of(sorted({t for p in phrases for path in p.subword_paths for seg in path for t in seg}))
    osyms = SymbolTable.of(sorted({w for p in phrases for w in p.words}))
    paths = []
    for i, p in enumerate(phrases):
        cost = phrase_cost(freqs, i)
        for path in p.subword_paths:
            pairs = []
            for word, seg in zip(p.words, path):
                for k, tok in enumerate(seg):
                    pairs.append((isyms.find(tok), osyms.find(word) if k == len(seg) - 1 else EPSILON))
            w = split_cost(cost, len(pairs))
            paths.append((pairs, [w] * len(pairs)))
    return union_of_paths(isyms, osyms, paths)


def build_bias_fst(phrases: Sequence[BiasPhrase], bpe: BpeModel | None = None) -> Fst:
    """Compile phrases into the determinized, minimized bias transducer."""
    return minimize(determinize(phrase_union(phrases, bpe)))


def attach_mapped_alternatives(phrases: Sequence[BiasPhrase], mapping: Mapping[str, Sequence[str]],
                               bpe: BpeModel) -> list[BiasPhrase]:
    """Add one alternative subword path per phrase with mapped words substituted.

    Output words stay the original ones; the alternative shares the phrase's
    frequency, hence its cost.
    """
    out = []
    for p in phrases:
        p = tokenize_phrase(p, bpe)
        if not any(w in mapping for w in p.words):
            out.append(p)
            continue
        alt = []
        for w, seg in zip(p.words, p.subword_paths[0]):
            if w in mapping:
                alt.append(tuple(t for m in mapping[w] for t in bpe.segment_word(m)))
            else:
                alt.append(seg)
        alt = tuple(alt)
        paths = p.subword_paths if alt in p.subword_paths else p.subword_paths + (alt,)
        out.append(BiasPhrase(p.words, p.frequency, paths))
    return out


@dataclass(frozen=True)
class BiasClass:
    name: str
    enter_tag: str
    exit_tag: str
    phrases: tuple[BiasPhrase, ...]
    fst: Fst = field(repr=False)

    @classmethod
    def compile(cls, name: str, phrases: Sequence[BiasPhrase], bpe: BpeModel | None,
                enter_tag: str | None = None, exit_tag: str | None = None) -> "BiasClass":
        return cls(
            name,
            enter_tag or make_enter(name),
            exit_tag or make_exit(name),
            tuple(phrases),
            build_bias_fst(phrases, bpe),
        )


def parse_phrase_list(text: str) -> list[BiasPhrase]:
    """``phrase<TAB>frequency`` lines; the frequency column is optional."""
    phrases = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) > 2:
            raise FormatError(f"phrase list line {n}: too many columns")
        freq = 1.0
        if len(cols) == 2 and cols[1].strip():
            try:
                freq = float(cols[1])
            except ValueError as e:
                raise FormatError(f"phrase list line {n}: bad frequency {cols[1]!r}") from e
        words = tuple(cols[0].split())
        if not words:
            raise FormatError(f"phrase list line {n}: empty phrase")
        phrases.append(BiasPhrase(words, freq))
    return phrases


def read_phrase_list(path: str | Path) -> list[BiasPhrase]:
    return parse_phrase_list(Path(path).read_text())


@dataclass(frozen=True)
class ManifestEntry:
    name: str
    enter_tag: str
    exit_tag: str
    phrase_file: Path


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """``class_name<TAB>enter_tag<TAB>exit_tag<TAB>phrase_file``; paths resolve against the manifest."""
    path = Path(path)
    entries = []
    for n, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise FormatError(f"manifest line {n}: expected 4 tab-separated columns")
        entries.append(ManifestEntry(cols[0], cols[1], cols[2], path.parent / cols[3]))
    return entries


def load_classes(manifest: str | Path, bpe: BpeModel,
                 mapping: Mapping[str, Sequence[str]] | None = None) -> list[BiasClass]:
    classes = []
    for e in read_manifest(manifest):
        phrases = read_phrase_list(e.phrase_file)
        if mapping:
            phrases = attach_mapped_alternatives(phrases, mapping, bpe)
        classes.append(BiasClass.compile(e.name, phrases, bpe, e.enter_tag, e.exit_tag))
    return classes
