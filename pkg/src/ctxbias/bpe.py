"""Byte-pair encoding with atomic class tags.

Merges are learned inside words.  At segmentation time the last subword of
every word carries the end-of-word marker ``</w>``, so ``"jain"`` may become
``["ja", "in</w>"]``.  Class tags are never split and never marked.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ConfigError, DataError, FormatError
from .tags import is_tag

END_OF_WORD = "</w>"


@dataclass(frozen=True)
class BpeModel:
    merges: tuple[tuple[str, str], ...]
    vocab: frozenset[str]  # subword units, unmarked
    reserved: frozenset[str] = frozenset()
    marker: str = END_OF_WORD
    _ranks: dict = field(default_factory=dict, repr=False, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        for tag in self.reserved:
            if tag in self.vocab:
                raise FormatError(f"reserved tag {tag!r} appears in the subword vocabulary")
        self._ranks.update({pair: i for i, pair in enumerate(self.merges)})

    def token_inventory(self) -> list[str]:
        """Every token segmentation can produce: units, marked units, reserved tags."""
        units = sorted(self.vocab)
        return units + [u + self.marker for u in units] + sorted(self.reserved)

    def is_passthrough(self, token: str) -> bool:
        return token in self.reserved or is_tag(token)

    def segment_word(self, word: str) -> tuple[str, ...]:
        seg = self._cache.get(word)
        if seg is None:
            seg = self._cache[word] = _segment(self, word)
        return seg


def _segment(model: BpeModel, word: str) -> tuple[str, ...]:
    symbols = list(word)
    ranks = model._ranks
    current = -1
    while len(symbols) > 1:
        best = None
        for pair in zip(symbols, symbols[1:]):
            r = ranks.get(pair)
            if r is not None and r > current and (best is None or r < best):
                best = r
        if best is None:
            break
        left, right = model.merges[best]
        merged = []
        i = 0
        while i < len(symbols):
            if i + 1 < len(symbols) and symbols[i] == left and symbols[i + 1] == right:
                merged.append(left + right)
                i += 2
            else:
                merged.append(symbols[i])
                i += 1
        symbols = merged
        current = best
    symbols[-1] += model.marker
    return tuple(symbols)


def bpe_learn(corpus: Mapping[str, int] | Iterable[str], target_vocab: int,
              reserved: Iterable[str] = ()) -> BpeModel:
    """Learn merges by repeatedly joining the most frequent adjacent pair.

    ``corpus`` is a word -> count mapping or an iterable of words.  Ties go to
    the lexicographically smallest pair.  Stops once the unit vocabulary
    reaches ``target_vocab`` or no pair occurs at least twice.
    """
    reserved = frozenset(reserved)
    counts = Counter(corpus) if not isinstance(corpus, Mapping) else Counter(dict(corpus))
    counts = Counter({w: c for w, c in counts.items() if c > 0})
    if not counts:
        raise DataError("cannot learn BPE from an empty corpus")
    for w in counts:
        if w in reserved or is_tag(w):
            raise DataError(f"corpus word {w!r} is a class tag; tags are excluded from BPE")
    words = {tuple(w): c for w, c in counts.items()}
    vocab = {ch for w in words for ch in w}
    if target_vocab <= len(vocab):
        raise ConfigError(f"target vocabulary {target_vocab} must exceed the {len(vocab)} base characters")
    merges = []
    while len(vocab) < target_vocab:
        pairs: Counter = Counter()
        for syms, c in words.items():
            for pair in zip(syms, syms[1:]):
                pairs[pair] += c
        if not pairs:
            break
        top = max(pairs.values())
        if top < 2:
            break
        best = min(p for p, c in pairs.items() if c == top)
        merges.append(best)
        vocab.add(best[0] + best[1])
        words = {_merge_pair(syms, best): c for syms, c in words.items()}
    return BpeModel(tuple(merges), frozenset(vocab), reserved)


def _merge_pair(syms: tuple[str, ...], pair: tuple[str, str]) -> tuple[str, ...]:
    out = []
    i = 0
    while i < len(syms):
        if i + 1 < len(syms) and (syms[i], syms[i + 1]) == pair:
            out.append(syms[i] + syms[i + 1])
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return tuple(out)


def bpe_apply(model: BpeModel, text: str | Sequence[str]) -> list[str]:
    """Segment whitespace-separated words; class tags pass through whole."""
    words = text.split() if isinstance(text, str) else list(text)
    out: list[str] = []
    for w in words:
        if model.is_passthrough(w):
            out.append(w)
        else:
            out.extend(model.segment_word(w))
    return out


def detokenize(tokens: Sequence[str], marker: str = END_OF_WORD) -> str:
    """Inverse of :func:`bpe_apply`: join subwords up to each end-of-word marker."""
    words = []
    pending = []
    for t in tokens:
        if is_tag(t):
            if pending:
                raise FormatError(f"class tag {t!r} inside an unfinished word")
            words.append(t)
        elif t.endswith(marker):
            pending.append(t[: -len(marker)])
            words.append("".join(pending))
            pending = []
        else:
            pending.append(t)
    if pending:
        raise FormatError("token sequence ends inside a word (missing end-of-word marker)")
    return " ".join(words)


def word_counts(lines: Iterable[str]) -> Counter:
    """Word frequencies of text lines, ignoring class tags."""
    counts: Counter = Counter()
    for line in lines:
        counts.update(w for w in line.split() if not is_tag(w))
    return counts


def save_model(model: BpeModel, directory: str | Path) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    (d / "merges.txt").write_text("".join(f"{l} {r}\n" for l, r in model.merges))
    (d / "vocab.txt").write_text("".join(f"{u}\n" for u in sorted(model.vocab)))
    (d / "reserved.txt").write_text("".join(f"{t}\n" for t in sorted(model.reserved)))


def load_model(directory: str | Path) -> BpeModel:
    d = Path(directory)
    merges = []
    for n, line in enumerate((d / "merges.txt").read_text().splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split(" ")
        if len(parts) != 2 or not all(parts):
            raise FormatError(f"merges.txt line {n}: expected 'left right'")
        merges.append((parts[0], parts[1]))
    vocab = frozenset(l for l in (d / "vocab.txt").read_text().splitlines() if l)
    reserved_file = d / "reserved.txt"
    reserved = frozenset(l for l in reserved_file.read_text().splitlines() if l) if reserved_file.exists() else frozenset()
    return BpeModel(tuple(merges), vocab, reserved)
