"""Stand-in base models for beam search.

A scorer maps (utterance, token-id history) to a log-probability vector over
its vocabulary.  ``TableScorer`` is an exact lookup table for tests;
``NoisyChannelScorer`` combines a confusion channel over a reference token
sequence with an add-one n-gram trained on tagged text.
"""
from __future__ import annotations

import math
import zlib
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import numpy as np

from .errors import DataError, FormatError
from .tags import is_tag

EOS = "</s>"
BOS = "<s>"


@dataclass(frozen=True)
class Utterance:
    """Decoding handle: an id plus the untagged reference tokens the channel distorts."""
    utt_id: str
    tokens: tuple[str, ...] = ()


class Scorer(Protocol):
    vocab: tuple[str, ...]

    def log_probs(self, utt: Utterance, history: tuple[int, ...]) -> np.ndarray:
        ...


def _log_normalize(x: np.ndarray) -> np.ndarray:
    m = np.max(x)
    return x - (m + np.log(np.sum(np.exp(x - m))))


class TableScorer:
    """Exact (history, token) -> log-prob lookup; unlisted histories are uniform."""

    def __init__(self, vocab: Sequence[str], table: Mapping[tuple[str, ...], Mapping[str, float]]):
        self.vocab = tuple(vocab)
        if len(set(self.vocab)) != len(self.vocab):
            raise FormatError("score table vocabulary has duplicate tokens")
        self._index = {t: i for i, t in enumerate(self.vocab)}
        self._rows: dict[tuple[int, ...], np.ndarray] = {}
        for hist, row in table.items():
            try:
                key = tuple(self._index[t] for t in hist)
                vec = np.full(len(self.vocab), -math.inf)
                for tok, lp in row.items():
                    vec[self._index[tok]] = lp
            except KeyError as e:
                raise FormatError(f"score table token {e.args[0]!r} is not in the vocabulary") from e
            total = math.fsum(math.exp(v) for v in vec)
            if abs(total - 1.0) > 1e-6:
                raise FormatError(f"score table row for history {' '.join(hist)!r} sums to {total:.9f}")
            self._rows[key] = vec
        self._uniform = np.full(len(self.vocab), -math.log(len(self.vocab)))

    def log_probs(self, utt: Utterance | None, history: tuple[int, ...]) -> np.ndarray:
        return self._rows.get(tuple(history), self._uniform)

    def rows(self) -> dict[tuple[str, ...], dict[str, float]]:
        return {
            tuple(self.vocab[i] for i in hist): {self.vocab[j]: float(v) for j, v in enumerate(vec) if v > -math.inf}
            for hist, vec in self._rows.items()
        }


def format_score_table(scorer: TableScorer) -> str:
    lines = ["#vocab\t" + " ".join(scorer.vocab)]
    for hist, row in sorted(scorer.rows().items()):
        for tok, lp in row.items():
            lines.append(f"{' '.join(hist)}\t{tok}\t{lp!r}")
    return "\n".join(lines) + "\n"


def parse_score_table(text: str) -> TableScorer:
    """``history-tokens<TAB>token<TAB>logprob`` rows; an optional ``#vocab`` line fixes the vocabulary."""
    vocab: list[str] | None = None
    table: dict[tuple[str, ...], dict[str, float]] = defaultdict(dict)
    seen: dict[str, None] = {}
    for n, line in enumerate(text.splitlines(), 1):
        if line.startswith("#vocab\t"):
            vocab = line.split("\t", 1)[1].split()
            continue
        if not line.strip():
            continue  # no comment syntax: exit tags start with '#'
        cols = line.split("\t")
        if len(cols) != 3:
            raise FormatError(f"score table line {n}: expected 3 tab-separated columns")
        try:
            lp = float(cols[2])
        except ValueError as e:
            raise FormatError(f"score table line {n}: bad log-prob {cols[2]!r}") from e
        hist = tuple(cols[0].split())
        table[hist][cols[1]] = lp
        for t in (*hist, cols[1]):
            seen.setdefault(t)
    return TableScorer(vocab if vocab is not None else list(seen), table)


def read_score_table(path: str | Path) -> TableScorer:
    return parse_score_table(Path(path).read_text())


class NgramModel:
    """Add-one smoothed n-gram over a fixed vocabulary."""

    def __init__(self, sentences: Iterable[Sequence[str]], vocab: Sequence[str], order: int = 2):
        if order < 1:
            raise DataError("n-gram order must be at least 1")
        self.order = order
        self.vocab = tuple(vocab)
        index = {t: i for i, t in enumerate(self.vocab)}
        self._counts: dict[tuple[str, ...], Counter] = defaultdict(Counter)
        n = 0
        for sent in sentences:
            n += 1
            padded = [BOS] * (order - 1) + list(sent) + [EOS]
            for k in range(order - 1, len(padded)):
                if padded[k] not in index:
                    raise DataError(f"n-gram token {padded[k]!r} is not in the vocabulary")
                self._counts[tuple(padded[k - order + 1:k])][index[padded[k]]] += 1
        if n == 0:
            raise DataError("cannot train an n-gram on an empty corpus")
        self._cache: dict[tuple[str, ...], np.ndarray] = {}

    def context(self, history: Sequence[str]) -> tuple[str, ...]:
        if self.order == 1:
            return ()
        padded = [BOS] * (self.order - 1) + list(history)
        return tuple(padded[len(padded) - self.order + 1:])

    def log_probs(self, history: Sequence[str]) -> np.ndarray:
        ctx = self.context(history)
        vec = self._cache.get(ctx)
        if vec is None:
            counts = np.ones(len(self.vocab))
            for i, c in self._counts.get(ctx, {}).items():
                counts[i] += c
            vec = np.log(counts / counts.sum())
            self._cache[ctx] = vec
        return vec


def parse_confusion(text: str) -> dict[str, dict[str, float]]:
    """``intended<TAB>emitted<TAB>prob`` rows; each intended token's row must sum to 1."""
    table: dict[str, dict[str, float]] = defaultdict(dict)
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 3:
            raise FormatError(f"confusion line {n}: expected 3 tab-separated columns")
        try:
            table[cols[0]][cols[1]] = float(cols[2])
        except ValueError as e:
            raise FormatError(f"confusion line {n}: bad probability {cols[2]!r}") from e
    check_confusion(table)
    return dict(table)


def check_confusion(table: Mapping[str, Mapping[str, float]]) -> None:
    for tok, row in table.items():
        if any(p < 0 for p in row.values()) or abs(math.fsum(row.values()) - 1.0) > 1e-6:
            raise FormatError(f"confusion row for {tok!r} is not a distribution")


def format_confusion(table: Mapping[str, Mapping[str, float]]) -> str:
    return "".join(f"{a}\t{b}\t{p!r}\n" for a in sorted(table) for b, p in sorted(table[a].items()))


class NoisyChannelScorer:
    """P_b(y | history, utt) proportional to emission(y | ref token) * ngram(y | history)^w * noise.

    The reference position is the number of non-tag tokens already in the
    history, so class tags do not shift the channel.  Tags carry a fixed
    emission, which leaves their competition to the n-gram.  Per-position
    log-normal noise is drawn from a generator seeded by
    ``(noise_seed, utterance id, position)``.
    """

    def __init__(self, ref_corpus: Iterable[Sequence[str]], ngram_order: int = 2,
                 confusion: Mapping[str, Mapping[str, float]] | None = None, noise_seed: int = 0,
                 vocab: Iterable[str] = (), noise_scale: float = 0.0, ngram_weight: float = 1.0,
                 floor: float = 1e-3, tag_emission: float = 0.5):
        corpus = [list(s) for s in ref_corpus]
        if not corpus:
            raise DataError("noisy-channel scorer needs a non-empty training corpus")
        confusion = {k: dict(v) for k, v in (confusion or {}).items()}
        check_confusion(confusion)
        toks = dict.fromkeys([EOS])
        for s in corpus:
            toks.update(dict.fromkeys(s))
        for a, row in confusion.items():
            toks.update(dict.fromkeys([a, *row]))
        toks.update(dict.fromkeys(vocab))
        toks.pop(BOS, None)
        self.vocab = tuple(toks)
        self._index = {t: i for i, t in enumerate(self.vocab)}
        self.ngram = NgramModel(corpus, self.vocab, ngram_order)
        self.confusion = confusion
        self.noise_seed = noise_seed
        self.noise_scale = noise_scale
        self.ngram_weight = ngram_weight
        self.floor = floor
        self.tag_emission = tag_emission
        self._tag_mask = np.array([is_tag(t) for t in self.vocab])
        self._emission_cache: dict[str | None, np.ndarray] = {}
        self._noise_utt: str | None = None
        self._noise_cache: dict[int, np.ndarray] = {}

    def emission(self, intended: str | None) -> np.ndarray:
        """log emission(y | intended); ``None`` means past the reference end (expects EOS)."""
        vec = self._emission_cache.get(intended)
        if vec is None:
            target = EOS if intended is None else intended
            p = np.zeros(len(self.vocab))
            row = self.confusion.get(target, {target: 1.0})
            for tok, q in row.items():
                if tok in self._index:
                    p[self._index[tok]] += q
            p = (1 - self.floor) * p + self.floor / len(self.vocab)
            p[self._tag_mask] = self.tag_emission
            vec = np.log(p)
            self._emission_cache[intended] = vec
        return vec

    def log_probs(self, utt: Utterance, history: tuple[int, ...]) -> np.ndarray:
        hist = [self.vocab[i] for i in history[-self.ngram.order:]] if self.ngram.order > 1 else []
        pos = len(history) - int(self._tag_mask[list(history)].sum()) if history else 0
        intended = utt.tokens[pos] if pos < len(utt.tokens) else None
        x = self.emission(intended) + self.ngram_weight * self.ngram.log_probs(hist)
        if self.noise_scale:
            x = x + self._noise(utt.utt_id, pos)
        return _log_normalize(x)

    def _noise(self, utt_id: str, pos: int) -> np.ndarray:
        if self._noise_utt != utt_id:
            self._noise_utt, self._noise_cache = utt_id, {}
        vec = self._noise_cache.get(pos)
        if vec is None:
            rng = np.random.default_rng([self.noise_seed, zlib.crc32(utt_id.encode()), pos])
            vec = self.noise_scale * rng.standard_normal(len(self.vocab))
            self._noise_cache[pos] = vec
        return vec
