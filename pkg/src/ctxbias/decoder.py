"""Beam search with class-tag triggered context FSTs.

Per step t, a hypothesis inside a context FST scores a candidate as
``log P_b + lambda_c * log P_c``; one in the base space scores it as
``log P_b + lambda_b * gamma_t`` where gamma_t averages the best ``log P_c``
of the kappa_t hypotheses that are inside an FST (0 when there are none).
Hypotheses rank by the running sum of step scores; the final n-best list is
ranked by that sum over ``((5 + |Y|) / 6) ** alpha``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .bias import BiasClass
from .bpe import END_OF_WORD, detokenize
from .errors import ConfigError, EmptyResultError
from .scorers import EOS, Scorer, Utterance
from .tags import parse_tag
from .wfst import EPSILON


@dataclass(frozen=True)
class DecoderConfig:
    beam_size: int = 8
    lambda_c: float = 0.1
    lambda_b: float = 1.0
    length_penalty_alpha: float = 0.1
    max_steps: int = 40

    def __post_init__(self):
        if self.beam_size < 1:
            raise ConfigError("beam_size must be at least 1")
        if self.max_steps < 1:
            raise ConfigError("max_steps must be at least 1")
        for name in ("lambda_c", "lambda_b", "length_penalty_alpha"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")


@dataclass(frozen=True)
class Hypothesis:
    tokens: tuple[int, ...] = ()
    step_scores: tuple[float, ...] = ()
    accum_score: float = 0.0
    fst_state: tuple[int, int] | None = None  # (class index, state)
    finished: bool = False
    output: tuple[str, ...] = ()  # tokens with FST spans replaced by their output words

    def extend(self, token: int, score: float, fst_state, finished: bool, out: tuple[str, ...]) -> "Hypothesis":
        return Hypothesis(self.tokens + (token,), self.step_scores + (score,), self.accum_score + score,
                          fst_state, finished, self.output + out)


@dataclass(frozen=True)
class StepScore:
    base: float
    context: float | None
    gamma: float


@dataclass(frozen=True)
class Candidate:
    token: int
    context: float | None  # log P_c, present iff the candidate continues inside an FST
    next_state: tuple[int, int] | None
    output: tuple[str, ...]


@dataclass(frozen=True)
class StepTrace:
    step: int
    kappa: int
    gamma: float
    beam: int


@dataclass(frozen=True)
class NBestEntry:
    tokens: tuple[str, ...]
    output: tuple[str, ...]
    score: float
    accum_score: float

    @property
    def text(self) -> str:
        return output_text(self.output)


@dataclass
class DecodeResult:
    nbest: list[NBestEntry]
    trace: list[StepTrace] = field(default_factory=list)

    @property
    def best(self) -> NBestEntry:
        return self.nbest[0]


def expand_in_fst(h: Hypothesis, cls: BiasClass, token_ids: dict[str, int], class_index: int) -> list[Candidate]:
    """Tokens allowed from the current FST state: its arcs, plus the exit tag when final."""
    _, s = h.fst_state
    fst = cls.fst
    out = []
    for a in fst.arcs[s]:
        word = fst.osymbols.find(a.olabel)
        emitted = (word + END_OF_WORD,) if a.olabel != EPSILON else ()
        out.append(Candidate(token_ids[fst.isymbols.find(a.ilabel)], -a.weight, (class_index, a.nextstate), emitted))
    if fst.is_final(s):
        out.append(Candidate(token_ids[cls.exit_tag], -fst.finals[s], None, (cls.exit_tag,)))
    return out


def normalization_term(beam: Sequence[Hypothesis], candidates: Sequence[Sequence[Candidate]]) -> tuple[int, float]:
    """kappa_t and gamma_t: each inside hypothesis contributes its best candidate's log P_c."""
    best_inside = [max(c.context for c in cands)
                   for h, cands in zip(beam, candidates) if h.fst_state is not None and cands]
    kappa = len(best_inside)
    return kappa, (math.fsum(best_inside) / kappa if kappa else 0.0)


def score_step(beam: Sequence[Hypothesis], base: Sequence, candidates: Sequence[Sequence[Candidate]],
               cfg: DecoderConfig) -> tuple[list[tuple[int, Candidate, StepScore, float]], int, float]:
    """Score every candidate; returns (hyp index, candidate, parts, S) rows plus kappa_t and gamma_t."""
    kappa, gamma = normalization_term(beam, candidates)
    rows = []
    for i, (h, cands) in enumerate(zip(beam, candidates)):
        for c in cands:
            pb = float(base[i][c.token])
            if h.fst_state is not None:
                s = pb + cfg.lambda_c * c.context
                parts = StepScore(pb, c.context, gamma)
            else:
                s = pb + cfg.lambda_b * gamma
                parts = StepScore(pb, None, gamma)
            rows.append((i, c, parts, s))
    return rows, kappa, gamma


def length_normalized(score: float, length: int, alpha: float) -> float:
    return score / ((5 + length) / 6) ** alpha


class BeamDecoder:
    """Checks a scorer against the loaded classes once, then decodes utterances."""

    def __init__(self, scorer: Scorer, classes: Sequence[BiasClass], cfg: DecoderConfig = DecoderConfig()):
        self.scorer = scorer
        self.classes = list(classes)
        self.cfg = cfg
        self.token_ids = {t: i for i, t in enumerate(scorer.vocab)}
        if EOS not in self.token_ids:
            raise ConfigError(f"scorer vocabulary lacks the end-of-sequence token {EOS!r}")
        needed = set()
        for cls in self.classes:
            needed |= {cls.enter_tag, cls.exit_tag}
            needed |= {s for _, s in cls.fst.isymbols if s != "<eps>"}
        missing = sorted(needed - set(self.token_ids))
        if missing:
            raise ConfigError(f"scorer vocabulary lacks tokens used by the bias classes: {' '.join(missing[:8])}")
        self.eos = self.token_ids[EOS]
        self.enter = {self.token_ids[c.enter_tag]: k for k, c in enumerate(self.classes)}
        self.exits = {self.token_ids[c.exit_tag] for c in self.classes}
        vocab = scorer.vocab
        self._outside = [
            Candidate(i, None, (self.enter[i], self.classes[self.enter[i]].fst.start) if i in self.enter else None,
                      (vocab[i],))
            for i in range(len(vocab)) if i not in self.exits
        ]
        self._outside_by_id = {c.token: c for c in self._outside}
        self._exit_ids = np.array(sorted(self.exits), dtype=int)
        self._ids = np.arange(len(vocab))

    def candidates(self, h: Hypothesis) -> list[Candidate]:
        if h.fst_state is None:
            return self._outside
        k = h.fst_state[0]
        return expand_in_fst(h, self.classes[k], self.token_ids, k)

    def decode(self, utt: Utterance) -> DecodeResult:
        cfg = self.cfg
        k = cfg.beam_size
        beam = [Hypothesis()]
        finished: list[Hypothesis] = []
        trace = []
        for t in range(1, cfg.max_steps + 1):
            cands = [self.candidates(h) if h.fst_state is not None else None for h in beam]
            kappa, gamma = normalization_term(beam, [c or () for c in cands])
            trace.append(StepTrace(t, kappa, gamma, len(beam)))
            grown = []
            for h, hc in zip(beam, cands):
                base = self.scorer.log_probs(utt, h.tokens)
                if hc is None:
                    # base space: same offset for every token, so the best k by log P_b are enough
                    s = base + cfg.lambda_b * gamma
                    s[self._exit_ids] = -math.inf
                    top = np.lexsort((self._ids, -s))[:k]
                    scored = [(float(s[i]), self._outside_by_id[int(i)]) for i in top if s[i] > -math.inf]
                else:
                    scored = sorted(((float(base[c.token]) + cfg.lambda_c * c.context, c) for c in hc),
                                    key=lambda x: (-x[0], x[1].token))[:k]
                for sc, c in scored:
                    if sc == -math.inf:
                        continue
                    done = c.token == self.eos
                    grown.append(h.extend(c.token, sc, c.next_state, done, () if done else c.output))
            grown.sort(key=lambda h: (-h.accum_score, h.tokens))
            beam = []
            for h in grown[:k]:
                (finished if h.finished else beam).append(h)
            if not beam:
                break
        else:
            # out of steps: hypotheses in the base space end here, ones inside an FST are dropped
            finished.extend(h for h in beam if h.fst_state is None)
        if not finished:
            raise EmptyResultError(f"no hypothesis survived for utterance {utt.utt_id!r}")
        return DecodeResult(self._rank(finished), trace)

    def _rank(self, finished: list[Hypothesis]) -> list[NBestEntry]:
        vocab = self.scorer.vocab
        entries = []
        for h in finished:
            toks = tuple(vocab[i] for i in h.tokens if i != self.eos)
            score = length_normalized(h.accum_score, len(toks), self.cfg.length_penalty_alpha)
            entries.append((score, h, toks))
        entries.sort(key=lambda e: (-e[0], e[1].tokens))
        return [NBestEntry(toks, h.output, score, h.accum_score) for score, h, toks in entries]


def output_text(tokens: Sequence[str]) -> str:
    """Detokenize; pieces lacking the end-of-word marker at the end are closed off."""
    toks = [t for t in tokens if t != EOS]
    if toks and parse_tag(toks[-1]) is None and not toks[-1].endswith(END_OF_WORD):
        toks[-1] = toks[-1] + END_OF_WORD
    fixed = []
    for k, t in enumerate(toks):
        nxt = toks[k + 1] if k + 1 < len(toks) else None
        if nxt is not None and parse_tag(nxt) is not None and parse_tag(t) is None and not t.endswith(END_OF_WORD):
            t = t + END_OF_WORD
        fixed.append(t)
    return detokenize(fixed)


def beam_search(utt: Utterance, scorer: Scorer, classes: Sequence[BiasClass],
                cfg: DecoderConfig = DecoderConfig()) -> DecodeResult:
    return BeamDecoder(scorer, classes, cfg).decode(utt)
