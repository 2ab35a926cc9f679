"""A desk-scale biasing experiment with a confusion-channel stand-in for the base model.

Contact utterances name people from per-utterance contact lists.  Rare
first names sound like common ones; the channel pushes a rare name toward
its common twin and the n-gram, trained on tagged text holding only common
names, rarely predicts the rare one.  Regular utterances carry no entities
and measure how much loading contact lists costs elsewhere.
"""
from __future__ import annotations

import random
import time
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .bias import BiasClass, BiasPhrase, attach_mapped_alternatives
from .bpe import BpeModel, bpe_apply, bpe_learn, word_counts
from .decoder import BeamDecoder, DecoderConfig
from .evaluation import corpus_wer
from .scorers import NoisyChannelScorer, Utterance
from .tags import strip_tags
from .wordmap import WordMapper, fixture_mapper

RARE_TO_COMMON = {
    "jain": "jane", "kaytlin": "caitlin", "jaxon": "jackson", "mykel": "michael", "brittani": "brittany",
    "stefani": "stephanie", "zakary": "zachary", "madisyn": "madison", "kristofer": "christopher",
    "jenifer": "jennifer", "aleksandr": "alexander", "sista": "sister", "yvanna": "ivana",
}
COMMON_FIRST = sorted(set(RARE_TO_COMMON.values()) | {"ella", "sarah", "david", "maria", "omar", "lucy", "peter"})
LAST = ["smith", "doe", "lee", "brown", "garcia", "patel", "nguyen", "kim", "lopez", "clark"]
CONTACT_TEMPLATES = ["call {}", "call {} mobile", "text {} now", "send a message to {}", "phone {} at home"]
REGULAR_TEMPLATES = [
    "what is the weather in {city}", "set an alarm for {num}", "play some {genre} music",
    "turn {onoff} the {device}", "how far is it to {city}", "remind me to buy {item}",
    "is it going to rain in {city} tomorrow", "add {item} to the list",
]
SLOTS = {
    "city": ["paris", "boston", "tokyo", "denver", "austin", "dublin"],
    "num": ["seven", "eight", "nine", "ten", "noon"],
    "genre": ["jazz", "rock", "classical", "country"],
    "onoff": ["on", "off"],
    "device": ["lights", "fan", "heater", "radio"],
    "item": ["milk", "bread", "eggs", "coffee", "apples"],
}
# homophones for regular words: a small baseline error rate outside entities
REGULAR_CONFUSION = {"for": {"four": 0.3}, "to": {"two": 0.3}, "buy": {"by": 0.3}, "weather": {"whether": 0.25}}
CLASS = "contact"


@dataclass(frozen=True)
class SyntheticConfig:
    seed: int = 13
    n_entity: int = 200
    n_regular: int = 200
    n_train: int = 800
    contacts_per_list: int = 8
    rare_fraction: float = 0.6
    confusion: float = 0.6  # P(common twin | rare name) in the standard channel
    strong_confusion: float = 0.9  # the channel that corrupts rare names harder
    noise_scale: float = 0.6
    ngram_order: int = 2
    ngram_weight: float = 0.5
    beam: int = 8
    lambda_c: float = 0.1
    lambda_b: float = 1.0
    length_penalty: float = 0.1


@dataclass
class Sample:
    utt_id: str
    ref: list[str]  # tagged reference words
    contacts: list[BiasPhrase]


@dataclass
class World:
    cfg: SyntheticConfig
    bpe: BpeModel
    train: list[list[str]]
    entity: list[Sample]
    regular: list[Sample]
    mapper: WordMapper
    mapping: dict[str, tuple[str, ...]] = field(default_factory=dict)


def _contact_phrase(rng: random.Random, rare_fraction: float) -> tuple[str, ...]:
    first = rng.choice(sorted(RARE_TO_COMMON)) if rng.random() < rare_fraction else rng.choice(COMMON_FIRST)
    return (first,) if rng.random() < 0.3 else (first, rng.choice(LAST))


def _entity_sentence(rng: random.Random, phrase: Sequence[str]) -> list[str]:
    template = rng.choice(CONTACT_TEMPLATES)
    return template.format(f"@{CLASS}# {' '.join(phrase)} #{CLASS}@").split()


def _regular_sentence(rng: random.Random) -> list[str]:
    text = rng.choice(REGULAR_TEMPLATES)
    for slot, values in SLOTS.items():
        text = text.replace("{" + slot + "}", rng.choice(values))
    return text.split()


def _contact_list(rng: random.Random, true_phrase: tuple[str, ...] | None, k: int, rare_fraction: float):
    phrases = [true_phrase] if true_phrase else []
    while len(phrases) < k:
        p = _contact_phrase(rng, rare_fraction)
        if p not in phrases:
            phrases.append(p)
    rng.shuffle(phrases)
    return [BiasPhrase(p, float(rng.randint(1, 4))) for p in phrases]


def build_world(cfg: SyntheticConfig = SyntheticConfig()) -> World:
    rng = random.Random(cfg.seed)
    train = []
    for _ in range(cfg.n_train):
        if rng.random() < 0.5:
            train.append(_entity_sentence(rng, _contact_phrase(rng, 0.0)))
        else:
            train.append(_regular_sentence(rng))
    entity = []
    for i in range(cfg.n_entity):
        phrase = _contact_phrase(rng, cfg.rare_fraction)
        entity.append(Sample(f"ent{i:04d}", _entity_sentence(rng, phrase),
                             _contact_list(rng, phrase, cfg.contacts_per_list, cfg.rare_fraction)))
    regular = [Sample(f"reg{i:04d}", _regular_sentence(rng),
                      _contact_list(rng, None, cfg.contacts_per_list, cfg.rare_fraction))
               for i in range(cfg.n_regular)]

    # every word is seen at least twice, so BPE keeps each one a single unit
    words = sorted({w for s in train for w in s} | set(RARE_TO_COMMON) | set(COMMON_FIRST) | set(LAST)
                   | {w for row in REGULAR_CONFUSION.values() for w in row}
                   | {w for s in entity + regular for w in s.ref})
    tags = [f"@{CLASS}#", f"#{CLASS}@"]
    words = [w for w in words if w not in tags]
    bpe = bpe_learn(word_counts([" ".join(words)] * 2), 100_000, reserved=tags)
    mapper = fixture_mapper()
    return World(cfg, bpe, train, entity, regular, mapper, mapper.mapping_for(sorted(RARE_TO_COMMON)))


def make_scorer(world: World, rare_confusion: float) -> NoisyChannelScorer:
    cfg = world.cfg
    seg = world.bpe.segment_word
    confusion: dict[str, dict[str, float]] = {}
    for rare, common in RARE_TO_COMMON.items():
        [r], [c] = seg(rare), seg(common)
        confusion[r] = {c: rare_confusion, r: 1.0 - rare_confusion}
    for word, row in REGULAR_CONFUSION.items():
        [w] = seg(word)
        confusion[w] = {seg(o)[0]: p for o, p in row.items()}
        confusion[w][w] = 1.0 - sum(row.values())
    corpus = [bpe_apply(world.bpe, s) for s in world.train]
    extra = [t for w in {*RARE_TO_COMMON, *COMMON_FIRST, *LAST} for t in seg(w)]
    extra += [t for s in world.entity + world.regular for t in bpe_apply(world.bpe, s.ref)]
    return NoisyChannelScorer(corpus, cfg.ngram_order, confusion, noise_seed=cfg.seed, vocab=sorted(set(extra)),
                              noise_scale=cfg.noise_scale, ngram_weight=cfg.ngram_weight)


def utterance(world: World, s: Sample) -> Utterance:
    return Utterance(s.utt_id, tuple(bpe_apply(world.bpe, strip_tags(s.ref))))


def decode_set(world: World, scorer: NoisyChannelScorer, samples: Sequence[Sample], cfg: DecoderConfig,
               bias: bool, mapped: bool = False) -> dict[str, list[str]]:
    out = {}
    for s in samples:
        classes = []
        if bias:
            phrases = s.contacts
            if mapped:
                phrases = attach_mapped_alternatives(phrases, world.mapping, world.bpe)
            classes = [BiasClass.compile(CLASS, phrases, world.bpe)]
        out[s.utt_id] = BeamDecoder(scorer, classes, cfg).decode(utterance(world, s)).best.text.split()
    return out


def set_wer(samples: Sequence[Sample], hyps: dict[str, list[str]]) -> float:
    return corpus_wer([(s.ref, hyps[s.utt_id]) for s in samples])


@dataclass
class ExperimentResult:
    entity_no_fst: float
    entity_fst: float
    entity_fst_no_norm: float
    regular_no_fst: float
    regular_fst: float
    strong_original: float
    strong_mapped: float
    strong_no_fst: float
    seconds: float
    config: dict = field(default_factory=dict)

    def rows(self) -> list[tuple[str, float]]:
        return [(k, v) for k, v in asdict(self).items() if isinstance(v, float) and k != "seconds"]


def run_experiment(cfg: SyntheticConfig = SyntheticConfig()) -> ExperimentResult:
    t0 = time.perf_counter()
    world = build_world(cfg)
    dec = DecoderConfig(cfg.beam, cfg.lambda_c, cfg.lambda_b, cfg.length_penalty)
    no_norm = DecoderConfig(cfg.beam, cfg.lambda_c, 0.0, cfg.length_penalty)
    scorer = make_scorer(world, cfg.confusion)
    strong = make_scorer(world, cfg.strong_confusion)
    ent, reg = world.entity, world.regular
    return ExperimentResult(
        entity_no_fst=set_wer(ent, decode_set(world, scorer, ent, dec, bias=False)),
        entity_fst=set_wer(ent, decode_set(world, scorer, ent, dec, bias=True)),
        entity_fst_no_norm=set_wer(ent, decode_set(world, scorer, ent, no_norm, bias=True)),
        regular_no_fst=set_wer(reg, decode_set(world, scorer, reg, dec, bias=False)),
        regular_fst=set_wer(reg, decode_set(world, scorer, reg, dec, bias=True)),
        strong_original=set_wer(ent, decode_set(world, strong, ent, dec, bias=True)),
        strong_mapped=set_wer(ent, decode_set(world, strong, ent, dec, bias=True, mapped=True)),
        strong_no_fst=set_wer(ent, decode_set(world, strong, ent, dec, bias=False)),
        seconds=time.perf_counter() - t0,
        config=asdict(cfg),
    )
