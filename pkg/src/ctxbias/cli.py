"""Command-line entry point: ``ctxbias <command> ...``.

Exit codes: 0 success, 1 data error, 2 configuration error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import bpe as bpe_mod
from .bias import BiasPhrase, attach_mapped_alternatives, build_bias_fst, load_classes, read_phrase_list
from .decoder import BeamDecoder, DecoderConfig
from .errors import ConfigError, CtxBiasError, DataError
from .evaluation import evaluate, format_nbest_rows, read_nbest, top_hypotheses
from .relabel import format_corpus, read_corpus, relabel_corpus
from .scorers import NoisyChannelScorer, Utterance, parse_confusion, read_score_table
from .tags import strip_tags
from .wfst import compose, determinize, fst_to_text, minimize, read_fst, shortest_path_fst, write_fst
from .wordmap import WordMapper, WordMapping, fixture_mapper, format_mappings, read_lexicon, read_rules, read_unigram

log = logging.getLogger("ctxbias")


def _text_lines(path: str) -> list[str]:
    """Plain text lines; a leading ``utt_id<TAB>`` column is dropped."""
    lines = []
    for line in Path(path).read_text().splitlines():
        if line.strip():
            lines.append(line.split("\t", 1)[1] if "\t" in line else line)
    return lines


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _mapper(args) -> WordMapper:
    if args.lexicon is None and args.unigram is None:
        return fixture_mapper()
    if args.lexicon is None or args.unigram is None:
        raise ConfigError("--lexicon and --unigram go together")
    rules = read_rules(args.rules) if args.rules else None
    return WordMapper(read_lexicon(args.lexicon), read_unigram(args.unigram), rules)


def cmd_bpe_learn(args):
    lines = _text_lines(args.corpus)
    model = bpe_mod.bpe_learn(bpe_mod.word_counts(lines), args.vocab_size, reserved=args.reserved or ())
    bpe_mod.save_model(model, args.out)
    log.info("learned %d merges into %s", len(model.merges), args.out)


def cmd_bpe_apply(args):
    model = bpe_mod.load_model(args.model)
    out = []
    for line in Path(args.input).read_text().splitlines():
        if not line.strip():
            continue
        if "\t" in line:
            utt, text = line.split("\t", 1)
            out.append(f"{utt}\t{' '.join(bpe_mod.bpe_apply(model, text))}\n")
        else:
            out.append(" ".join(bpe_mod.bpe_apply(model, line)) + "\n")
    _write(args.out, "".join(out))


def cmd_bias_build(args):
    model = bpe_mod.load_model(args.bpe)
    phrases = read_phrase_list(args.phrases)
    if args.with_mapping:
        mapper = _mapper(args)
        mapping = mapper.mapping_for(w for p in phrases for w in p.words)
        phrases = attach_mapped_alternatives(phrases, mapping, model)
        log.info("mapped %d words", len(mapping))
    fst = build_bias_fst(phrases, model)
    if args.out:
        write_fst(fst, args.out)
    else:
        sys.stdout.write(fst_to_text(fst))


def cmd_map(args):
    mapper = _mapper(args)
    items = [line.split() for line in _text_lines(args.input)] if args.input else [args.words]
    if not any(items):
        raise ConfigError("give words on the command line or --input")
    results = []
    for words in items:
        if args.phrase:
            results.append(mapper.map_phrase(words))
        else:
            results.extend(mapper.map_word(w) for w in words)
    _write(args.out, format_mappings(results))


def cmd_relabel(args):
    out = relabel_corpus(read_corpus(args.refs), read_corpus(args.hyps), ignore_case=not args.case_sensitive)
    _write(args.out, format_corpus(out))


def _decoder_config(args) -> DecoderConfig:
    return DecoderConfig(args.beam, args.lambda_c, args.lambda_b, args.length_penalty, args.max_steps)


def cmd_decode(args):
    model = bpe_mod.load_model(args.bpe)
    classes = load_classes(args.classes, model) if args.classes else []
    utts = read_corpus(args.utts)
    if args.score_table:
        scorer = read_score_table(args.score_table)
    elif args.train:
        train = [bpe_mod.bpe_apply(model, line) for line in _text_lines(args.train)]
        confusion = parse_confusion(Path(args.confusion).read_text()) if args.confusion else {}
        extra = {t for words in utts.values() for t in bpe_mod.bpe_apply(model, strip_tags(words))}
        for cls in classes:
            extra |= {cls.enter_tag, cls.exit_tag} | {s for _, s in cls.fst.isymbols if s != "<eps>"}
        scorer = NoisyChannelScorer(train, args.order, confusion, args.seed, sorted(extra), args.noise)
    else:
        raise ConfigError("decode needs --score-table or --train")
    decoder = BeamDecoder(scorer, classes, _decoder_config(args))
    out = []
    for utt, words in utts.items():
        res = decoder.decode(Utterance(utt, tuple(bpe_mod.bpe_apply(model, strip_tags(words)))))
        out.append(format_nbest_rows(utt, [(e.score, e.text) for e in res.nbest[:args.nbest]]))
    _write(args.out, "".join(out))


def cmd_eval(args):
    try:
        edges = [int(x) for x in args.edges.split(",")]
    except ValueError as e:
        raise ConfigError(f"bad --edges {args.edges!r}") from e
    hyps = top_hypotheses(read_nbest(args.decodes))
    report = evaluate(hyps, read_corpus(args.refs), edges=edges, config={"decodes": Path(args.decodes).name})
    _write(args.out, report.to_tsv())
    if args.csv:
        Path(args.csv).write_text(report.to_csv())


def cmd_fst(args):
    fst = read_fst(args.fst)
    if args.op == "compose":
        if not args.other:
            raise ConfigError("fst compose needs a second FST")
        fst = compose(fst, read_fst(args.other))
    elif args.op == "determinize":
        fst = determinize(fst)
    elif args.op == "minimize":
        fst = minimize(fst)
    elif args.op == "shortest-path":
        fst = shortest_path_fst(fst)
    if args.out:
        write_fst(fst, args.out)
    else:
        sys.stdout.write(fst_to_text(fst))


def cmd_synth(args):
    from .synthetic import SyntheticConfig, run_experiment

    cfg = SyntheticConfig(seed=args.seed, n_entity=args.n_entity, n_regular=args.n_regular)
    res = run_experiment(cfg)
    _write(args.out, "".join(f"{k}\t{v:.4f}\n" for k, v in res.rows()))


def _add_mapper_args(p):
    p.add_argument("--lexicon", help="word<TAB>phonemes lexicon (default: shipped fixture)")
    p.add_argument("--unigram", help="word<TAB>count unigram (default: shipped fixture)")
    p.add_argument("--rules", help="grapheme<TAB>phonemes letter rules for missing words")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ctxbias", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    bpe_p = sub.add_parser("bpe", help="learn or apply subword segmentation")
    bpe_sub = bpe_p.add_subparsers(dest="bpe_command", required=True)
    p = bpe_sub.add_parser("learn")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--reserved", nargs="*", help="tokens kept whole, e.g. class tags")
    p.add_argument("--out", required=True, help="model directory")
    p.set_defaults(func=cmd_bpe_learn)
    p = bpe_sub.add_parser("apply")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bpe_apply)

    bias_p = sub.add_parser("bias", help="compile a phrase list into a bias FST")
    bias_sub = bias_p.add_subparsers(dest="bias_command", required=True)
    p = bias_sub.add_parser("build")
    p.add_argument("--phrases", required=True, help="phrase<TAB>frequency lines")
    p.add_argument("--bpe", required=True, help="BPE model directory")
    p.add_argument("--with-mapping", action="store_true", help="add pronunciation-mapped alternatives")
    _add_mapper_args(p)
    p.add_argument("--out", help="FST path (symbol tables written next to it)")
    p.set_defaults(func=cmd_bias_build)

    p = sub.add_parser("map", help="map rare words to common words through pronunciation")
    p.add_argument("words", nargs="*")
    p.add_argument("--input", help="one word or phrase per line")
    p.add_argument("--phrase", action="store_true", help="map each line as one phrase")
    _add_mapper_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("relabel", help="copy class tags from recognition output onto transcriptions")
    p.add_argument("--refs", required=True, help="utt_id<TAB>transcription")
    p.add_argument("--hyps", required=True, help="utt_id<TAB>tagged recognition output")
    p.add_argument("--case-sensitive", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_relabel)

    p = sub.add_parser("decode", help="beam search with optional context FSTs")
    p.add_argument("--utts", required=True, help="utt_id<TAB>reference text seen by the channel scorer")
    p.add_argument("--bpe", required=True)
    p.add_argument("--classes", help="class manifest: name, enter tag, exit tag, phrase file")
    p.add_argument("--score-table", help="history<TAB>token<TAB>logprob table scorer")
    p.add_argument("--train", help="tagged training text for the noisy-channel scorer")
    p.add_argument("--confusion", help="intended<TAB>emitted<TAB>prob")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--beam", type=int, default=8)
    p.add_argument("--lambda-c", type=float, default=0.1)
    p.add_argument("--lambda-b", type=float, default=1.0)
    p.add_argument("--length-penalty", type=float, default=0.1)
    p.add_argument("--max-steps", type=int, default=40)
    p.add_argument("--nbest", type=int, default=5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("eval", help="WER overall and per bias-phrase bucket")
    p.add_argument("--decodes", required=True, help="utt_id<TAB>rank<TAB>score<TAB>text")
    p.add_argument("--refs", required=True, help="utt_id<TAB>tagged reference")
    p.add_argument("--edges", default="0,1,2,3")
    p.add_argument("--out", help="report TSV (default stdout)")
    p.add_argument("--csv", help="bucket,count,wer CSV for plotting")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("fst", help="debug operations on AT&T text FSTs")
    p.add_argument("op", choices=["print", "compose", "determinize", "minimize", "shortest-path"])
    p.add_argument("fst")
    p.add_argument("other", nargs="?")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fst)

    p = sub.add_parser("synth", help="run the synthetic biasing experiment")
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--n-entity", type=int, default=200)
    p.add_argument("--n-regular", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (CtxBiasError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
