"""Word error rate and the per-bucket report keyed by bias-phrase count."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .errors import DataError, FormatError
from .relabel import edit_distance
from .tags import count_bias_phrases, strip_tags

DEFAULT_EDGES = (0, 1, 2, 3)


def word_errors(ref: Sequence[str], hyp: Sequence[str]) -> int:
    return edit_distance(strip_tags(ref), strip_tags(hyp), ignore_case=False)


def wer(ref: Sequence[str], hyp: Sequence[str]) -> float:
    ref = strip_tags(ref)
    if not ref:
        raise DataError("WER is undefined for an empty reference")
    return word_errors(ref, hyp) / len(ref)


def corpus_wer(pairs: Sequence[tuple[Sequence[str], Sequence[str]]]) -> float:
    """Total errors over total reference words."""
    errors = sum(word_errors(r, h) for r, h in pairs)
    words = sum(len(strip_tags(r)) for r, _ in pairs)
    if words == 0:
        raise DataError("WER is undefined for an empty reference corpus")
    return errors / words


def bucket_label(count: int, edges: Sequence[int]) -> str:
    """Edges (0, 1, 2, 3) give buckets 0, 1, 2, 3+; the last edge is open-ended."""
    edges = sorted(edges)
    if count >= edges[-1]:
        return f"{edges[-1]}+"
    for lo, hi in zip(edges, edges[1:]):
        if lo <= count < hi:
            return str(lo) if hi == lo + 1 else f"{lo}-{hi - 1}"
    return f"<{edges[0]}"


@dataclass
class BucketStats:
    bucket: str
    count: int
    errors: int
    words: int

    @property
    def wer(self) -> float:
        return self.errors / self.words if self.words else math.nan


@dataclass
class EvalReport:
    overall_wer: float
    errors: int
    words: int
    per_bucket: list[BucketStats]
    config: dict[str, str] = field(default_factory=dict)

    def to_tsv(self) -> str:
        lines = [f"# {k}={v}" for k, v in sorted(self.config.items())]
        lines.append("bucket\tutterances\terrors\twords\twer")
        lines.append(f"all\t{sum(b.count for b in self.per_bucket)}\t{self.errors}\t{self.words}\t{self.overall_wer:.6f}")
        for b in self.per_bucket:
            lines.append(f"{b.bucket}\t{b.count}\t{b.errors}\t{b.words}\t{b.wer:.6f}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        return "bucket,count,wer\n" + "".join(f"{b.bucket},{b.count},{b.wer:.6f}\n" for b in self.per_bucket)


def evaluate(hyps: Mapping[str, Sequence[str]], refs: Mapping[str, Sequence[str]],
             bias_counts: Mapping[str, int] | None = None, edges: Sequence[int] = DEFAULT_EDGES,
             config: Mapping[str, str] | None = None) -> EvalReport:
    """Corpus WER plus WER per bias-phrase-count bucket; tags are stripped on both sides.

    Without ``bias_counts`` an utterance's count is the number of tagged spans in its reference.
    """
    if not edges:
        raise DataError("bucket edges must not be empty")
    buckets: dict[str, BucketStats] = {}
    order = [bucket_label(e, edges) for e in sorted(edges)]
    total_err = total_words = 0
    for utt in sorted(hyps):
        if utt not in refs:
            raise DataError(f"no reference for utterance {utt!r}")
        ref = strip_tags(refs[utt])
        err = word_errors(ref, hyps[utt])
        n = count_bias_phrases(refs[utt]) if bias_counts is None else bias_counts.get(utt, 0)
        label = bucket_label(n, edges)
        b = buckets.setdefault(label, BucketStats(label, 0, 0, 0))
        b.count += 1
        b.errors += err
        b.words += len(ref)
        total_err += err
        total_words += len(ref)
    if total_words == 0:
        raise DataError("WER is undefined for an empty reference corpus")
    ranked = sorted(buckets.values(), key=lambda b: order.index(b.bucket) if b.bucket in order else -1)
    return EvalReport(total_err / total_words, total_err, total_words, ranked, dict(config or {}))


def parse_nbest(text: str) -> dict[str, list[tuple[int, float, list[str]]]]:
    """``utt_id<TAB>rank<TAB>score<TAB>text`` rows grouped per utterance, sorted by rank."""
    out: dict[str, list[tuple[int, float, list[str]]]] = {}
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        cols = line.split("\t")
        if len(cols) != 4:
            raise FormatError(f"n-best line {n}: expected 4 tab-separated columns")
        try:
            rank, score = int(cols[1]), float(cols[2])
        except ValueError as e:
            raise FormatError(f"n-best line {n}: bad rank or score") from e
        out.setdefault(cols[0], []).append((rank, score, cols[3].split()))
    for rows in out.values():
        rows.sort(key=lambda r: r[0])
    return out


def read_nbest(path: str | Path) -> dict[str, list[tuple[int, float, list[str]]]]:
    return parse_nbest(Path(path).read_text())


def top_hypotheses(nbest: Mapping[str, list[tuple[int, float, list[str]]]]) -> dict[str, list[str]]:
    return {utt: rows[0][2] for utt, rows in nbest.items() if rows}


def format_nbest_rows(utt: str, entries: Sequence[tuple[float, str]]) -> str:
    return "".join(f"{utt}\t{rank}\t{score:.6f}\t{text}\n" for rank, (score, text) in enumerate(entries, 1))
