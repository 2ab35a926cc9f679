"""Carry class tags from tagged recognition output over to human transcriptions.

The tag-free hypothesis is aligned to the reference with word-level edit
distance; each tagged hypothesis span is mapped through the alignment onto
the reference words it covers.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DataError, FormatError
from .tags import enter_tag, exit_tag, tag_spans

MATCH, SUB, DEL, INS = "match", "substitute", "delete", "insert"


@dataclass(frozen=True)
class AlignOp:
    ref: int | None
    hyp: int | None
    op: str


@dataclass(frozen=True)
class Alignment:
    ops: tuple[AlignOp, ...]

    @property
    def cost(self) -> int:
        return sum(o.op != MATCH for o in self.ops)

    def ref_indices(self) -> list[int]:
        return [o.ref for o in self.ops if o.ref is not None]

    def hyp_indices(self) -> list[int]:
        return [o.hyp for o in self.ops if o.hyp is not None]


def _same(a: str, b: str, ignore_case: bool) -> bool:
    return a.lower() == b.lower() if ignore_case else a == b


def align(ref: Sequence[str], hyp: Sequence[str], ignore_case: bool = True) -> Alignment:
    """Minimal Levenshtein alignment; backtrace prefers match > substitute > delete > insert."""
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            diag = d[i - 1][j - 1] + (not _same(ref[i - 1], hyp[j - 1], ignore_case))
            d[i][j] = min(diag, d[i - 1][j] + 1, d[i][j - 1] + 1)

    ops = []
    i, j = n, m
    while i or j:
        if i and j:
            same = _same(ref[i - 1], hyp[j - 1], ignore_case)
            if d[i][j] == d[i - 1][j - 1] + (not same):
                ops.append(AlignOp(i - 1, j - 1, MATCH if same else SUB))
                i, j = i - 1, j - 1
                continue
        if i and d[i][j] == d[i - 1][j] + 1:
            ops.append(AlignOp(i - 1, None, DEL))
            i -= 1
        else:
            ops.append(AlignOp(None, j - 1, INS))
            j -= 1
    return Alignment(tuple(reversed(ops)))


def edit_distance(ref: Sequence[str], hyp: Sequence[str], ignore_case: bool = False) -> int:
    return align(ref, hyp, ignore_case).cost


def _ref_span(alignment: Alignment, start: int, end: int) -> tuple[int, int] | None:
    """Reference words covered by hypothesis words [start, end).

    A deleted reference word counts as covered only when it sits strictly
    between two hypothesis words of the span.
    """
    covered = []
    consumed = 0
    for o in alignment.ops:
        if o.hyp is not None:
            if start <= o.hyp < end and o.ref is not None:
                covered.append(o.ref)
            consumed += 1
        elif start < consumed < end:
            covered.append(o.ref)
    if not covered:
        return None
    return min(covered), max(covered) + 1


def insert_tags(ref: Sequence[str], tagged_hyp: Sequence[str], ignore_case: bool = True) -> list[str]:
    """Copy the class tags of ``tagged_hyp`` onto ``ref``.

    A span that aligns only to gaps is dropped.
    """
    hyp, spans = tag_spans(tagged_hyp)
    if not spans:
        return list(ref)
    alignment = align(ref, hyp, ignore_case)
    before: dict[int, list[str]] = {}
    after: dict[int, list[str]] = {}
    for name, start, end in spans:
        r = _ref_span(alignment, start, end)
        if r is None:
            continue
        before.setdefault(r[0], []).append(enter_tag(name))
        after.setdefault(r[1] - 1, []).append(exit_tag(name))
    out = []
    for i, w in enumerate(ref):
        out.extend(before.get(i, ()))
        out.append(w)
        out.extend(after.get(i, ()))
    return out


def read_corpus(path: str | Path) -> dict[str, list[str]]:
    """``utt_id<TAB>text`` lines -> utterance id -> tokens."""
    return parse_corpus(Path(path).read_text())


def parse_corpus(text: str) -> dict[str, list[str]]:
    corpus: dict[str, list[str]] = {}
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        utt, sep, words = line.partition("\t")
        if not sep or not utt:
            raise FormatError(f"corpus line {n}: expected utt_id<TAB>text")
        if utt in corpus:
            raise FormatError(f"corpus line {n}: duplicate utterance id {utt!r}")
        corpus[utt] = words.split()
    return corpus


def format_corpus(corpus: Iterable[tuple[str, Sequence[str]]]) -> str:
    return "".join(f"{utt}\t{' '.join(words)}\n" for utt, words in corpus)


def relabel_corpus(refs: dict[str, list[str]], hyps: dict[str, list[str]],
                   ignore_case: bool = True) -> list[tuple[str, list[str]]]:
    """Tag every reference from its hypothesis; references lacking one are kept untagged."""
    out = []
    for utt, ref in refs.items():
        hyp = hyps.get(utt)
        try:
            out.append((utt, insert_tags(ref, hyp, ignore_case) if hyp is not None else list(ref)))
        except FormatError as e:
            raise DataError(f"utterance {utt}: {e}") from e
    return out
