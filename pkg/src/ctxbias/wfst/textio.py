"""AT&T text format for machines and symbol tables.

Arc lines are ``src<TAB>dst<TAB>isym<TAB>osym<TAB>weight`` and final lines
``state<TAB>weight``; weights carry six decimals.  The start state is the
source of the first line.  Symbol tables are ``symbol<TAB>id`` lines.
"""
from __future__ import annotations

from pathlib import Path

from ..errors import FormatError
from .core import EPS_SYMBOL, Fst, FstBuilder, SymbolTable


def format_weight(w: float) -> str:
    s = f"{w:.6f}"
    return "0.000000" if s == "-0.000000" else s


def symbols_to_text(table: SymbolTable) -> str:
    return "".join(f"{sym}\t{i}\n" for i, sym in table)


def symbols_from_text(text: str) -> SymbolTable:
    pairs = []
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 2:
            raise FormatError(f"symbol table line {n}: expected 'symbol<TAB>id'")
        try:
            pairs.append((int(fields[1]), fields[0]))
        except ValueError as e:
            raise FormatError(f"symbol table line {n}: bad id {fields[1]!r}") from e
    pairs.sort()
    if [i for i, _ in pairs] != list(range(len(pairs))):
        raise FormatError("symbol ids must be dense and start at 0")
    if not pairs or pairs[0][1] != EPS_SYMBOL:
        raise FormatError("symbol table must map <eps> to 0")
    return SymbolTable([s for _, s in pairs])


def fst_to_text(fst: Fst) -> str:
    if fst.num_states == 0 or (not fst.arcs[fst.start] and not fst.is_final(fst.start)):
        # the start state cannot be expressed; the language is empty either way
        return ""
    order = [fst.start] + [s for s in fst.states() if s != fst.start]
    lines = []
    for s in order:
        for a in fst.arcs[s]:
            lines.append(
                f"{s}\t{a.nextstate}\t{fst.isymbols.find(a.ilabel)}\t"
                f"{fst.osymbols.find(a.olabel)}\t{format_weight(a.weight)}"
            )
        if fst.is_final(s):
            lines.append(f"{s}\t{format_weight(fst.finals[s])}")
    return "\n".join(lines) + "\n"


def fst_from_text(text: str, isymbols: SymbolTable, osymbols: SymbolTable | None = None) -> Fst:
    osymbols = osymbols or isymbols
    rows = []
    max_state = -1
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        fields = line.split("\t")
        try:
            if len(fields) in (4, 5):
                src, dst = int(fields[0]), int(fields[1])
                w = float(fields[4]) if len(fields) == 5 else 0.0
                rows.append(("arc", src, dst, isymbols.find(fields[2]), osymbols.find(fields[3]), w))
                max_state = max(max_state, src, dst)
            elif len(fields) in (1, 2):
                s = int(fields[0])
                w = float(fields[1]) if len(fields) == 2 else 0.0
                rows.append(("final", s, w))
                max_state = max(max_state, s)
            else:
                raise FormatError(f"line {n}: expected 1, 2, 4 or 5 tab-separated fields")
        except KeyError as e:
            raise FormatError(f"line {n}: unknown symbol {e.args[0]!r}") from e
        except ValueError as e:
            raise FormatError(f"line {n}: {e}") from e
    b = FstBuilder(isymbols, osymbols)
    if not rows:
        return b.build()
    b.add_states(max_state + 1)
    b.set_start(rows[0][1])
    for row in rows:
        if row[0] == "arc":
            _, src, dst, il, ol, w = row
            b.add_arc(src, il, ol, w, dst)
        else:
            b.set_final(row[1], row[2])
    return b.build()


def write_fst(fst: Fst, path: str | Path) -> None:
    """Write ``path`` plus ``path.isyms`` / ``path.osyms`` companions."""
    path = Path(path)
    path.write_text(fst_to_text(fst))
    Path(f"{path}.isyms").write_text(symbols_to_text(fst.isymbols))
    Path(f"{path}.osyms").write_text(symbols_to_text(fst.osymbols))


def read_fst(path: str | Path, isymbols: str | Path | None = None, osymbols: str | Path | None = None) -> Fst:
    path = Path(path)
    isyms = symbols_from_text(Path(isymbols or f"{path}.isyms").read_text())
    osyms = symbols_from_text(Path(osymbols or f"{path}.osyms").read_text())
    return fst_from_text(path.read_text(), isyms, osyms)
