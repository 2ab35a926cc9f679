"""Tropical-semiring transducer representation.

Weights are costs (negative log probabilities): path weights add, and the
weight of a string pair is the minimum over its paths.  ``math.inf`` is the
semiring zero and marks non-final states; it never appears on an arc.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence

from ..errors import FormatError

EPSILON = 0
EPS_SYMBOL = "<eps>"
ZERO = math.inf
ONE = 0.0


def check_weight(w: float, allow_zero: bool = False) -> float:
    w = float(w)
    if math.isnan(w):
        raise FormatError("weight is NaN")
    if math.isinf(w) and not (allow_zero and w > 0):
        raise FormatError(f"weight {w} is not a finite cost")
    return w


class SymbolTable:
    """Immutable bijection between symbol strings and dense ids; id 0 is ``<eps>``."""

    __slots__ = ("_symbols", "_ids", "_hash")

    def __init__(self, symbols: Sequence[str]):
        symbols = tuple(symbols)
        if not symbols or symbols[0] != EPS_SYMBOL:
            raise FormatError("symbol id 0 must be <eps>")
        ids = {}
        for i, s in enumerate(symbols):
            if s in ids:
                raise FormatError(f"duplicate symbol {s!r}")
            if not s or any(c.isspace() for c in s):
                raise FormatError(f"symbol {s!r} is empty or contains whitespace")
            ids[s] = i
        self._symbols = symbols
        self._ids = ids
        self._hash = hash(symbols)

    @classmethod
    def of(cls, symbols: Iterable[str]) -> "SymbolTable":
        """Build a table from symbols in first-seen order, prepending ``<eps>``."""
        seen = [EPS_SYMBOL]
        known = {EPS_SYMBOL}
        for s in symbols:
            if s not in known:
                known.add(s)
                seen.append(s)
        return cls(seen)

    def find(self, key: str | int):
        """Symbol -> id or id -> symbol; raises KeyError if absent."""
        if isinstance(key, int):
            if 0 <= key < len(self._symbols):
                return self._symbols[key]
            raise KeyError(key)
        return self._ids[key]

    def __contains__(self, key) -> bool:
        if isinstance(key, int):
            return 0 <= key < len(self._symbols)
        return key in self._ids

    def __len__(self) -> int:
        return len(self._symbols)

    def __iter__(self) -> Iterator[tuple[int, str]]:
        return iter(enumerate(self._symbols))

    @property
    def symbols(self) -> tuple[str, ...]:
        return self._symbols

    def __eq__(self, other) -> bool:
        return isinstance(other, SymbolTable) and self._symbols == other._symbols

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"SymbolTable({len(self)} symbols)"


class Arc(NamedTuple):
    ilabel: int
    olabel: int
    weight: float
    nextstate: int


@dataclass(frozen=True, eq=False)
class Fst:
    """A transducer whose states are ``0 .. num_states - 1``.

    ``start == -1`` denotes the canonical empty machine (no states).
    Instances are never mutated; use :class:`FstBuilder` to make one.
    """

    arcs: tuple[tuple[Arc, ...], ...]
    finals: tuple[float, ...]
    start: int
    isymbols: SymbolTable
    osymbols: SymbolTable
    _acyclic: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.arcs)
        if len(self.finals) != n:
            raise FormatError("finals and arcs disagree on the number of states")
        if n == 0:
            if self.start != -1:
                raise FormatError("empty machine must have start -1")
            return
        if not 0 <= self.start < n:
            raise FormatError(f"start state {self.start} out of range")
        for s, arcs in enumerate(self.arcs):
            check_weight(self.finals[s], allow_zero=True)
            for a in arcs:
                if not 0 <= a.nextstate < n:
                    raise FormatError(f"arc from {s} to missing state {a.nextstate}")
                if a.ilabel not in self.isymbols or a.olabel not in self.osymbols:
                    raise FormatError(f"arc from {s} uses a label missing from its symbol table")
                check_weight(a.weight)

    @classmethod
    def empty(cls, isymbols: SymbolTable, osymbols: SymbolTable | None = None) -> "Fst":
        return cls((), (), -1, isymbols, osymbols or isymbols)

    @property
    def num_states(self) -> int:
        return len(self.arcs)

    @property
    def num_arcs(self) -> int:
        return sum(len(a) for a in self.arcs)

    def final(self, state: int) -> float:
        return self.finals[state]

    def is_final(self, state: int) -> bool:
        return self.finals[state] != ZERO

    def states(self) -> range:
        return range(len(self.arcs))

    def is_acyclic(self) -> bool:
        if not self._acyclic:
            self._acyclic.append(_topological_order(self) is not None)
        return self._acyclic[0]

    def is_acceptor(self) -> bool:
        return all(a.ilabel == a.olabel for arcs in self.arcs for a in arcs)

    def __repr__(self) -> str:
        return f"Fst(states={self.num_states}, arcs={self.num_arcs}, start={self.start})"


def _topological_order(fst: Fst) -> list[int] | None:
    """Kahn's algorithm, always releasing the smallest ready state id first."""
    import heapq

    indeg = [0] * fst.num_states
    for arcs in fst.arcs:
        for a in arcs:
            indeg[a.nextstate] += 1
    ready = [s for s in fst.states() if indeg[s] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        s = heapq.heappop(ready)
        order.append(s)
        for a in fst.arcs[s]:
            indeg[a.nextstate] -= 1
            if indeg[a.nextstate] == 0:
                heapq.heappush(ready, a.nextstate)
    if len(order) != fst.num_states:
        return None
    return order


class FstBuilder:
    """Single-owner mutable builder; :meth:`build` freezes it into an :class:`Fst`."""

    def __init__(self, isymbols: SymbolTable, osymbols: SymbolTable | None = None):
        self.isymbols = isymbols
        self.osymbols = osymbols if osymbols is not None else isymbols
        self._arcs: list[list[Arc]] = []
        self._finals: list[float] = []
        self.start = -1

    @property
    def num_states(self) -> int:
        return len(self._arcs)

    def add_state(self) -> int:
        self._arcs.append([])
        self._finals.append(ZERO)
        return len(self._arcs) - 1

    def add_states(self, n: int) -> None:
        for _ in range(n):
            self.add_state()

    def set_start(self, state: int) -> None:
        self.start = state

    def set_final(self, state: int, weight: float = ONE) -> None:
        self._finals[state] = check_weight(weight, allow_zero=True)

    def add_arc(self, src: int, ilabel: int | str, olabel: int | str, weight: float, dst: int) -> None:
        if isinstance(ilabel, str):
            ilabel = self.isymbols.find(ilabel)
        if isinstance(olabel, str):
            olabel = self.osymbols.find(olabel)
        self._arcs[src].append(Arc(ilabel, olabel, check_weight(weight), dst))

    def build(self) -> Fst:
        if not self._arcs:
            return Fst.empty(self.isymbols, self.osymbols)
        if self.start == -1:
            raise FormatError("builder has states but no start state")
        return Fst(
            tuple(tuple(a) for a in self._arcs),
            tuple(self._finals),
            self.start,
            self.isymbols,
            self.osymbols,
        )


def linear_fst(
    isymbols: SymbolTable,
    osymbols: SymbolTable,
    pairs: Sequence[tuple[int, int]],
    weights: Sequence[float] | None = None,
    final_weight: float = ONE,
) -> Fst:
    """A single-path machine over ``pairs`` of (ilabel, olabel)."""
    b = FstBuilder(isymbols, osymbols)
    b.add_states(len(pairs) + 1)
    b.set_start(0)
    for i, (il, ol) in enumerate(pairs):
        b.add_arc(i, il, ol, weights[i] if weights is not None else ONE, i + 1)
    b.set_final(len(pairs), final_weight)
    return b.build()
