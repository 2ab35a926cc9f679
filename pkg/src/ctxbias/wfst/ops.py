"""Transducer algorithms over the tropical semiring.

Every function is pure: inputs are left untouched and a new :class:`Fst`
is returned.  Determinization and minimization treat each (ilabel, olabel)
pair as one composite label, which keeps the full weighted relation of a
non-functional transducer intact.
"""
from __future__ import annotations

import heapq
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

from ..errors import (
    AlphabetError,
    EmptyLanguageError,
    PreconditionError,
    UnsupportedStructureError,
)
from .core import EPSILON, ONE, ZERO, Arc, Fst, FstBuilder, _topological_order, linear_fst

# signature quantum used when deciding that two pushed weights are equal
WEIGHT_QUANTUM = 1e-10

Relation = dict[tuple[tuple[str, ...], tuple[str, ...]], float]


@dataclass(frozen=True)
class Path:
    arcs: tuple[tuple[int, Arc], ...]  # (source state, arc)
    total_weight: float
    input: tuple[str, ...]
    output: tuple[str, ...]
    final_weight: float = ONE


def _require_acyclic(fst: Fst, what: str) -> list[int]:
    order = _topological_order(fst)
    if order is None:
        raise UnsupportedStructureError(f"{what} requires an acyclic machine")
    return order


def _renumber(fst: Fst, keep: list[int], start: int) -> Fst:
    """Restrict ``fst`` to the states in ``keep`` (in that order) and renumber."""
    new_id = {s: i for i, s in enumerate(keep)}
    b = FstBuilder(fst.isymbols, fst.osymbols)
    b.add_states(len(keep))
    for s in keep:
        for a in fst.arcs[s]:
            if a.nextstate in new_id:
                b.add_arc(new_id[s], a.ilabel, a.olabel, a.weight, new_id[a.nextstate])
        b.set_final(new_id[s], fst.finals[s])
    b.set_start(new_id[start])
    return b.build()


def connect(fst: Fst) -> Fst:
    """Drop states that are not both accessible and coaccessible."""
    if fst.num_states == 0:
        return fst
    access = {fst.start}
    stack = [fst.start]
    while stack:
        s = stack.pop()
        for a in fst.arcs[s]:
            if a.nextstate not in access:
                access.add(a.nextstate)
                stack.append(a.nextstate)
    reverse = defaultdict(list)
    for s in fst.states():
        for a in fst.arcs[s]:
            reverse[a.nextstate].append(s)
    coaccess = {s for s in fst.states() if fst.is_final(s)}
    stack = list(coaccess)
    while stack:
        s = stack.pop()
        for p in reverse[s]:
            if p not in coaccess:
                coaccess.add(p)
                stack.append(p)
    keep = sorted(access & coaccess)
    if fst.start not in coaccess:
        return Fst.empty(fst.isymbols, fst.osymbols)
    if len(keep) == fst.num_states:
        return fst
    return _renumber(fst, keep, fst.start)


def compose(a: Fst, b: Fst) -> Fst:
    """Weighted composition with the three-state epsilon filter.

    Filter state 0 allows anything; 1 means the last move advanced only
    ``a`` on an output epsilon; 2 means it advanced only ``b`` on an input
    epsilon.  Blocking 1->2 and 2->1 leaves one path per epsilon interleaving.
    """
    if a.osymbols != b.isymbols:
        raise AlphabetError("output symbols of the left machine differ from input symbols of the right")
    if a.num_states == 0 or b.num_states == 0:
        return Fst.empty(a.isymbols, b.osymbols)

    b_index: list[dict[int, list[Arc]]] = []
    for q in b.states():
        by_label = defaultdict(list)
        for arc in b.arcs[q]:
            by_label[arc.ilabel].append(arc)
        b_index.append(by_label)

    builder = FstBuilder(a.isymbols, b.osymbols)
    ids: dict[tuple[int, int, int], int] = {}
    queue: list[tuple[int, int, int]] = []

    def state_id(t):
        if t not in ids:
            ids[t] = builder.add_state()
            queue.append(t)
        return ids[t]

    builder.set_start(state_id((a.start, b.start, 0)))
    head = 0
    while head < len(queue):
        p, q, f = queue[head]
        src = ids[queue[head]]
        head += 1
        if a.is_final(p) and b.is_final(q):
            builder.set_final(src, a.finals[p] + b.finals[q])
        b_eps = b_index[q].get(EPSILON, ())
        for ea in a.arcs[p]:
            if ea.olabel == EPSILON:
                if f != 2:
                    builder.add_arc(src, ea.ilabel, EPSILON, ea.weight, state_id((ea.nextstate, q, 1)))
                if f == 0:
                    for eb in b_eps:
                        builder.add_arc(src, ea.ilabel, eb.olabel, ea.weight + eb.weight,
                                        state_id((ea.nextstate, eb.nextstate, 0)))
            else:
                for eb in b_index[q].get(ea.olabel, ()):
                    builder.add_arc(src, ea.ilabel, eb.olabel, ea.weight + eb.weight,
                                    state_id((ea.nextstate, eb.nextstate, 0)))
        if f != 1:
            for eb in b_eps:
                builder.add_arc(src, EPSILON, eb.olabel, eb.weight, state_id((p, eb.nextstate, 2)))
    return connect(builder.build())


def is_deterministic(fst: Fst) -> bool:
    """No (epsilon, epsilon) arcs and no repeated (ilabel, olabel) pair leaving a state."""
    for arcs in fst.arcs:
        seen = set()
        for a in arcs:
            key = (a.ilabel, a.olabel)
            if key == (EPSILON, EPSILON) or key in seen:
                return False
            seen.add(key)
    return True


def is_input_deterministic(fst: Fst) -> bool:
    """No input-epsilon arcs and no repeated ilabel leaving a state."""
    for arcs in fst.arcs:
        labels = [a.ilabel for a in arcs]
        if EPSILON in labels or len(set(labels)) != len(labels):
            return False
    return True


def determinize(fst: Fst) -> Fst:
    """Weighted subset construction over (ilabel, olabel) pairs for acyclic machines.

    Subsets carry residual weights; (eps, eps) arcs are folded in through
    weighted epsilon closure.  On acceptors the result is input-deterministic.
    """
    order = _require_acyclic(fst, "determinize")
    if fst.num_states == 0:
        return fst
    pos = {s: i for i, s in enumerate(order)}

    def closure(subset: dict[int, float]) -> dict[int, float]:
        out = dict(subset)
        heap = [(pos[s], s) for s in out]
        heapq.heapify(heap)
        done = set()
        while heap:
            _, s = heapq.heappop(heap)
            if s in done:
                continue
            done.add(s)
            for a in fst.arcs[s]:
                if a.ilabel == EPSILON and a.olabel == EPSILON:
                    w = out[s] + a.weight
                    if w < out.get(a.nextstate, ZERO):
                        out[a.nextstate] = w
                        heapq.heappush(heap, (pos[a.nextstate], a.nextstate))
        return out

    def key(subset):
        return tuple(sorted(subset.items()))

    builder = FstBuilder(fst.isymbols, fst.osymbols)
    ids: dict[tuple, int] = {}
    pending = []

    def state_id(subset):
        k = key(subset)
        if k not in ids:
            ids[k] = builder.add_state()
            pending.append(subset)
        return ids[k]

    builder.set_start(state_id(closure({fst.start: ONE})))
    head = 0
    while head < len(pending):
        subset = pending[head]
        src = head
        head += 1
        final = min((r + fst.finals[s] for s, r in subset.items()), default=ZERO)
        if final != ZERO:
            builder.set_final(src, final)
        by_label: dict[tuple[int, int], list[tuple[float, int]]] = defaultdict(list)
        for s, r in subset.items():
            for a in fst.arcs[s]:
                if a.ilabel == EPSILON and a.olabel == EPSILON:
                    continue
                by_label[(a.ilabel, a.olabel)].append((r + a.weight, a.nextstate))
        for label in sorted(by_label):
            moves = by_label[label]
            w_min = min(w for w, _ in moves)
            dest: dict[int, float] = {}
            for w, n in moves:
                residual = w - w_min
                if residual < dest.get(n, ZERO):
                    dest[n] = residual
            builder.add_arc(src, label[0], label[1], w_min, state_id(closure(dest)))
    return builder.build()


def shortest_distance_to_final(fst: Fst, order: list[int]) -> list[float]:
    dist = [ZERO] * fst.num_states
    for s in reversed(order):
        d = fst.finals[s]
        for a in fst.arcs[s]:
            d = min(d, a.weight + dist[a.nextstate])
        dist[s] = d
    return dist


def push_weights(fst: Fst) -> Fst:
    """Push weights toward the start state of an acyclic, connected machine.

    The start state absorbs the total potential, so every string keeps its weight.
    """
    order = _require_acyclic(fst, "push_weights")
    if fst.num_states == 0:
        return fst
    dist = shortest_distance_to_final(fst, order)
    b = FstBuilder(fst.isymbols, fst.osymbols)
    b.add_states(fst.num_states)
    b.set_start(fst.start)
    for s in fst.states():
        base = 0.0 if s == fst.start else dist[s]
        for a in fst.arcs[s]:
            b.add_arc(s, a.ilabel, a.olabel, a.weight + dist[a.nextstate] - base, a.nextstate)
        if fst.is_final(s):
            b.set_final(s, fst.finals[s] - base)
    return b.build()


def _q(w: float) -> int:
    return round(w / WEIGHT_QUANTUM)


def minimize(fst: Fst) -> Fst:
    """Minimize an acyclic machine that is deterministic over (ilabel, olabel) pairs.

    Weights are pushed toward the start, then states with identical futures
    are merged bottom-up (acyclic minimization by signature).
    """
    order = _require_acyclic(fst, "minimize")
    if not is_deterministic(fst):
        raise PreconditionError("minimize requires a deterministic machine")
    fst = connect(fst)
    if fst.num_states == 0:
        return fst
    fst = push_weights(fst)
    order = _topological_order(fst)

    cls: dict[int, int] = {}
    sig_to_cls: dict[tuple, int] = {}
    for s in reversed(order):
        sig = (
            _q(fst.finals[s]) if fst.is_final(s) else None,
            tuple(sorted((a.ilabel, a.olabel, _q(a.weight), cls[a.nextstate]) for a in fst.arcs[s])),
        )
        if sig not in sig_to_cls:
            sig_to_cls[sig] = s
        cls[s] = sig_to_cls[sig]

    reps = sorted(set(cls.values()))
    new_id = {r: i for i, r in enumerate(reps)}
    b = FstBuilder(fst.isymbols, fst.osymbols)
    b.add_states(len(reps))
    for r in reps:
        for a in fst.arcs[r]:
            b.add_arc(new_id[r], a.ilabel, a.olabel, a.weight, new_id[cls[a.nextstate]])
        b.set_final(new_id[r], fst.finals[r])
    b.set_start(new_id[cls[fst.start]])
    return b.build()


def top_sort(fst: Fst) -> Fst:
    """Renumber states so that every arc goes from a lower to a higher id."""
    order = _require_acyclic(fst, "top_sort")
    if fst.num_states == 0 or order == list(fst.states()):
        return fst
    return _renumber(fst, order, fst.start)


def _make_path(fst: Fst, steps: list[tuple[int, Arc]], final_state: int) -> Path:
    total = 0.0
    for _, a in steps:
        total += a.weight
    total += fst.finals[final_state]
    return Path(
        tuple(steps),
        total,
        tuple(fst.isymbols.find(a.ilabel) for _, a in steps if a.ilabel != EPSILON),
        tuple(fst.osymbols.find(a.olabel) for _, a in steps if a.olabel != EPSILON),
        fst.finals[final_state],
    )


def shortest_path(fst: Fst) -> Path:
    """Minimum-weight accepting path.

    Ties go to the lexicographically smallest output-label sequence, then
    to the smallest sequence of visited state ids.  Cyclic machines are
    accepted when all weights are non-negative; the tie-break is then only
    applied among paths Dijkstra settles first.
    """
    if fst.num_states == 0:
        raise EmptyLanguageError("empty machine has no accepting path")
    order = _topological_order(fst)
    if order is not None:
        return _shortest_path_acyclic(fst, order)
    return _shortest_path_dijkstra(fst)


def _shortest_path_acyclic(fst: Fst, order: list[int]) -> Path:
    # best[s] = (suffix weight, suffix outputs, suffix states, chosen arc or None)
    best: list[tuple | None] = [None] * fst.num_states
    for s in reversed(order):
        cand = None
        if fst.is_final(s):
            cand = (fst.finals[s], (), (), None)
        for a in fst.arcs[s]:
            nxt = best[a.nextstate]
            if nxt is None:
                continue
            out = (a.olabel,) + nxt[1] if a.olabel != EPSILON else nxt[1]
            c = (a.weight + nxt[0], out, (a.nextstate,) + nxt[2], a)
            if cand is None or c[:3] < cand[:3]:
                cand = c
        best[s] = cand
    if best[fst.start] is None:
        raise EmptyLanguageError("machine has no accepting path")
    steps = []
    s = fst.start
    while best[s][3] is not None:
        a = best[s][3]
        steps.append((s, a))
        s = a.nextstate
    return _make_path(fst, steps, s)


def _shortest_path_dijkstra(fst: Fst) -> Path:
    if any(a.weight < 0 for arcs in fst.arcs for a in arcs):
        raise PreconditionError("shortest_path on a cyclic machine requires non-negative weights")
    superfinal = fst.num_states
    dist = {fst.start: (0.0, ())}
    back: dict[int, tuple[int, Arc] | None] = {fst.start: None}
    heap = [(0.0, (), fst.start)]
    done = set()
    while heap:
        w, out, s = heapq.heappop(heap)
        if s in done:
            continue
        done.add(s)
        if s == superfinal:
            break
        if fst.is_final(s):
            c = (w + fst.finals[s], out)
            if superfinal not in dist or c < dist[superfinal]:
                dist[superfinal] = c
                back[superfinal] = (s, None)
                heapq.heappush(heap, (c[0], c[1], superfinal))
        for a in fst.arcs[s]:
            c = (w + a.weight, out + ((a.olabel,) if a.olabel != EPSILON else ()))
            n = a.nextstate
            if n not in done and (n not in dist or c < dist[n]):
                dist[n] = c
                back[n] = (s, a)
                heapq.heappush(heap, (c[0], c[1], n))
    if superfinal not in done:
        raise EmptyLanguageError("machine has no accepting path")
    last = back[superfinal][0]
    steps = []
    s = last
    while back[s] is not None:
        p, a = back[s]
        steps.append((p, a))
        s = p
    steps.reverse()
    return _make_path(fst, steps, last)


def path_to_fst(fst: Fst, path: Path) -> Fst:
    """The single path as a linear machine sharing ``fst``'s symbol tables."""
    pairs = [(a.ilabel, a.olabel) for _, a in path.arcs]
    weights = [a.weight for _, a in path.arcs]
    return linear_fst(fst.isymbols, fst.osymbols, pairs, weights, path.final_weight)


def shortest_path_fst(fst: Fst) -> Fst:
    return path_to_fst(fst, shortest_path(fst))


def enumerate_relation(fst: Fst, max_len: int | None = None) -> Relation:
    """Exhaustive weighted relation over paths of at most ``max_len`` arcs.

    Maps (input symbols, output symbols), epsilons removed, to the minimum
    weight.  ``max_len`` may be omitted only for acyclic machines.
    """
    if fst.num_states == 0:
        return {}
    if max_len is None and not fst.is_acyclic():
        raise UnsupportedStructureError("enumerating a cyclic machine needs max_len")
    isyms, osyms = fst.isymbols, fst.osymbols
    rel: Relation = {}

    def visit(s, depth, w, ins, outs):
        if fst.is_final(s):
            k = (tuple(ins), tuple(outs))
            total = w + fst.finals[s]
            if total < rel.get(k, ZERO):
                rel[k] = total
        if max_len is not None and depth == max_len:
            return
        for a in fst.arcs[s]:
            if a.ilabel != EPSILON:
                ins.append(isyms.find(a.ilabel))
            if a.olabel != EPSILON:
                outs.append(osyms.find(a.olabel))
            visit(a.nextstate, depth + 1, w + a.weight, ins, outs)
            if a.ilabel != EPSILON:
                ins.pop()
            if a.olabel != EPSILON:
                outs.pop()

    visit(fst.start, 0, 0.0, [], [])
    return rel


def relations_close(r1: Relation, r2: Relation, tol: float = 1e-9) -> bool:
    if r1.keys() != r2.keys():
        return False
    return all(math.isclose(r1[k], r2[k], rel_tol=0.0, abs_tol=tol) for k in r1)


def union_of_paths(isymbols, osymbols, paths: Iterable[tuple[list[tuple[int, int]], list[float]]]) -> Fst:
    """Union of non-empty linear paths sharing one start state; each path gets its own states."""
    b = FstBuilder(isymbols, osymbols)
    start = b.add_state()
    b.set_start(start)
    for pairs, weights in paths:
        if not pairs:
            raise PreconditionError("union_of_paths needs non-empty paths")
        s = start
        for (il, ol), w in zip(pairs, weights):
            n = b.add_state()
            b.add_arc(s, il, ol, w, n)
            s = n
        b.set_final(s, ONE)
    return b.build()
