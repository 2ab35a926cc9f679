"""Exhaustive decoding: every admissible token sequence scored level by level.

Written against the scoring rules directly, without the decoder's helpers.
With no pruning the beam at step t is every live prefix of length t - 1,
so the normalization term can be computed over that whole level.
"""
import math

from ctxbias.wfst import EPSILON


def allowed(prefix_state, vocab, classes):
    """(token id, log P_c or None, next state) moves for a prefix in the given FST state."""
    moves = []
    if prefix_state is None:
        exits = {c.exit_tag for c in classes}
        enters = {c.enter_tag: k for k, c in enumerate(classes)}
        for i, tok in enumerate(vocab):
            if tok in exits:
                continue
            nxt = (enters[tok], classes[enters[tok]].fst.start) if tok in enters else None
            moves.append((i, None, nxt))
        return moves
    k, s = prefix_state
    fst = classes[k].fst
    for a in fst.arcs[s]:
        moves.append((vocab.index(fst.isymbols.find(a.ilabel)), -a.weight, (k, a.nextstate)))
    if fst.finals[s] != math.inf:
        moves.append((vocab.index(classes[k].exit_tag), -fst.finals[s], None))
    return moves


def exhaustive(utt, scorer, classes, lambda_c, lambda_b, alpha, max_steps, eos="</s>"):
    vocab = list(scorer.vocab)
    eos_id = vocab.index(eos)
    live = [((), 0.0, None)]
    done = []
    gammas = []
    for _ in range(max_steps):
        moves = {p: allowed(p[2], vocab, classes) for p in live}
        inside = [max(m[1] for m in moves[p]) for p in live if p[2] is not None and moves[p]]
        gamma = sum(inside) / len(inside) if inside else 0.0
        gammas.append((len(inside), gamma))
        nxt = []
        for p in live:
            lp = scorer.log_probs(utt, p[0])
            for tok, pc, state in moves[p]:
                s = lp[tok] + (lambda_c * pc if p[2] is not None else lambda_b * gamma)
                if s == -math.inf:
                    continue
                q = (p[0] + (tok,), p[1] + s, state)
                (done if tok == eos_id else nxt).append(q)
        live = nxt
        if not live:
            break
    else:
        done += [p for p in live if p[2] is None]
    ranked = []
    for toks, acc, _ in done:
        n = len([t for t in toks if t != eos_id])
        ranked.append((acc / ((5 + n) / 6) ** alpha, toks, acc))
    ranked.sort(key=lambda r: (-r[0], r[1]))
    return ranked, gammas
