"""Highest-scoring path matchings between two labelled trees.

``match_basic`` fills the table

    A[u][v] = max( A[anc(u)][v],
                   A[u][anc(v)],
                   w(label_g(u), label_h(v)) + A[anc(u)][anc(v)] )

over all node pairs (boundary rows for the never-matched sentinel ancestor
-1 are zero), records which branch won in a choice table with ties going to
the largest option, and backtraces from the best cell.  The result is the
maximum total label weight over all matchings whose coordinates strictly
descend in both trees, in O(n*m) time.

Note the tie rule deliberately routes the backtrace through option 3 even
when the pair's own weight is zero, so a reported matching may contain
zero-weight pairs bridging two scoring pairs.  A best score of exactly zero
returns an empty matching instead of an arbitrary zero-weight pair.

The remaining entry points are slower analysis variants of the same
recurrence: an exhaustive oracle for testing, best-score-per-match-length,
a cap on skipped nodes between consecutive pairs, the top-K end cells, and
order-isomorphic subtree (rather than path) matching.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import _kernel
from .errors import DomainError, InstanceTooLargeError
from .trees import LabelledTree, Matching
from .weights import WeightSpec

_NEG_INF = float("-inf")


@dataclass(frozen=True)
class MatchResult:
    """A matching, its score, and the DP cell the backtrace started from.

    ``end_cell`` is None when the matching is empty.  ``dp_table`` is the
    dense score table (kept only on request; shape len(g) x len(h), the
    sentinel boundary rows are implicit zeros).
    """

    matching: Matching
    score: float
    end_cell: tuple[int, int] | None = None
    dp_table: np.ndarray | None = None


@dataclass(frozen=True)
class LengthIndexedResult:
    """Best score and one matching for every matching length r.

    Index r of ``scores_by_length`` (0..max_len) holds the best score over
    matchings of exactly r pairs; entry 0 is the empty matching's 0.
    """

    scores_by_length: tuple[float, ...]
    matchings: tuple[Matching, ...]


def _backtrace(choice: np.ndarray, anc_g, anc_h, u: int, v: int) -> list[tuple[int, int]]:
    pairs: list[tuple[int, int]] = []
    while u != -1 and v != -1:
        c = choice[u, v]
        if c == 3:
            pairs.append((u, v))
            u = anc_g[u]
            v = anc_h[v]
        elif c == 2:
            v = anc_h[v]
        else:
            u = anc_g[u]
    pairs.reverse()
    return pairs


def match_basic(
    g: LabelledTree,
    h: LabelledTree,
    w: WeightSpec,
    *,
    keep_table: bool = False,
) -> MatchResult:
    """Best path matching between g and h under weight function w.

    The backtrace starts from the lexicographically smallest cell attaining
    the maximum, so results are deterministic.
    """
    cg, ch = w.encode_trees([g, h])
    score, bu, bv, choice, table = _kernel.forward_full(g, h, cg, ch, keep_table)
    if score <= 0.0:
        return MatchResult(Matching(), 0.0, None, table)
    pairs = _backtrace(choice, g.ancestors, h.ancestors, bu, bv)
    return MatchResult(Matching(tuple(pairs)), float(score), (bu, bv), table)


def similarity_score(g: LabelledTree, h: LabelledTree, w: WeightSpec) -> float:
    """Score of the best matching, skipping the backtrace bookkeeping."""
    cg, ch = w.encode_trees([g, h])
    return float(_kernel.forward_score(g, h, cg, ch))


def brute_force_oracle(
    g: LabelledTree,
    h: LabelledTree,
    w: WeightSpec,
    *,
    cell_limit: int | None = 400,
) -> MatchResult:
    """Exhaustively enumerate every valid matching and return an optimum.

    Testing aid only: the recursion visits each extendable pair sequence
    once, so the instance guard refuses products of tree sizes above
    ``cell_limit`` (pass None to override).
    """
    n, m = g.node_count, h.node_count
    if cell_limit is not None and n * m > cell_limit:
        raise InstanceTooLargeError(
            f"{n}x{m} exceeds the brute-force guard of {cell_limit} cells"
        )
    desc_g = _descendant_lists(g)
    desc_h = _descendant_lists(h)
    labels_g, labels_h = g.labels, h.labels

    best_score = 0.0
    best_pairs: tuple[tuple[int, int], ...] = ()

    def extend(us, vs, score, pairs):
        nonlocal best_score, best_pairs
        if score > best_score:
            best_score = score
            best_pairs = tuple(pairs)
        for u in us:
            for v in vs:
                pairs.append((u, v))
                extend(
                    desc_g[u], desc_h[v],
                    score + w(labels_g[u], labels_h[v]), pairs,
                )
                pairs.pop()

    extend(range(n), range(m), 0.0, [])
    end = best_pairs[-1] if best_pairs else None
    return MatchResult(Matching(best_pairs), float(best_score), end)


def _descendant_lists(t: LabelledTree) -> list[list[int]]:
    desc: list[list[int]] = [[] for _ in range(t.node_count)]
    anc = t.ancestors
    for v in range(t.node_count - 1, 0, -1):
        # Ancestors of v collect v plus everything v already collected.
        a = int(anc[v])
        while a != -1:
            desc[a].append(v)
            a = int(anc[a])
    for lst in desc:
        lst.sort()
    return desc


def match_length_indexed(
    g: LabelledTree,
    h: LabelledTree,
    w: WeightSpec,
    max_len: int,
) -> LengthIndexedResult:
    """Best score over matchings of each exact length 1..max_len.

    max_len may not exceed min(depth)+1, the longest chain available in the
    shallower tree, so every requested length is feasible.  The maximum over
    all lengths equals the unconstrained best score.
    """
    if max_len < 1:
        raise DomainError("max_len must be >= 1")
    if max_len > min(g.depth, h.depth) + 1:
        raise DomainError(
            f"max_len {max_len} exceeds min tree depth + 1 = "
            f"{min(g.depth, h.depth) + 1}"
        )
    n, m = g.node_count, h.node_count
    L = max_len
    table = np.full((n + 1, m + 1, L + 1), _NEG_INF)
    table[:, :, 0] = 0.0
    choice = np.zeros((n + 1, m + 1, L + 1), dtype=np.uint8)
    anc_g = g.ancestors
    anc_h = h.ancestors
    for u in range(1, n + 1):
        au = anc_g[u - 1] + 1
        lu = g.labels[u - 1]
        for v in range(1, m + 1):
            av = anc_h[v - 1] + 1
            wval = w(lu, h.labels[v - 1])
            for r in range(1, L + 1):
                o1 = table[au, v, r]
                o2 = table[u, av, r]
                o3 = wval + table[au, av, r - 1]
                if o3 >= o1 and o3 >= o2:
                    table[u, v, r] = o3
                    choice[u, v, r] = 3
                elif o2 >= o1:
                    table[u, v, r] = o2
                    choice[u, v, r] = 2
                else:
                    table[u, v, r] = o1
                    choice[u, v, r] = 1

    scores = [0.0]
    matchings = [Matching()]
    for r in range(1, L + 1):
        plane = table[1:, 1:, r]
        best = plane.max()
        flat = int(plane.argmax())
        bu, bv = divmod(flat, m)  # argmax scans rows first: lex smallest cell
        scores.append(float(best))
        pairs = []
        u, v, rr = bu + 1, bv + 1, r
        while rr > 0:
            c = choice[u, v, rr]
            if c == 3:
                pairs.append((u - 1, v - 1))
                u = anc_g[u - 1] + 1
                v = anc_h[v - 1] + 1
                rr -= 1
            elif c == 2:
                v = anc_h[v - 1] + 1
            else:
                u = anc_g[u - 1] + 1
        pairs.reverse()
        matchings.append(Matching(tuple(pairs)))
    return LengthIndexedResult(tuple(scores), tuple(matchings))


def match_gap_limited(
    g: LabelledTree,
    h: LabelledTree,
    w: WeightSpec,
    max_gap: int,
) -> MatchResult:
    """Best matching where consecutive pairs skip at most max_gap nodes.

    The gap of a consecutive pair is the number of skipped nodes summed
    over both trees: (depth jump in g - 1) + (depth jump in h - 1).  Only
    positive-weight pairs participate; zero-weight bridge pairs would let
    any gap be laundered through free matches, which is exactly what the
    cap is meant to forbid.  Leading and trailing skips are free.
    """
    if max_gap < 0:
        raise DomainError("max_gap must be >= 0")
    n, m = g.node_count, h.node_count
    G = min(max_gap, g.depth + h.depth)  # larger budgets cannot bind
    anc_g = g.ancestors
    anc_h = h.ancestors

    # state[u][v][j]: best score of a matching of positive-weight pairs
    # whose last pair lies j ancestor-steps (summed over both trees) above
    # (u, v); j == 0 means (u, v) itself is the last pair.
    FRESH = -1
    state = np.full((n + 1, m + 1, G + 1), _NEG_INF)
    pred = np.full((n + 1, m + 1, G + 1), -2, dtype=np.int32)
    for u in range(1, n + 1):
        au = anc_g[u - 1] + 1
        lu = g.labels[u - 1]
        for v in range(1, m + 1):
            av = anc_h[v - 1] + 1
            wval = w(lu, h.labels[v - 1])
            if wval > 0.0:
                best_prev, best_j = 0.0, FRESH
                for j in range(G + 1):
                    prev = state[au, av, j]
                    if prev > best_prev:
                        best_prev, best_j = prev, j
                state[u, v, 0] = wval + best_prev
                pred[u, v, 0] = best_j
            for j in range(1, G + 1):
                o1 = state[au, v, j - 1]
                o2 = state[u, av, j - 1]
                if o2 >= o1:
                    state[u, v, j] = o2
                    pred[u, v, j] = -4  # skipped a node of h
                else:
                    state[u, v, j] = o1
                    pred[u, v, j] = -3  # skipped a node of g

    ends = state[1:, 1:, 0]
    best = float(ends.max()) if ends.size else 0.0
    if best <= 0.0:
        return MatchResult(Matching(), 0.0, None)
    flat = int(ends.argmax())
    bu, bv = divmod(flat, m)
    pairs = []
    u, v = bu + 1, bv + 1
    j = 0
    while True:
        pairs.append((u - 1, v - 1))
        nxt = int(pred[u, v, 0])
        if nxt == FRESH:
            break
        u = anc_g[u - 1] + 1
        v = anc_h[v - 1] + 1
        j = nxt
        while j > 0:
            if pred[u, v, j] == -4:
                v = anc_h[v - 1] + 1
            else:
                u = anc_g[u - 1] + 1
            j -= 1
    pairs.reverse()
    return MatchResult(Matching(tuple(pairs)), best, (bu, bv))


def match_top_k(
    g: LabelledTree,
    h: LabelledTree,
    w: WeightSpec,
    k: int,
) -> list[MatchResult]:
    """The k best positive-score DP end cells, each with its backtrace.

    End cells are pairwise distinct but the traced matchings may overlap;
    results come in nonincreasing score order (ties by cell index), so the
    first one reproduces match_basic.  Fewer than k results are returned
    when fewer positive-score end cells exist.
    """
    if k < 1:
        raise DomainError("k must be >= 1")
    cg, ch = w.encode_trees([g, h])
    score, _, _, choice, table = _kernel.forward_full(g, h, cg, ch, True)
    flat = table.ravel()
    positive = np.flatnonzero(flat > 0.0)
    if positive.size == 0:
        return []
    order = positive[np.lexsort((positive, -flat[positive]))]
    m = h.node_count
    out = []
    for cell in order[:k]:
        u, v = divmod(int(cell), m)
        pairs = _backtrace(choice, g.ancestors, h.ancestors, u, v)
        out.append(
            MatchResult(Matching(tuple(pairs)), float(flat[cell]), (u, v))
        )
    return out


def match_subtree(g: LabelledTree, h: LabelledTree, w: WeightSpec) -> MatchResult:
    """Best matching under the relaxed order-isomorphism condition.

    Matched pairs must agree on comparability in both trees (u_i below u_j
    exactly when v_i below v_j), which admits branching subtrees instead of
    single paths.  Bottom-up over node pairs: matching (u, v) scores their
    label weight plus an exact maximum-weight assignment between their
    children's subtree scores, where a child's score may also route through
    a single child on either side, leaving that node unmatched.  The answer
    is the best matched pair anywhere in the product, so roots need not be
    matched.  Always at least the path-matching score.
    """
    n, m = g.node_count, h.node_count
    kids_g = g.children
    kids_h = h.children
    labels_g, labels_h = g.labels, h.labels
    B = np.zeros((n, m))  # score when (u, v) is matched
    S = np.zeros((n, m))  # best within the two subtrees, (u, v) not required

    def assignment(u: int, v: int) -> tuple[float, list[tuple[int, int]]]:
        cu, cv = kids_g[u], kids_h[v]
        if not cu or not cv:
            return 0.0, []
        sub = S[np.ix_(cu, cv)]
        if sub.max() <= 0.0:
            return 0.0, []
        rows, cols = linear_sum_assignment(sub, maximize=True)
        total = float(sub[rows, cols].sum())
        chosen = [
            (cu[r], cv[c]) for r, c in zip(rows, cols) if S[cu[r], cv[c]] > 0.0
        ]
        return total, chosen

    for u in range(n - 1, -1, -1):
        for v in range(m - 1, -1, -1):
            assign_total, _ = assignment(u, v)
            b = w(labels_g[u], labels_h[v]) + assign_total
            B[u, v] = b
            s = b
            for cu in kids_g[u]:
                if S[cu, v] > s:
                    s = S[cu, v]
            for cv in kids_h[v]:
                if S[u, cv] > s:
                    s = S[u, cv]
            S[u, v] = s

    best = float(B.max())
    if best <= 0.0:
        return MatchResult(Matching(), 0.0, None)
    flat = int(B.argmax())
    bu, bv = divmod(flat, m)

    pairs: list[tuple[int, int]] = []

    def emit_matched(u: int, v: int) -> None:
        pairs.append((u, v))
        _, chosen = assignment(u, v)
        for cu, cv in chosen:
            emit_routed(cu, cv)

    def emit_routed(u: int, v: int) -> None:
        # Prefer matching here, then routing down the first g child, then h.
        if B[u, v] == S[u, v]:
            emit_matched(u, v)
            return
        for cu in kids_g[u]:
            if S[cu, v] == S[u, v]:
                emit_routed(cu, v)
                return
        for cv in kids_h[v]:
            if S[u, cv] == S[u, v]:
                emit_routed(u, cv)
                return
        raise AssertionError("subtree backtrace lost the optimal value")

    emit_matched(bu, bv)
    pairs.sort()
    return MatchResult(Matching(tuple(pairs)), best, (bu, bv))


# ---------------------------------------------------------------------------
# Match record serialization
# ---------------------------------------------------------------------------
#
# Text form: one "u<TAB>v<TAB>w(u,v)" line per pair, then a trailing
# "score<TAB>S" line.  JSON form: {"pairs": [[u, v, w], ...], "score": S,
# "end_cell": [u, v] | null}.

def format_match_record(
    result: MatchResult, g: LabelledTree, h: LabelledTree, w: WeightSpec
) -> str:
    lines = [
        f"{u}\t{v}\t{format(w(g.labels[u], h.labels[v]), 'g')}"
        for u, v in result.matching
    ]
    lines.append(f"score\t{format(result.score, 'g')}")
    return "\n".join(lines) + "\n"


def match_record_json(
    result: MatchResult, g: LabelledTree, h: LabelledTree, w: WeightSpec
) -> str:
    doc = {
        "pairs": [
            [u, v, w(g.labels[u], h.labels[v])] for u, v in result.matching
        ],
        "score": result.score,
        "end_cell": list(result.end_cell) if result.end_cell else None,
    }
    return json.dumps(doc, indent=2) + "\n"
