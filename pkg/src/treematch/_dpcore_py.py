"""Pure-Python matching kernels, bit-identical to the Cython backend.

This is the import-time fallback when the compiled extension is missing and
the reference the cross-backend tests compare against.  Same recurrence,
same tie rules, same traversal; only the speed differs.

Cell recurrence, with option indices as recorded in the choice table::

    A[u][v] = max( A[anc(u)][v],                 # option 1
                   A[u][anc(v)],                 # option 2
                   w(u, v) + A[anc(u)][anc(v)] ) # option 3

Boundary rows/columns (ancestor -1) are zero.  Ties go to the largest
option index.  Rows are stored in a (depth+2)-row ring indexed by depth;
walking the first tree in DFS preorder guarantees the ancestor's row is
still current when a node is processed.
"""

from __future__ import annotations

import numpy as np


def _ring(depth_g, m):
    rows = int(depth_g.max()) + 2
    return [[0.0] * (m + 1) for _ in range(rows)]


def _update_best(best, bu, bv, value, u, v):
    if value > best or (value == best and (u < bu or (u == bu and v < bv))):
        return value, u, v
    return best, bu, bv


def score_diag(anc_g, pre_g, depth_g, cg, vg, anc_h, ch):
    m = len(anc_h)
    ring = _ring(depth_g, m)
    pre = pre_g.tolist()
    depth = depth_g.tolist()
    anch = [a + 1 for a in anc_h.tolist()]
    cgl = cg.tolist()
    vgl = vg.tolist()
    chl = ch.tolist()
    best = 0.0
    for u in pre:
        d = depth[u] + 1
        src = ring[d - 1]
        dst = ring[d]
        cu = cgl[u]
        vu = vgl[u]
        for v in range(m):
            av = anch[v]
            o1 = src[v + 1]
            o2 = dst[av]
            o3 = src[av] + (vu if chl[v] == cu else 0.0)
            val = o1 if o1 > o2 else o2
            if o3 > val:
                val = o3
            dst[v + 1] = val
            if val > best:
                best = val
    return best


def score_parts(anc_g, pre_g, depth_g, cg, anc_h, ch, pw):
    m = len(anc_h)
    k = cg.shape[1]
    ring = _ring(depth_g, m)
    pre = pre_g.tolist()
    depth = depth_g.tolist()
    anch = [a + 1 for a in anc_h.tolist()]
    cgl = [tuple(row) for row in cg.tolist()]
    chl = [tuple(row) for row in ch.tolist()]
    pwl = pw.tolist()
    best = 0.0
    for u in pre:
        d = depth[u] + 1
        src = ring[d - 1]
        dst = ring[d]
        cu = cgl[u]
        for v in range(m):
            av = anch[v]
            cv = chl[v]
            w = 0.0
            for c in range(k):
                if cu[c] == cv[c]:
                    w += pwl[c]
            o1 = src[v + 1]
            o2 = dst[av]
            o3 = src[av] + w
            val = o1 if o1 > o2 else o2
            if o3 > val:
                val = o3
            dst[v + 1] = val
            if val > best:
                best = val
    return best


def _full(anc_g, pre_g, depth_g, anc_h, weight_at, want_table):
    n = len(anc_g)
    m = len(anc_h)
    ring = _ring(depth_g, m)
    pre = pre_g.tolist()
    depth = depth_g.tolist()
    anch = [a + 1 for a in anc_h.tolist()]
    choice = np.empty((n, m), dtype=np.uint8)
    table = np.empty((n, m), dtype=np.float64) if want_table else None
    best, bu, bv = -1.0, n, m
    for u in pre:
        d = depth[u] + 1
        src = ring[d - 1]
        dst = ring[d]
        crow = [0] * m
        for v in range(m):
            av = anch[v]
            o1 = src[v + 1]
            o2 = dst[av]
            o3 = src[av] + weight_at(u, v)
            if o3 >= o1 and o3 >= o2:
                val, c = o3, 3
            elif o2 >= o1:
                val, c = o2, 2
            else:
                val, c = o1, 1
            dst[v + 1] = val
            crow[v] = c
            best, bu, bv = _update_best(best, bu, bv, val, u, v)
        choice[u] = crow
        if want_table:
            table[u] = dst[1:]
    return best, bu, bv, choice, table


def full_diag(anc_g, pre_g, depth_g, cg, vg, anc_h, ch, want_table):
    cgl = cg.tolist()
    vgl = vg.tolist()
    chl = ch.tolist()

    def weight_at(u, v):
        return vgl[u] if cgl[u] == chl[v] else 0.0

    return _full(anc_g, pre_g, depth_g, anc_h, weight_at, want_table)


def full_parts(anc_g, pre_g, depth_g, cg, anc_h, ch, pw, want_table):
    k = cg.shape[1]
    cgl = [tuple(row) for row in cg.tolist()]
    chl = [tuple(row) for row in ch.tolist()]
    pwl = pw.tolist()

    def weight_at(u, v):
        cu = cgl[u]
        cv = chl[v]
        w = 0.0
        for c in range(k):
            if cu[c] == cv[c]:
                w += pwl[c]
        return w

    return _full(anc_g, pre_g, depth_g, anc_h, weight_at, want_table)


def score_indicator(pre_g, depth_g, cg, anc1_h, ch):
    m = len(anc1_h)
    rows = int(depth_g.max()) + 2
    ring = [[0] * (m + 1) for _ in range(rows)]
    pre = pre_g.tolist()
    depth = depth_g.tolist()
    anch = anc1_h.tolist()
    cgl = cg.tolist()
    chl = ch.tolist()
    best = 0
    for u in pre:
        d = depth[u] + 1
        src = ring[d - 1]
        dst = ring[d]
        cu = cgl[u]
        for v in range(m):
            av = anch[v]
            o1 = src[v + 1]
            o2 = dst[av]
            o3 = src[av] + (1 if chl[v] == cu else 0)
            val = o1 if o1 > o2 else o2
            if o3 > val:
                val = o3
            dst[v + 1] = val
            if val > best:
                best = val
    return best
