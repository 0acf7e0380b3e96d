# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled matching kernels.

Same contract and bit-identical output as the pure-Python reference in
``_dpcore_py`` (which carries the annotated recurrence); this version exists
because pairwise-similarity workloads walk ~1e11 DP cells.  The inner loops
run on raw pointers without the GIL so independent pair computations can
share a thread pool.

Ring-buffer row storage: the DP only ever reads a node's ancestor row, and
the first tree is walked in DFS preorder, so the live rows are exactly the
current root-to-node path (depth+2 rows), which stays cache resident no
matter how large the trees get.

The score-only entry points exploit a consequence of table monotonicity:
a zero-weight diagonal step can tie but never strictly beat options 1/2,
so they skip all tie bookkeeping and track just the running maximum (the
cell values are identical either way).
"""

from libc.stdint cimport int32_t, int64_t, uint8_t

import numpy as np


def _ring(depth_g, Py_ssize_t m):
    rows = int(np.max(depth_g)) + 2
    return np.zeros((rows, m + 1), dtype=np.float64)


cdef inline const int32_t* _i32(object arr) except NULL:
    cdef const int32_t[::1] view = arr
    return &view[0]


cdef inline const int64_t* _i64(object arr) except NULL:
    cdef const int64_t[::1] view = arr
    return &view[0]


cdef inline const double* _f64(object arr) except NULL:
    cdef const double[::1] view = arr
    return &view[0]


def score_diag(anc_g, pre_g, depth_g, cg, vg, anc_h, ch):
    cdef Py_ssize_t n = pre_g.shape[0]
    cdef Py_ssize_t m = anc_h.shape[0]
    ring = _ring(depth_g, m)
    cdef double[:, ::1] R = ring
    cdef double* R0 = &R[0, 0]
    cdef Py_ssize_t stride = m + 1
    cdef const int32_t* pre = _i32(pre_g)
    cdef const int32_t* dep = _i32(depth_g)
    cdef const int32_t* ah = _i32(anc_h)
    cdef const int32_t* cgp = _i32(cg)
    cdef const double* vgp = _f64(vg)
    cdef const int32_t* chp = _i32(ch)

    cdef double best = 0.0
    cdef Py_ssize_t idx, u, v, av
    cdef const double* src
    cdef double* dst
    cdef double o1, o2, o3, val, vu
    cdef int32_t cu
    with nogil:
        for idx in range(n):
            u = pre[idx]
            src = R0 + dep[u] * stride
            dst = R0 + (dep[u] + 1) * stride
            cu = cgp[u]
            vu = vgp[u]
            for v in range(m):
                av = ah[v] + 1
                o1 = src[v + 1]
                o2 = dst[av]
                o3 = src[av] + (vu if chp[v] == cu else 0.0)
                val = o1 if o1 > o2 else o2
                if o3 > val:
                    val = o3
                dst[v + 1] = val
                if val > best:
                    best = val
    return best


def score_parts(anc_g, pre_g, depth_g, cg, anc_h, ch, pw):
    cdef Py_ssize_t n = pre_g.shape[0]
    cdef Py_ssize_t m = anc_h.shape[0]
    cdef Py_ssize_t k = cg.shape[1]
    ring = _ring(depth_g, m)
    cdef double[:, ::1] R = ring
    cdef double* R0 = &R[0, 0]
    cdef Py_ssize_t stride = m + 1
    cdef const int32_t* pre = _i32(pre_g)
    cdef const int32_t* dep = _i32(depth_g)
    cdef const int32_t* ah = _i32(anc_h)
    cdef const int64_t[:, ::1] cgv = cg
    cdef const int64_t[:, ::1] chv = ch
    cdef const int64_t* cgp = &cgv[0, 0]
    cdef const int64_t* chp = &chv[0, 0]
    cdef const double* pwp = _f64(pw)

    cdef double best = 0.0
    cdef Py_ssize_t idx, u, v, av, comp
    cdef const double* src
    cdef double* dst
    cdef const int64_t* cu
    cdef const int64_t* cv
    cdef double o1, o2, o3, val, w
    with nogil:
        for idx in range(n):
            u = pre[idx]
            src = R0 + dep[u] * stride
            dst = R0 + (dep[u] + 1) * stride
            cu = cgp + u * k
            for v in range(m):
                cv = chp + v * k
                w = 0.0
                for comp in range(k):
                    if cu[comp] == cv[comp]:
                        w += pwp[comp]
                av = ah[v] + 1
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


def full_diag(anc_g, pre_g, depth_g, cg, vg, anc_h, ch, bint want_table):
    cdef Py_ssize_t n = pre_g.shape[0]
    cdef Py_ssize_t m = anc_h.shape[0]
    ring = _ring(depth_g, m)
    cdef double[:, ::1] R = ring
    cdef double* R0 = &R[0, 0]
    cdef Py_ssize_t stride = m + 1
    cdef const int32_t* pre = _i32(pre_g)
    cdef const int32_t* dep = _i32(depth_g)
    cdef const int32_t* ah = _i32(anc_h)
    cdef const int32_t* cgp = _i32(cg)
    cdef const double* vgp = _f64(vg)
    cdef const int32_t* chp = _i32(ch)
    choice = np.empty((n, m), dtype=np.uint8)
    cdef uint8_t[:, ::1] C = choice
    cdef uint8_t* C0 = &C[0, 0]
    table = np.empty((n, m), dtype=np.float64) if want_table else None
    dummy = np.zeros(1, dtype=np.float64)
    cdef double[:, ::1] Tv
    cdef double* T0
    if want_table:
        Tv = table
        T0 = &Tv[0, 0]
    else:
        T0 = _f64_mut(dummy)

    cdef double best = -1.0
    cdef Py_ssize_t bu = n, bv = m
    cdef Py_ssize_t idx, u, v, av
    cdef const double* src
    cdef double* dst
    cdef uint8_t* crow
    cdef double o1, o2, o3, val, vu
    cdef int64_t cu
    cdef uint8_t c
    with nogil:
        for idx in range(n):
            u = pre[idx]
            src = R0 + dep[u] * stride
            dst = R0 + (dep[u] + 1) * stride
            crow = C0 + u * m
            cu = cgp[u]
            vu = vgp[u]
            for v in range(m):
                av = ah[v] + 1
                o1 = src[v + 1]
                o2 = dst[av]
                o3 = src[av] + (vu if chp[v] == cu else 0.0)
                if o3 >= o1 and o3 >= o2:
                    val = o3
                    c = 3
                elif o2 >= o1:
                    val = o2
                    c = 2
                else:
                    val = o1
                    c = 1
                dst[v + 1] = val
                crow[v] = c
                if val > best or (val == best and (u < bu or (u == bu and v < bv))):
                    best = val
                    bu = u
                    bv = v
            if want_table:
                for v in range(m):
                    T0[u * m + v] = dst[v + 1]
    return best, bu, bv, choice, table


def full_parts(anc_g, pre_g, depth_g, cg, anc_h, ch, pw, bint want_table):
    cdef Py_ssize_t n = pre_g.shape[0]
    cdef Py_ssize_t m = anc_h.shape[0]
    cdef Py_ssize_t k = cg.shape[1]
    ring = _ring(depth_g, m)
    cdef double[:, ::1] R = ring
    cdef double* R0 = &R[0, 0]
    cdef Py_ssize_t stride = m + 1
    cdef const int32_t* pre = _i32(pre_g)
    cdef const int32_t* dep = _i32(depth_g)
    cdef const int32_t* ah = _i32(anc_h)
    cdef const int64_t[:, ::1] cgv = cg
    cdef const int64_t[:, ::1] chv = ch
    cdef const int64_t* cgp = &cgv[0, 0]
    cdef const int64_t* chp = &chv[0, 0]
    cdef const double* pwp = _f64(pw)
    choice = np.empty((n, m), dtype=np.uint8)
    cdef uint8_t[:, ::1] C = choice
    cdef uint8_t* C0 = &C[0, 0]
    table = np.empty((n, m), dtype=np.float64) if want_table else None
    dummy = np.zeros(1, dtype=np.float64)
    cdef double[:, ::1] Tv
    cdef double* T0
    if want_table:
        Tv = table
        T0 = &Tv[0, 0]
    else:
        T0 = _f64_mut(dummy)

    cdef double best = -1.0
    cdef Py_ssize_t bu = n, bv = m
    cdef Py_ssize_t idx, u, v, av, comp
    cdef const double* src
    cdef double* dst
    cdef uint8_t* crow
    cdef const int64_t* cu
    cdef const int64_t* cv
    cdef double o1, o2, o3, val, w
    cdef uint8_t c
    with nogil:
        for idx in range(n):
            u = pre[idx]
            src = R0 + dep[u] * stride
            dst = R0 + (dep[u] + 1) * stride
            crow = C0 + u * m
            cu = cgp + u * k
            for v in range(m):
                cv = chp + v * k
                w = 0.0
                for comp in range(k):
                    if cu[comp] == cv[comp]:
                        w += pwp[comp]
                av = ah[v] + 1
                o1 = src[v + 1]
                o2 = dst[av]
                o3 = src[av] + w
                if o3 >= o1 and o3 >= o2:
                    val = o3
                    c = 3
                elif o2 >= o1:
                    val = o2
                    c = 2
                else:
                    val = o1
                    c = 1
                dst[v + 1] = val
                crow[v] = c
                if val > best or (val == best and (u < bu or (u == bu and v < bv))):
                    best = val
                    bu = u
                    bv = v
            if want_table:
                for v in range(m):
                    T0[u * m + v] = dst[v + 1]
    return best, bu, bv, choice, table


cdef inline double* _f64_mut(object arr) except NULL:
    cdef double[::1] view = arr
    return &view[0]


def score_indicator(pre_g, depth_g, cg, anc1_h, ch):
    # Indicator weights produce small integer scores, so the ring can hold
    # int32 cells: same recurrence, exactly the per-cell values of
    # score_diag with unit weights, at roughly half the cache footprint.
    # anc1_h is the h ancestor array already shifted by +1.
    cdef Py_ssize_t n = pre_g.shape[0]
    cdef Py_ssize_t m = anc1_h.shape[0]
    rows = int(np.max(depth_g)) + 2
    ring = np.zeros((rows, m + 1), dtype=np.int32)
    cdef int32_t[:, ::1] R = ring
    cdef int32_t* R0 = &R[0, 0]
    cdef Py_ssize_t stride = m + 1
    cdef const int32_t* pre = _i32(pre_g)
    cdef const int32_t* dep = _i32(depth_g)
    cdef const int32_t* ah1 = _i32(anc1_h)
    cdef const int32_t* cgp = _i32(cg)
    cdef const int32_t* chp = _i32(ch)

    cdef int32_t best = 0
    cdef Py_ssize_t idx, u, v, av
    cdef const int32_t* src
    cdef int32_t* dst
    cdef int32_t o1, o2, o3, val
    cdef int32_t cu
    with nogil:
        for idx in range(n):
            u = pre[idx]
            src = R0 + dep[u] * stride
            dst = R0 + (dep[u] + 1) * stride
            cu = cgp[u]
            for v in range(m):
                av = ah1[v]
                o1 = src[v + 1]
                o2 = dst[av]
                o3 = src[av] + (1 if chp[v] == cu else 0)
                val = o1 if o1 > o2 else o2
                if o3 > val:
                    val = o3
                dst[v + 1] = val
                if val > best:
                    best = val
    return int(best)
