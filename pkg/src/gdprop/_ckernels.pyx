# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Semantics match ``gdprop._pykernels`` exactly."""

from libc.stdint cimport int64_t, uint64_t
from libc.stdlib cimport malloc, free

IMPLEMENTATION = "cython"


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


def knapsack_merge(list prev, list child, Py_ssize_t cap):
    cdef Py_ssize_t top_prev = len(prev) - 1
    cdef Py_ssize_t top_child = len(child) - 1
    cdef Py_ssize_t top = min(cap, top_prev + top_child)
    cdef Py_ssize_t s, m, lo, hi, best_m
    cdef int64_t best, c
    cdef int64_t *p = <int64_t *> malloc((top_prev + 1) * sizeof(int64_t))
    cdef int64_t *ch = <int64_t *> malloc((top_child + 1) * sizeof(int64_t))
    if p == NULL or ch == NULL:
        free(p)
        free(ch)
        raise MemoryError()
    try:
        for s in range(top_prev + 1):
            p[s] = prev[s]
        for s in range(top_child + 1):
            ch[s] = child[s]
        costs = [0] * (top + 1)
        choices = [0] * (top + 1)
        for s in range(top + 1):
            best = -1
            best_m = -1
            lo = s - top_prev if s > top_prev else 0
            hi = s if s < top_child else top_child
            for m in range(lo, hi + 1):
                c = p[s - m] + ch[m]
                if best < 0 or c < best:
                    best = c
                    best_m = m
            costs[s] = best
            choices[s] = best_m
        return costs, choices
    finally:
        free(p)
        free(ch)


def cross_fold(list c1, int64_t m1, list c2, int64_t m2, Py_ssize_t cap):
    cdef int64_t top = m1 * m2
    if cap < top:
        top = cap
    cdef Py_ssize_t top1 = len(c1) - 1
    cdef Py_ssize_t top2 = len(c2) - 1
    cdef Py_ssize_t s, k1, k2, lim1, lim2, b1, b2
    cdef int64_t best, c, need, rest
    cdef int64_t *a = <int64_t *> malloc((top1 + 1) * sizeof(int64_t))
    cdef int64_t *b = <int64_t *> malloc((top2 + 1) * sizeof(int64_t))
    if a == NULL or b == NULL:
        free(a)
        free(b)
        raise MemoryError()
    try:
        for s in range(top1 + 1):
            a[s] = c1[s]
        for s in range(top2 + 1):
            b[s] = c2[s]
        costs = [0] * (top + 1)
        k1s = [0] * (top + 1)
        k2s = [0] * (top + 1)
        for s in range(top + 1):
            best = -1
            b1 = 0
            b2 = 0
            lim1 = s if s < top1 else top1
            lim2 = s if s < top2 else top2
            for k1 in range(lim1 + 1):
                if k1 == m1:
                    k2 = 0
                else:
                    need = s - k1 * m2
                    if need <= 0:
                        k2 = 0
                    else:
                        rest = m1 - k1
                        k2 = (need + rest - 1) // rest
                if k2 > lim2:
                    continue
                c = a[k1] + b[k2]
                if best < 0 or c < best:
                    best = c
                    b1 = k1
                    b2 = k2
            costs[s] = best
            k1s[s] = b1
            k2s[s] = b2
        return costs, k1s, k2s
    finally:
        free(a)
        free(b)


cdef inline int _popcount(uint64_t *v, Py_ssize_t words) nogil:
    cdef int total = 0
    cdef Py_ssize_t w
    for w in range(words):
        total += __builtin_popcountll(v[w])
    return total


def cover_profile(list masks, Py_ssize_t max_size, Py_ssize_t target=-1):
    cdef Py_ssize_t n = len(masks)
    cdef object union = 0
    for m in masks:
        union |= m
    cdef Py_ssize_t nbits = union.bit_length()
    cdef Py_ssize_t words = (nbits + 63) // 64
    if words == 0:
        words = 1
    cdef int total = bin(union).count("1")
    if 0 <= target < total:
        total = target
    cdef Py_ssize_t limit = max_size if max_size < n else n
    cdef uint64_t *mw = <uint64_t *> malloc(n * words * sizeof(uint64_t) + 8)
    cdef uint64_t *acc = <uint64_t *> malloc((limit + 1) * words * sizeof(uint64_t) + 8)
    cdef Py_ssize_t *idx = <Py_ssize_t *> malloc((limit + 1) * sizeof(Py_ssize_t))
    if mw == NULL or acc == NULL or idx == NULL:
        free(mw)
        free(acc)
        free(idx)
        raise MemoryError()
    cdef Py_ssize_t i, w, r, d, e
    cdef int cov, resolved = 0
    cdef uint64_t low = 0xFFFFFFFFFFFFFFFF
    out = []
    try:
        for i in range(n):
            v = masks[i]
            for w in range(words):
                mw[i * words + w] = <uint64_t> ((v >> (64 * w)) & low)
        r = 1
        while resolved < total and r <= limit:
            for w in range(words):
                acc[w] = 0
            for d in range(r):
                idx[d] = d
                for w in range(words):
                    acc[(d + 1) * words + w] = acc[d * words + w] | mw[idx[d] * words + w]
            while True:
                cov = _popcount(&acc[r * words], words)
                if cov > total:
                    cov = total
                if cov > resolved:
                    combo = tuple([idx[e] for e in range(r)])
                    out.extend([combo] * (cov - resolved))
                    resolved = cov
                    if resolved >= total:
                        break
                d = r - 1
                while d >= 0 and idx[d] == n - r + d:
                    d -= 1
                if d < 0:
                    break
                idx[d] += 1
                for e in range(d + 1, r):
                    idx[e] = idx[e - 1] + 1
                for e in range(d, r):
                    for w in range(words):
                        acc[(e + 1) * words + w] = acc[e * words + w] | mw[idx[e] * words + w]
            r += 1
        return out
    finally:
        free(mw)
        free(acc)
        free(idx)
