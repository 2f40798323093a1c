# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see _fallback.py for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.stdint cimport uint64_t, int64_t, uint8_t
from libc.stdlib cimport malloc, free
from libc.math cimport INFINITY

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix(uint64_t key, uint64_t ctr) nogil:
    cdef uint64_t z = key + (ctr + 1) * GOLDEN
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t bounded(uint64_t z, uint64_t n) nogil:
    return ((z >> 32) * n) >> 32


cdef inline double unit(uint64_t z) nogil:
    return <double>(z >> 11) * (1.0 / 9007199254740992.0)


cdef double candidate_value(const double[:, :, :, ::1] w2, int64_t cand,
                            const int64_t[::1] xdims, const int64_t[::1] adims,
                            int64_t* table, int64_t* arest, double* acc) nogil:
    cdef Py_ssize_t x1 = w2.shape[0], a1 = w2.shape[1], xr = w2.shape[2]
    cdef Py_ssize_t nplayers = xdims.shape[0]
    cdef Py_ssize_t j, x, r, a, off, stride
    cdef int64_t idx = cand, rem
    cdef double total = 0.0, best
    # decode: player 2 most significant, within a player x = 0 most significant
    off = 0
    for j in range(nplayers):
        off += xdims[j]
    for j in range(nplayers - 1, -1, -1):
        off -= xdims[j]
        for x in range(xdims[j] - 1, -1, -1):
            table[off + x] = idx % adims[j]
            idx = idx // adims[j]
    for r in range(xr):
        arest[r] = 0
        rem = r
        stride = xr
        off = 0
        for j in range(nplayers):
            stride = stride // xdims[j]
            x = rem // stride
            rem = rem % stride
            arest[r] = arest[r] * adims[j] + table[off + x]
            off += xdims[j]
    for x in range(x1):
        for a in range(a1):
            acc[a] = 0.0
            for r in range(xr):
                acc[a] += w2[x, a, r, arest[r]]
        best = acc[0]
        for a in range(1, a1):
            if acc[a] > best:
                best = acc[a]
        total += best
    return total


cdef class _Scratch:
    cdef int64_t* table
    cdef int64_t* arest
    cdef double* acc

    def __cinit__(self, Py_ssize_t ntab, Py_ssize_t xr, Py_ssize_t a1):
        self.table = <int64_t*> malloc((ntab + 1) * sizeof(int64_t))
        self.arest = <int64_t*> malloc(xr * sizeof(int64_t))
        self.acc = <double*> malloc(a1 * sizeof(double))
        if self.table == NULL or self.arest == NULL or self.acc == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.table)
        free(self.arest)
        free(self.acc)


def bf_max(w2, xdims, adims, long long start, long long stop):
    cdef const double[:, :, :, ::1] w = np.ascontiguousarray(w2, dtype=np.float64)
    cdef const int64_t[::1] xd = np.ascontiguousarray(xdims, dtype=np.int64)
    cdef const int64_t[::1] ad = np.ascontiguousarray(adims, dtype=np.int64)
    cdef _Scratch sc = _Scratch(int(np.sum(xdims, dtype=np.int64)), w.shape[2], w.shape[1])
    cdef long long c
    cdef double v, best = -INFINITY
    with nogil:
        for c in range(start, stop):
            v = candidate_value(w, c, xd, ad, sc.table, sc.arest, sc.acc)
            if v > best:
                best = v
    return best


def bf_first(w2, xdims, adims, long long start, long long stop, double threshold):
    cdef const double[:, :, :, ::1] w = np.ascontiguousarray(w2, dtype=np.float64)
    cdef const int64_t[::1] xd = np.ascontiguousarray(xdims, dtype=np.int64)
    cdef const int64_t[::1] ad = np.ascontiguousarray(adims, dtype=np.int64)
    cdef _Scratch sc = _Scratch(int(np.sum(xdims, dtype=np.int64)), w.shape[2], w.shape[1])
    cdef long long c, hit = -1
    with nogil:
        for c in range(start, stop):
            if candidate_value(w, c, xd, ad, sc.table, sc.arest, sc.acc) >= threshold:
                hit = c
                break
    return hit


def search_mc(loss, psucc, int q, int m, long long start, long long samples, unsigned long long key):
    cdef const uint8_t[::1] lo = np.ascontiguousarray(loss, dtype=np.uint8)
    cdef const double[::1] ps = np.ascontiguousarray(psucc, dtype=np.float64)
    rb_arr = np.ones(samples, dtype=np.float64)
    found_arr = np.full(samples, -1, dtype=np.int64)
    cdef double[::1] rb = rb_arr
    cdef int64_t[::1] found = found_arr
    cdef uint64_t n = lo.shape[0]
    cdef uint64_t stride = m + 2
    cdef long long s
    cdef int g, p, t, pick, seen
    cdef uint64_t base
    cdef int64_t pos, chosen
    cdef double prob
    cdef int64_t* positions = <int64_t*> malloc(m * sizeof(int64_t))
    if positions == NULL:
        raise MemoryError()
    try:
        with nogil:
            for s in range(samples):
                for g in range(q):
                    base = ((<uint64_t>(start + s)) * q + g) * stride
                    t = 0
                    for p in range(m):
                        pos = <int64_t> bounded(mix(key, base + p), n)
                        positions[p] = pos
                        t += lo[pos]
                    prob = ps[t]
                    rb[s] *= 1.0 - prob
                    if found[s] < 0 and unit(mix(key, base + m)) < prob:
                        pick = <int> bounded(mix(key, base + m + 1), t)
                        seen = -1
                        chosen = -1
                        for p in range(m):
                            if lo[positions[p]]:
                                seen += 1
                                if seen == pick:
                                    chosen = positions[p]
                                    break
                        found[s] = chosen
    finally:
        free(positions)
    return rb_arr, found_arr
