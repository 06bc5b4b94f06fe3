# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; must stay bit-identical to ``_pykernels``."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

ctypedef unsigned long long u64

cdef u64 GAMMA = 0x9E3779B97F4A7C15ULL
cdef u64 DEPTH_MULT = 0xD1B54A32D192ED03ULL
cdef double U53 = 1.0 / 9007199254740992.0


cdef inline u64 mix64(u64 z) noexcept nogil:
    z = z + GAMMA
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline u64 level_key(u64 key, long depth) noexcept nogil:
    return mix64(key ^ (<u64>depth * DEPTH_MULT))


cdef inline long digit_of(u64 h, const double[:] thr) noexcept nogil:
    cdef double u = <double>(h >> 11) * U53
    cdef long j = 0
    cdef long nt = thr.shape[0]
    # searchsorted(side="right"): number of thresholds <= u
    while j < nt and thr[j] <= u:
        j += 1
    return j


def vertex_digits(key, long depth, hi, lo, thresholds):
    cdef const u64[:] h_hi = np.ascontiguousarray(hi, dtype=np.uint64)
    cdef const u64[:] h_lo = np.ascontiguousarray(lo, dtype=np.uint64)
    cdef const double[:] thr = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef Py_ssize_t n = h_lo.shape[0], i
    out = np.empty(n, dtype=np.int64)
    cdef long long[:] o = out
    cdef u64 lk = level_key(<u64>key, depth)
    with nogil:
        for i in range(n):
            o[i] = digit_of(mix64(mix64(lk ^ h_lo[i]) ^ h_hi[i]), thr)
    return out


def vertex_digits_multi(keys, long depth, hi, lo, thresholds):
    cdef const u64[:] k = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef const u64[:] h_hi = np.ascontiguousarray(hi, dtype=np.uint64)
    cdef const u64[:] h_lo = np.ascontiguousarray(lo, dtype=np.uint64)
    cdef const double[:] thr = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef Py_ssize_t n = h_lo.shape[0], i
    out = np.empty(n, dtype=np.int64)
    cdef long long[:] o = out
    with nogil:
        for i in range(n):
            o[i] = digit_of(mix64(mix64(level_key(k[i], depth) ^ h_lo[i]) ^ h_hi[i]), thr)
    return out


cdef void _fill_leaves(u64 key, long arity, long depth, const double[:] thr,
                       const double[:] dv, const double[:] pw,
                       double* vals, long long* words, long m, bint track) noexcept nogil:
    # Level-by-level in place, iterating parents from the back so children
    # overwrite only consumed slots.
    cdef Py_ssize_t count = 1, p, c, child
    cdef long k
    cdef long d
    cdef u64 lk
    vals[0] = 0.0
    words[0] = 0
    for k in range(1, depth + 1):
        lk = level_key(key, k)
        p = count - 1
        while p >= 0:
            for c in range(arity - 1, -1, -1):
                child = p * arity + c
                d = digit_of(mix64(mix64(lk ^ <u64>child) ^ 0ULL), thr)
                vals[child] = vals[p] + dv[d] * pw[k]
                if track:
                    words[child] = words[p] * m + d
            p -= 1
        count *= arity


def _words_fit(m, depth):
    return int(m) ** int(depth) < 2 ** 63


def leaf_values(key, long arity, long depth, thresholds, digit_values, powers):
    cdef const double[:] thr = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef const double[:] dv = np.ascontiguousarray(digit_values, dtype=np.float64)
    cdef const double[:] pw = np.ascontiguousarray(powers, dtype=np.float64)
    cdef long m = dv.shape[0]
    cdef bint track = _words_fit(m, depth)
    cdef Py_ssize_t total = arity ** depth
    vals = np.empty(total, dtype=np.float64)
    words = np.empty(total, dtype=np.int64)
    cdef double[:] v = vals
    cdef long long[:] w = words
    cdef u64 k64 = <u64>key
    with nogil:
        _fill_leaves(k64, arity, depth, thr, dv, pw, &v[0], &w[0], m, track)
    return vals, (words if track else None)


def leaf_values_batch(keys, long arity, long depth, thresholds, digit_values, powers):
    cdef const u64[:] k = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef const double[:] thr = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef const double[:] dv = np.ascontiguousarray(digit_values, dtype=np.float64)
    cdef const double[:] pw = np.ascontiguousarray(powers, dtype=np.float64)
    cdef Py_ssize_t reps = k.shape[0], r
    cdef Py_ssize_t total = arity ** depth
    out = np.empty((reps, total), dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef long long* scratch = <long long*> malloc(total * sizeof(long long))
    if scratch == NULL:
        raise MemoryError()
    try:
        with nogil:
            for r in range(reps):
                _fill_leaves(k[r], arity, depth, thr, dv, pw, &o[r, 0], scratch, dv.shape[0], False)
    finally:
        free(scratch)
    return out


cdef inline void child_of(u64 hi, u64 lo, u64 a, u64 c, u64* ohi, u64* olo) noexcept nogil:
    cdef u64 x0 = (lo & 0xFFFFFFFFULL) * a
    cdef u64 x1 = (lo >> 32) * a + (x0 >> 32)
    cdef u64 carry = x1 >> 32
    cdef u64 nlo = (x1 << 32) | (x0 & 0xFFFFFFFFULL)
    cdef u64 lo2 = nlo + c
    if lo2 < nlo:
        carry += 1
    ohi[0] = hi * a + carry
    olo[0] = lo2


def gw_level_sizes(keys, long max_depth, long arity, thresholds, long target):
    cdef const u64[:] kk = np.ascontiguousarray(keys, dtype=np.uint64)
    cdef const double[:] thr = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef Py_ssize_t reps = kk.shape[0], r, i, cur, nxt, cap = 64
    cdef long k, c
    cdef u64 lk, chi, clo
    sizes = np.zeros((reps, max_depth + 1), dtype=np.int64)
    cdef long long[:, ::1] s = sizes
    cdef u64* ahi = <u64*> malloc(cap * sizeof(u64))
    cdef u64* alo = <u64*> malloc(cap * sizeof(u64))
    cdef u64* bhi = <u64*> malloc(cap * sizeof(u64))
    cdef u64* blo = <u64*> malloc(cap * sizeof(u64))
    cdef u64* tmp
    try:
        for r in range(reps):
            s[r, 0] = 1
            ahi[0] = 0
            alo[0] = 0
            cur = 1
            for k in range(1, max_depth + 1):
                if cur == 0:
                    break
                if cur * arity > cap:
                    while cur * arity > cap:
                        cap *= 2
                    ahi = <u64*> realloc(ahi, cap * sizeof(u64))
                    alo = <u64*> realloc(alo, cap * sizeof(u64))
                    bhi = <u64*> realloc(bhi, cap * sizeof(u64))
                    blo = <u64*> realloc(blo, cap * sizeof(u64))
                    if ahi == NULL or alo == NULL or bhi == NULL or blo == NULL:
                        raise MemoryError()
                lk = level_key(kk[r], k)
                nxt = 0
                for i in range(cur):
                    for c in range(arity):
                        child_of(ahi[i], alo[i], <u64>arity, <u64>c, &chi, &clo)
                        if digit_of(mix64(mix64(lk ^ clo) ^ chi), thr) == target:
                            bhi[nxt] = chi
                            blo[nxt] = clo
                            nxt += 1
                s[r, k] = nxt
                tmp = ahi; ahi = bhi; bhi = tmp
                tmp = alo; alo = blo; blo = tmp
                cur = nxt
    finally:
        free(ahi); free(alo); free(bhi); free(blo)
    return sizes
