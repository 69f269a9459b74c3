# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels: pair updates, column zero counts, column AND."""
from libc.stdint cimport uint8_t, uint32_t, uint64_t, int32_t, int64_t
from libc.string cimport memcpy

import numpy as np

cdef extern from *:
    """
    static inline void sh_atomic_or(unsigned char *p, unsigned char v) {
        __atomic_fetch_or(p, v, __ATOMIC_RELAXED);
    }
    static inline int sh_popcount64(unsigned long long x) {
        return __builtin_popcountll(x);
    }
    """
    void sh_atomic_or(unsigned char *p, unsigned char v) nogil
    int sh_popcount64(unsigned long long x) nogil


cdef inline uint32_t mix32(uint32_t h) noexcept nogil:
    h ^= h >> 16
    h = h * <uint32_t>0x45D9F3B
    h ^= h >> 16
    h = h * <uint32_t>0x45D9F3B
    h ^= h >> 16
    return h


def record_pairs_raw(uint8_t[::1] buf, const uint32_t[::1] iip, const uint32_t[::1] oip,
                     int r, int num_ra, int num_va, uint64_t g,
                     const int32_t[::1] cbn, const int32_t[::1] clbs,
                     const int64_t[::1] col_base, uint64_t cols_per_cs,
                     uint32_t mangle_a, uint32_t mangle_b, uint32_t bv_seed,
                     const uint32_t[::1] va_seeds):
    cdef Py_ssize_t n = iip.shape[0]
    cdef Py_ssize_t k
    cdef int a, s
    cdef int L = 32 - r
    cdef uint64_t mask_l = (<uint64_t>1 << L) - 1
    cdef uint64_t rp_mask = (<uint64_t>1 << r) - 1
    cdef uint64_t gmask = g - 1
    cdef uint32_t m, mo
    cdef uint64_t lp, rot, col, row, bit, base
    with nogil:
        for k in range(n):
            m = mangle_a * iip[k] + mangle_b
            mo = mangle_a * oip[k] + mangle_b
            lp = m >> r
            base = (m & rp_mask) * cols_per_cs
            row = mix32(mo ^ bv_seed) & gmask
            for a in range(num_ra):
                s = clbs[a]
                rot = ((lp << s) | (lp >> (L - s))) & mask_l
                col = rot >> (L - cbn[a])
                bit = (base + <uint64_t>col_base[a] + col) * g + row
                sh_atomic_or(&buf[bit >> 3], <uint8_t>(1 << (bit & 7)))
            for a in range(num_va):
                col = mix32(<uint32_t>lp ^ va_seeds[a]) & ((<uint64_t>1 << cbn[num_ra + a]) - 1)
                bit = (base + <uint64_t>col_base[num_ra + a] + col) * g + row
                sh_atomic_or(&buf[bit >> 3], <uint8_t>(1 << (bit & 7)))


cdef inline int64_t count_ones(const uint8_t *p, int64_t first_bit, int64_t nbits) noexcept nogil:
    cdef int64_t ones = 0, i, nbytes
    cdef uint64_t w
    if first_bit % 8 == 0 and nbits % 8 == 0:
        p = p + first_bit // 8
        nbytes = nbits // 8
        i = 0
        while i + 8 <= nbytes:
            memcpy(&w, p + i, 8)
            ones += sh_popcount64(w)
            i += 8
        while i < nbytes:
            ones += sh_popcount64(p[i])
            i += 1
        return ones
    for i in range(first_bit, first_bit + nbits):
        ones += (p[i >> 3] >> (i & 7)) & 1
    return ones


def column_zero_counts(const uint8_t[::1] buf, int64_t first_bit, int64_t ncols, int64_t g):
    out = np.empty(ncols, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef int64_t c
    cdef const uint8_t *p = &buf[0]
    with nogil:
        for c in range(ncols):
            o[c] = g - count_ones(p, first_bit + c * g, g)
    return out


def and_zero_count(const uint8_t[::1] buf, offsets, int64_t g, scratch=None):
    """Zero count of the AND of the ``g``-bit columns starting at ``offsets``."""
    offs_arr = np.ascontiguousarray(offsets, dtype=np.int64)
    cdef const int64_t[::1] offs = offs_arr
    cdef Py_ssize_t n = offs.shape[0], j
    cdef const uint8_t *p = &buf[0]
    cdef int64_t i, ones = 0, bit
    cdef uint64_t w, v
    cdef bint aligned = g % 64 == 0
    for j in range(n):
        if offs[j] % 64 != 0:
            aligned = False
    with nogil:
        if aligned:
            i = 0
            while i < g:
                w = ~(<uint64_t>0)
                for j in range(n):
                    memcpy(&v, p + (offs[j] + i) // 8, 8)
                    w &= v
                ones += sh_popcount64(w)
                i += 64
        else:
            for i in range(g):
                w = 1
                for j in range(n):
                    bit = offs[j] + i
                    w &= (p[bit >> 3] >> (bit & 7)) & 1
                ones += w
    return int(g - ones)
