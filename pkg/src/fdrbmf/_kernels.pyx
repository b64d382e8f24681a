# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Bit-packed integer kernels for dense binary matrices.

Rows are packed into 64-bit words; all counts are exact popcounts.
Signatures mirror :mod:`fdrbmf._kernels_py`.
"""
import numpy as np

from libc.stdint cimport uint8_t, uint64_t, int64_t


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef inline int _popcount(uint64_t v) noexcept nogil:
    return __builtin_popcountll(v)


cdef object _pack(const uint8_t[:, ::1] M):
    """Pack each row of ``M`` into little-endian 64-bit words."""
    cdef Py_ssize_t rows = M.shape[0], cols = M.shape[1]
    cdef Py_ssize_t words = max((cols + 63) // 64, 1)
    packed = np.packbits(np.asarray(M), axis=1, bitorder="little")
    out = np.zeros((rows, words * 8), dtype=np.uint8)
    out[:, : packed.shape[1]] = packed
    return out.view("<u8").astype(np.uint64, copy=False)


def boolean_product(const uint8_t[:, ::1] X, const uint8_t[:, ::1] Y):
    cdef Py_ssize_t n = X.shape[0], r = X.shape[1], m = Y.shape[0]
    if r == 0 or n == 0 or m == 0:
        return np.zeros((m, n), dtype=np.uint8)
    cdef uint64_t[:, ::1] Xp = _pack(np.ascontiguousarray(np.asarray(X).T))
    cdef Py_ssize_t w = Xp.shape[1]
    packed = np.zeros((m, w), dtype=np.uint64)
    cdef uint64_t[:, ::1] O = packed
    cdef Py_ssize_t j, s, k
    with nogil:
        for j in range(m):
            for s in range(r):
                if Y[j, s]:
                    for k in range(w):
                        O[j, k] |= Xp[s, k]
    return np.unpackbits(
        packed.astype("<u8", copy=False).view(np.uint8), axis=1, count=n, bitorder="little"
    )


def residual(const uint8_t[:, ::1] D, const uint8_t[:, ::1] X,
             const uint8_t[:, ::1] Y):
    cdef Py_ssize_t m = D.shape[0], n = D.shape[1], r = X.shape[1]
    cdef uint64_t[:, ::1] Dp = _pack(D)
    cdef Py_ssize_t w = Dp.shape[1]
    cdef uint64_t[:, ::1] Xp
    if r > 0:
        Xp = _pack(np.ascontiguousarray(np.asarray(X).T))
    acc_arr = np.zeros(w, dtype=np.uint64)
    cdef uint64_t[::1] acc = acc_arr
    cdef int64_t total = 0
    cdef Py_ssize_t j, s, k
    with nogil:
        for j in range(m):
            for k in range(w):
                acc[k] = 0
            for s in range(r):
                if Y[j, s]:
                    for k in range(w):
                        acc[k] |= Xp[s, k]
            for k in range(w):
                total += _popcount(acc[k] ^ Dp[j, k])
    return int(total)


def eta(const uint8_t[:, ::1] M):
    cdef Py_ssize_t m = M.shape[0], n = M.shape[1]
    cdef uint64_t[:, ::1] Cp = _pack(np.ascontiguousarray(np.asarray(M).T))
    cdef Py_ssize_t w = Cp.shape[1]
    cdef int64_t best = -1, c
    cdef Py_ssize_t i, k, t
    with nogil:
        for i in range(n):
            for k in range(i + 1, n):
                c = 0
                for t in range(w):
                    c += _popcount(Cp[i, t] & Cp[k, t])
                if c > best:
                    best = c
    return int(best)
