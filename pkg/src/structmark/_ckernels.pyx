# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: codeword scoring and the keyed Fisher-Yates shuffle.

Semantics are pinned by _pykernels.py; the two must agree (bit-identical
permutations, identical operation counts, matching scores up to summation
order). See tests/test_backends.py.
"""

import numpy as np

cimport numpy as cnp

NAME = "cython"


def score_codewords(const double[:, :, ::1] obs, const double[:, :, ::1] ref,
                    const long long[:, ::1] codewords):
    cdef Py_ssize_t m_rows = obs.shape[0]
    cdef Py_ssize_t s = obs.shape[1]
    cdef Py_ssize_t b = obs.shape[2]
    cdef Py_ssize_t r_rows = ref.shape[0]
    cdef Py_ssize_t k = codewords.shape[0]
    if ref.shape[1] != s or ref.shape[2] != b:
        raise ValueError("obs and ref shapes disagree")
    if m_rows % r_rows != 0:
        raise ValueError("obs row count must be a multiple of ref row count")

    scores_arr = np.empty((m_rows, k), dtype=np.float64)
    cdef double[:, ::1] scores = scores_arr
    cdef Py_ssize_t m, rm, c, j, e, src
    cdef double acc, diff
    for m in range(m_rows):
        rm = m % r_rows
        for c in range(k):
            acc = 0.0
            for j in range(s):
                src = codewords[c, j]
                for e in range(b):
                    diff = obs[m, j, e] - ref[rm, src, e]
                    acc += diff * diff
            scores[m, c] = acc
    return scores_arr, m_rows * k * s * b


def fisher_yates(const cnp.uint64_t[::1] words, Py_ssize_t n):
    perm_arr = np.arange(n, dtype=np.int64)
    cdef long long[::1] perm = perm_arr
    cdef Py_ssize_t total = words.shape[0]
    cdef Py_ssize_t pos = 0
    cdef Py_ssize_t i
    cdef cnp.uint64_t mask, j
    cdef Py_ssize_t bits
    cdef long long tmp
    for i in range(n - 1, 0, -1):
        bits = 0
        while (<cnp.uint64_t>1 << bits) <= <cnp.uint64_t>i:
            bits += 1
        mask = (<cnp.uint64_t>1 << bits) - 1
        while True:
            if pos >= total:
                return np.empty(0, dtype=np.int64), -1
            j = words[pos] & mask
            pos += 1
            if j <= <cnp.uint64_t>i:
                break
        tmp = perm[i]
        perm[i] = perm[<Py_ssize_t>j]
        perm[<Py_ssize_t>j] = tmp
    return perm_arr, pos
