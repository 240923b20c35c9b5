"""Pure-Python/numpy fallback for the hot kernels in _ckernels.pyx.

Selected at import time by _backend when the compiled extension is missing
or when STRUCTMARK_BACKEND=python. Must match the extension exactly:
fisher_yates consumes the word stream in the same order (bit-identical
permutations), and score_codewords reports the same operation count.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def score_codewords(obs: np.ndarray, ref: np.ndarray, codewords: np.ndarray):
    """Matching scores of every observation row against every codeword.

    obs:       (M, s, b) observed block values, group-major.
    ref:       (R, s, b) reference block values; row m matches ref[m % R].
    codewords: (K, s) int64, 0-based source-slot indices.

    Returns (scores (M, K) float64, ops) where ops counts block-element
    comparisons: one subtract-square-accumulate per (row, codeword, slot,
    element), i.e. exactly M * K * s * b.
    """
    m, s, b = obs.shape
    r = ref.shape[0]
    if m % r != 0:
        raise ValueError("obs row count must be a multiple of ref row count")
    k = codewords.shape[0]
    obs4 = obs.reshape(m // r, r, s, b)
    scores = np.empty((m // r, r, k), dtype=np.float64)
    for c in range(k):
        diff = obs4 - ref[:, codewords[c], :]
        scores[:, :, c] = np.einsum("trsb,trsb->tr", diff, diff)
    return scores.reshape(m, k), m * k * s * b


def fisher_yates(words: np.ndarray, n: int):
    """Fisher-Yates permutation of {0..n-1} fed by 64-bit words.

    Swap index for position i is drawn by masked rejection (mask = next
    power of two above i, minus one), one word per attempt, words consumed
    front to back. Returns (perm int64[n], words_consumed); consumed is -1
    if the supply ran out, in which case the caller extends the word array
    and reruns from word 0.
    """
    perm = list(range(n))
    w = words.tolist()
    total = len(w)
    pos = 0
    for i in range(n - 1, 0, -1):
        mask = (1 << i.bit_length()) - 1
        while True:
            if pos >= total:
                return np.empty(0, dtype=np.int64), -1
            j = w[pos] & mask
            pos += 1
            if j <= i:
                break
        perm[i], perm[j] = perm[j], perm[i]
    return np.asarray(perm, dtype=np.int64), pos
