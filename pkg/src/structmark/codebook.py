"""Balanced permutation codebook mapping k-bit chunks to within-group block orders.

The canonical codebook is a fixed, normative table shared by embedder and
verifier: 16 permutations of 4 slots, one per 4-bit value. It is a strict
subset of the 24 possible orders (rate reduction for robustness) and it is
balanced: every source slot appears at every position in exactly 4 codewords,
so no position is biased as the payload varies.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import NotACodewordError, ParameterError, PayloadError

# Codeword v is the block order used for chunk value v; entries are 1-based
# source-slot indices. This table is shared state between the two sides of
# the channel: regenerating or reordering it breaks every existing mark.
_CANONICAL = (
    (1, 2, 4, 3),
    (1, 3, 2, 4),
    (1, 3, 4, 2),
    (1, 4, 3, 2),
    (2, 1, 4, 3),
    (2, 3, 1, 4),
    (2, 4, 1, 3),
    (2, 4, 3, 1),
    (3, 1, 2, 4),
    (3, 2, 1, 4),
    (3, 2, 4, 1),
    (3, 4, 1, 2),
    (4, 1, 2, 3),
    (4, 1, 3, 2),
    (4, 2, 3, 1),
    (4, 3, 2, 1),
)


@dataclass(frozen=True)
class Codebook:
    """Ordered set of 2**k distinct, balanced permutations of {1..s}."""

    codewords: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "codewords", tuple(tuple(int(i) for i in cw) for cw in self.codewords)
        )
        _validate(self.codewords)

    @property
    def size(self) -> int:
        return len(self.codewords)

    @property
    def slots(self) -> int:
        """Group size s the codewords permute."""
        return len(self.codewords[0])

    @property
    def bits_per_group(self) -> int:
        return self.size.bit_length() - 1

    @cached_property
    def as_array(self) -> np.ndarray:
        """(size, slots) int64, 0-based, for the scoring kernels."""
        arr = np.asarray(self.codewords, dtype=np.int64) - 1
        arr.setflags(write=False)
        return arr

    @cached_property
    def _index(self) -> dict[tuple[int, ...], int]:
        return {cw: v for v, cw in enumerate(self.codewords)}

    def encode(self, chunk: int) -> tuple[int, ...]:
        """Codeword permutation for a chunk value in [0, 2**k)."""
        if not 0 <= chunk < self.size:
            raise PayloadError(f"chunk {chunk} outside [0, {self.size})")
        return self.codewords[chunk]

    def decode(self, sigma: tuple[int, ...]) -> int:
        """Chunk value of a codeword; inverse of encode."""
        v = self._index.get(tuple(int(i) for i in sigma))
        if v is None:
            raise NotACodewordError(f"{tuple(sigma)} is not in the codebook")
        return v


def _validate(codewords: tuple[tuple[int, ...], ...]) -> None:
    n = len(codewords)
    if n < 2 or n & (n - 1) != 0:
        raise ParameterError(f"codebook size must be a power of two >= 2, got {n}")
    s = len(codewords[0])
    base = tuple(range(1, s + 1))
    for cw in codewords:
        if tuple(sorted(cw)) != base:
            raise ParameterError(f"{cw} is not a permutation of 1..{s}")
    if len(set(codewords)) != n:
        raise ParameterError("codewords must be distinct")
    if n % s != 0:
        raise ParameterError(f"balance impossible: size {n} not divisible by {s}")
    want = n // s
    counts = np.zeros((s, s), dtype=int)  # counts[i-1, j] = times slot i at position j
    for cw in codewords:
        for pos, slot in enumerate(cw):
            counts[slot - 1, pos] += 1
    if not np.all(counts == want):
        raise ParameterError(
            f"codebook is unbalanced: every slot must appear {want}x per position"
        )


def canonical_codebook() -> Codebook:
    """The fixed 16-codeword balanced codebook for 4 slots (4 bits per group)."""
    return Codebook(_CANONICAL)


def load_codebook(path: str) -> Codebook:
    """Read a codebook file: one codeword per line as comma-separated 1-based
    indices; the line number (from 0) is the chunk value."""
    rows = []
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rows.append(tuple(int(part) for part in line.split(",")))
            except ValueError as exc:
                raise ParameterError(f"bad codebook line {line!r}: {exc}") from None
    return Codebook(tuple(rows))


def save_codebook(path: str, cb: Codebook) -> None:
    with open(path, "w", encoding="ascii") as fh:
        for cw in cb.codewords:
            fh.write(",".join(str(i) for i in cw) + "\n")
