"""Separability-guided index template: elements -> quantile bins -> blocks -> groups.

The template is a pure function of (key, latent, params). Elements are ranked
by magnitude, split into equal quantile bins, each bin is reordered by a
key-controlled shuffle, consecutive runs of the shuffled bin form blocks, and
group g aligns block g from every bin. Blocks from different bins therefore
sit in statistically separable magnitude regions, which is what makes the
within-group block ordering recoverable after distortion.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DataError, ParameterError
from .keyspace import SecretKey, prp


@dataclass(frozen=True)
class TemplateParams:
    """Sizing of the index template.

    size:        element count of the flat latent (D)
    num_bins:    quantile bins (Q)
    block_size:  elements per block (b)
    group_size:  blocks per group (s); the canonical construction requires
                 one block per bin, i.e. group_size == num_bins
    """

    size: int = 16384
    num_bins: int = 4
    block_size: int = 64
    group_size: int | None = None

    def __post_init__(self):
        if self.group_size is None:
            object.__setattr__(self, "group_size", self.num_bins)
        if self.size < 1 or self.num_bins < 1 or self.block_size < 1:
            raise ParameterError("size, num_bins and block_size must be positive")
        if self.size % self.num_bins != 0:
            raise ParameterError(
                f"size {self.size} not divisible by num_bins {self.num_bins}"
            )
        if self.bin_size % self.block_size != 0:
            raise ParameterError(
                f"bin size {self.bin_size} not divisible by block_size {self.block_size}"
            )
        if self.group_size != self.num_bins:
            raise ParameterError(
                "only the canonical one-block-per-bin alignment is supported "
                f"(group_size {self.group_size} != num_bins {self.num_bins})"
            )

    @property
    def bin_size(self) -> int:
        return self.size // self.num_bins

    @property
    def blocks_per_bin(self) -> int:
        return self.bin_size // self.block_size

    @property
    def num_groups(self) -> int:
        return self.blocks_per_bin

    @property
    def num_blocks(self) -> int:
        return self.size // self.block_size

    def payload_bits(self, bits_per_group: int) -> int:
        return self.num_groups * bits_per_group


DEFAULT_PARAMS = TemplateParams()


@dataclass(frozen=True)
class IndexTemplate:
    """Immutable bins/blocks/groups index structure over a flat latent.

    rank_order: magnitude argsort of the source latent (0-based, ascending).
    blocks:     (num_bins, blocks_per_bin, block_size) int64; blocks[q, t] is
                the index tuple of block t within bin q.
    """

    params: TemplateParams
    rank_order: np.ndarray = field(repr=False)
    blocks: np.ndarray = field(repr=False)

    @property
    def bins(self) -> np.ndarray:
        """(num_bins, bin_size) indices per quantile bin, in rank order."""
        return self.rank_order.reshape(self.params.num_bins, self.params.bin_size)

    @property
    def block_order(self) -> np.ndarray:
        """All blocks as one flat (num_blocks, block_size) list, bin-major:
        block n = (q * blocks_per_bin) + t."""
        return self.blocks.reshape(self.params.num_blocks, self.params.block_size)

    def group(self, g: int) -> np.ndarray:
        """(num_bins, block_size) index tuples of group g: block g of every bin."""
        return self.blocks[:, g, :]

    @cached_property
    def group_major(self) -> np.ndarray:
        """(num_groups, group_size, block_size) view used by encode/decode:
        axis 0 is the group, axis 1 the within-group slot (= source bin)."""
        arr = np.ascontiguousarray(self.blocks.transpose(1, 0, 2))
        arr.setflags(write=False)
        return arr


def build_template(
    key: SecretKey,
    z: np.ndarray,
    params: TemplateParams,
    *,
    _identity_bin_shuffle: bool = False,
) -> IndexTemplate:
    """Construct the index template for latent z under the given key.

    _identity_bin_shuffle is a test hook that skips the keyed within-bin
    shuffles so tiny instances can be checked by hand; production callers
    must leave it off.
    """
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.shape[0] != params.size:
        raise DataError(f"latent must be flat with length {params.size}")
    if not np.all(np.isfinite(z)):
        raise DataError("latent contains non-finite values")

    # Stable sort: ties in |z| break by ascending original index.
    order = np.argsort(np.abs(z), kind="stable").astype(np.int64)
    bins = order.reshape(params.num_bins, params.bin_size)

    blocks = np.empty(
        (params.num_bins, params.blocks_per_bin, params.block_size), dtype=np.int64
    )
    for q in range(params.num_bins):
        if _identity_bin_shuffle:
            shuffled = bins[q]
        else:
            shuffle = prp(key, f"binshuffle:{q + 1}", params.bin_size) - 1
            shuffled = bins[q][shuffle]
        blocks[q] = shuffled.reshape(params.blocks_per_bin, params.block_size)

    order.setflags(write=False)
    blocks.setflags(write=False)
    return IndexTemplate(params=params, rank_order=order, blocks=blocks)


def block_values(z: np.ndarray, tpl: IndexTemplate, q: int, g: int) -> np.ndarray:
    """Values of z at block g of bin q (indices 0-based), in tuple order."""
    p = tpl.params
    if not (0 <= q < p.num_bins and 0 <= g < p.blocks_per_bin):
        raise IndexError(f"bin {q} / group {g} out of range")
    z = np.asarray(z)
    if z.shape != (p.size,):
        raise DataError(f"latent must be flat with length {p.size}")
    return z[tpl.blocks[q, g]]
