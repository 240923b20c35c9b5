"""Payload embedding: within-group block permutation, then keyed global mixing.

The encode side never changes a value. Stage one (structural encoding)
rearranges which quantile-derived block occupies which slot of each group,
with the order chosen by the payload chunk's codeword. Stage two (the
payload-agnostic randomization) permutes all block locations globally under a
permutation keyed by (key, nonce), so a repeated payload still lands in a
fresh spatial arrangement per image. Both stages are pure permutations, hence
exactly invertible and distribution-preserving.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .errors import DataError, PayloadError
from .keyspace import Nonce, SecretKey, gaussian_stream, kdf, prp
from .template import IndexTemplate, TemplateParams, build_template

LATENT_STREAM_LABEL = "latent"
PLACEMENT_STREAM_LABEL = "placement"


@dataclass(frozen=True)
class Payload:
    """Bit vector of length num_groups * bits_per_group.

    Chunking is fixed: chunk g is bits [g*k, (g+1)*k), big-endian within the
    chunk (first bit is the chunk's most significant). Hex/byte packing is
    likewise big-endian within each byte.
    """

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits, dtype=np.uint8).ravel()
        if arr.size == 0:
            raise PayloadError("payload must be non-empty")
        if not np.all((arr == 0) | (arr == 1)):
            raise PayloadError("payload bits must be 0 or 1")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    def __len__(self) -> int:
        return int(self.bits.size)

    def __eq__(self, other) -> bool:
        return isinstance(other, Payload) and np.array_equal(self.bits, other.bits)

    def chunks(self, k: int) -> np.ndarray:
        """Chunk values as int64; payload length must divide into k-bit chunks."""
        if len(self) % k != 0:
            raise PayloadError(f"payload length {len(self)} not divisible by k={k}")
        weights = 1 << np.arange(k - 1, -1, -1, dtype=np.int64)
        return self.bits.reshape(-1, k).astype(np.int64) @ weights

    @classmethod
    def from_chunks(cls, values: np.ndarray, k: int) -> "Payload":
        values = np.asarray(values, dtype=np.int64)
        shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
        bits = ((values[:, None] >> shifts) & 1).astype(np.uint8).ravel()
        return cls(bits)

    def to_bytes(self) -> bytes:
        return np.packbits(self.bits).tobytes()

    def to_hex(self) -> str:
        return self.to_bytes().hex()

    @classmethod
    def from_bytes(cls, raw: bytes, nbits: int) -> "Payload":
        if len(raw) != (nbits + 7) // 8:
            raise PayloadError(f"{nbits}-bit payload needs {(nbits + 7) // 8} bytes")
        bits = np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[:nbits]
        if nbits % 8 and np.any(np.unpackbits(np.frombuffer(raw, dtype=np.uint8))[nbits:]):
            raise PayloadError("padding bits past the payload length must be zero")
        return cls(bits)

    @classmethod
    def from_hex(cls, text: str, nbits: int) -> "Payload":
        try:
            raw = bytes.fromhex(text.strip())
        except ValueError as exc:
            raise PayloadError(f"bad payload hex: {exc}") from None
        return cls.from_bytes(raw, nbits)

    @classmethod
    def random(cls, nbits: int, rng: np.random.Generator) -> "Payload":
        return cls(rng.integers(0, 2, size=nbits, dtype=np.uint8))


def read_payload_file(path: str, nbits: int) -> Payload:
    """Payload file: one hex string of ceil(nbits/8) bytes."""
    with open(path, "r", encoding="ascii") as fh:
        return Payload.from_hex(fh.read(), nbits)


def write_payload_file(path: str, m: Payload) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(m.to_hex() + "\n")


@dataclass(frozen=True)
class WatermarkedLatent:
    """Final watermarked latent plus the public state needed to verify it."""

    values: np.ndarray
    nonce: Nonce
    params: TemplateParams


def _payload_codewords(m: Payload, tpl: IndexTemplate, cb: Codebook) -> np.ndarray:
    p = tpl.params
    k = cb.bits_per_group
    if len(m) != p.num_groups * k:
        raise PayloadError(
            f"payload must be {p.num_groups * k} bits "
            f"({p.num_groups} groups x {k}), got {len(m)}"
        )
    if cb.slots != p.group_size:
        raise PayloadError(
            f"codebook permutes {cb.slots} slots but groups have {p.group_size}"
        )
    return cb.as_array[m.chunks(k)]  # (num_groups, s), 0-based source slots


def encode_groups(z: np.ndarray, tpl: IndexTemplate, cb: Codebook, m: Payload) -> np.ndarray:
    """Structural encode: slot j of group g takes the block the codeword names.

    Requires tpl to have been built from this same z. Output is a pure
    permutation of z (bitwise-identical value multiset).
    """
    sig = _payload_codewords(m, tpl, cb)
    slots = tpl.group_major  # (G, s, b) destination index tuples
    src = np.take_along_axis(slots, sig[:, :, None], axis=1)
    z = np.asarray(z, dtype=np.float64)
    out = z.copy()
    out[slots.ravel()] = z[src.ravel()]
    return out


def _placement(key: SecretKey, nonce: Nonce, num_blocks: int) -> np.ndarray:
    """Nonce-keyed global block permutation (0-based)."""
    return prp(kdf(key, nonce), PLACEMENT_STREAM_LABEL, num_blocks) - 1


def randomize_placement(
    z_e: np.ndarray, key: SecretKey, nonce: Nonce, tpl: IndexTemplate
) -> WatermarkedLatent:
    """Globally permute block locations: block n receives block tau(n)'s values."""
    tau = _placement(key, nonce, tpl.params.num_blocks)
    order = tpl.block_order
    z_e = np.asarray(z_e, dtype=np.float64)
    out = np.empty_like(z_e)
    out[order.ravel()] = z_e[order[tau].ravel()]
    return WatermarkedLatent(values=out, nonce=nonce, params=tpl.params)


def restore_placement(
    z_p: np.ndarray, key: SecretKey, nonce: Nonce, tpl: IndexTemplate
) -> np.ndarray:
    """Exact inverse of randomize_placement: block n receives block tau^-1(n)'s values."""
    tau = _placement(key, nonce, tpl.params.num_blocks)
    inv = np.empty_like(tau)
    inv[tau] = np.arange(tau.size, dtype=tau.dtype)
    order = tpl.block_order
    z_p = np.asarray(z_p, dtype=np.float64)
    out = np.empty_like(z_p)
    out[order.ravel()] = z_p[order[inv].ravel()]
    return out


def canonical_latent(key: SecretKey, params: TemplateParams) -> np.ndarray:
    """The key-deterministic Gaussian latent both sides regenerate."""
    return gaussian_stream(key, LATENT_STREAM_LABEL, params.size)


def embed_latent(
    z: np.ndarray,
    key: SecretKey,
    nonce: Nonce,
    m: Payload,
    params: TemplateParams,
    cb: Codebook,
    tpl: IndexTemplate | None = None,
) -> WatermarkedLatent:
    """Embed into an externally supplied canonical latent.

    Pipeline-integration entry point: z must be the canonical latent the
    verifier will regenerate from `key` (and tpl, when given, must have been
    built from it); otherwise detection under `key` will not see the mark.
    """
    if tpl is None:
        tpl = build_template(key, z, params)
    z_e = encode_groups(z, tpl, cb, m)
    return randomize_placement(z_e, key, nonce, tpl)


def embed(
    key: SecretKey,
    nonce: Nonce,
    m: Payload,
    params: TemplateParams,
    cb: Codebook,
) -> WatermarkedLatent:
    """Full encode: regenerate the canonical latent, structural-encode the
    payload, then apply the keyed global randomization."""
    z = canonical_latent(key, params)
    return embed_latent(z, key, nonce, m, params, cb)


class Embedder:
    """Caches the per-key state (canonical latent and template) so repeated
    embeds under one key skip the argsort and bin shuffles."""

    def __init__(self, key: SecretKey, params: TemplateParams, cb: Codebook):
        self.key = key
        self.params = params
        self.codebook = cb
        self.latent = canonical_latent(key, params)
        self.template = build_template(key, self.latent, params)

    def embed(self, nonce: Nonce, m: Payload) -> WatermarkedLatent:
        return embed_latent(
            self.latent, self.key, nonce, m, self.params, self.codebook, self.template
        )
