"""Bit-exact latent container: magic "SMK1", little-endian u32 sizing fields
(element count, bins, block size, bits per group), the 16-byte public nonce,
then the elements as little-endian 32-bit floats."""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import DataError
from .keyspace import NONCE_BYTES, Nonce
from .template import TemplateParams

MAGIC = b"SMK1"
_HEADER = struct.Struct("<4sIIII")


@dataclass(frozen=True)
class LatentFile:
    values: np.ndarray  # float32, as stored
    params: TemplateParams
    bits_per_group: int
    nonce: Nonce


def write_latent(
    path: str,
    values: np.ndarray,
    params: TemplateParams,
    bits_per_group: int,
    nonce: Nonce,
) -> None:
    values = np.asarray(values)
    if values.shape != (params.size,):
        raise DataError(f"latent must be flat with length {params.size}")
    payload = values.astype("<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(
            _HEADER.pack(MAGIC, params.size, params.num_bins, params.block_size,
                         bits_per_group)
        )
        fh.write(nonce.raw)
        fh.write(payload)


def read_latent(path: str) -> LatentFile:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _HEADER.size + NONCE_BYTES:
        raise DataError(f"{path}: truncated latent file")
    magic, size, num_bins, block_size, k = _HEADER.unpack_from(blob, 0)
    if magic != MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    body = blob[_HEADER.size:]
    nonce = Nonce(body[:NONCE_BYTES])
    data = body[NONCE_BYTES:]
    if len(data) != 4 * size:
        raise DataError(
            f"{path}: expected {4 * size} value bytes, found {len(data)}"
        )
    try:
        params = TemplateParams(size=size, num_bins=num_bins, block_size=block_size)
    except Exception as exc:
        raise DataError(f"{path}: inconsistent header sizing: {exc}") from None
    values = np.frombuffer(data, dtype="<f4").copy()
    return LatentFile(values=values, params=params, bits_per_group=k, nonce=nonce)
