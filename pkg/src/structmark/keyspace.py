"""Deterministic keyed pseudorandomness: KDF, Gaussian streams, permutations.

Everything here is a pure function of its byte-level inputs. The same
(key, label) always yields the same stream, on every platform, because the
primitives are fully specified: BLAKE2b for key derivation and ChaCha20 in
keystream mode as the uniform bit source. Domain-separation labels keep the
latent stream, the per-bin shuffle streams, and the placement-permutation
stream mutually independent.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from hashlib import blake2b

import numpy as np
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms

from . import _backend
from .errors import DataError, EmptyRequestError

KEY_BYTES = 32
NONCE_BYTES = 16

_PERSON_KDF = b"smk.kdf"
_PERSON_STREAM = b"smk.stream"
_PERSON_PRP = b"smk.prp"

# One uniform real per 64-bit word: u = ((w >> 11) + 1) * 2**-53, so u lies
# in (0, 1] and log(u) is always finite. This is the only word-to-real
# mapping used anywhere in the library.
_INV_2_53 = float(2.0**-53)


def _check_len(raw: bytes, n: int, what: str) -> bytes:
    if not isinstance(raw, (bytes, bytearray)):
        raise DataError(f"{what} must be bytes, got {type(raw).__name__}")
    if len(raw) != n:
        raise DataError(f"{what} must be exactly {n} bytes, got {len(raw)}")
    return bytes(raw)


@dataclass(frozen=True)
class SecretKey:
    """32-byte identity key. Never serialized into detection reports."""

    raw: bytes

    def __post_init__(self):
        object.__setattr__(self, "raw", _check_len(self.raw, KEY_BYTES, "secret key"))

    @classmethod
    def generate(cls) -> "SecretKey":
        return cls(os.urandom(KEY_BYTES))

    @classmethod
    def from_hex(cls, text: str) -> "SecretKey":
        try:
            return cls(bytes.fromhex(text.strip()))
        except ValueError as exc:
            raise DataError(f"bad key hex: {exc}") from None

    def to_hex(self) -> str:
        return self.raw.hex()

    def __repr__(self):  # keep key material out of logs and tracebacks
        return "SecretKey(***)"


@dataclass(frozen=True)
class Nonce:
    """16-byte public per-image value, stored alongside each watermarked latent."""

    raw: bytes

    def __post_init__(self):
        object.__setattr__(self, "raw", _check_len(self.raw, NONCE_BYTES, "nonce"))

    @classmethod
    def generate(cls) -> "Nonce":
        return cls(os.urandom(NONCE_BYTES))

    @classmethod
    def from_hex(cls, text: str) -> "Nonce":
        try:
            return cls(bytes.fromhex(text.strip()))
        except ValueError as exc:
            raise DataError(f"bad nonce hex: {exc}") from None

    def to_hex(self) -> str:
        return self.raw.hex()


@dataclass(frozen=True)
class DerivedKey:
    """32-byte key derived from (SecretKey, Nonce); keys the placement permutation."""

    raw: bytes

    def __post_init__(self):
        object.__setattr__(self, "raw", _check_len(self.raw, KEY_BYTES, "derived key"))

    def __repr__(self):
        return "DerivedKey(***)"


def kdf(key: SecretKey, nonce: Nonce) -> DerivedKey:
    """Derive the per-image randomization key from the identity key and nonce.

    Keyed BLAKE2b over the nonce; every bit of both inputs influences the
    output. Deterministic, so the verifier re-derives the same key.
    """
    h = blake2b(nonce.raw, key=key.raw, person=_PERSON_KDF, digest_size=KEY_BYTES)
    return DerivedKey(h.digest())


class KeyedStream:
    """Deterministic uniform byte stream: ChaCha20 keyed by a label-bound subkey.

    The subkey is BLAKE2b(label, key=key, person=purpose), so distinct labels
    (and distinct purposes) give computationally independent streams under
    the same key. The ChaCha20 nonce is fixed at zero: each (key, label,
    purpose) triple is used for exactly one stream.
    """

    def __init__(self, key_raw: bytes, label: str, person: bytes = _PERSON_STREAM):
        subkey = blake2b(
            label.encode("utf-8"), key=key_raw, person=person, digest_size=KEY_BYTES
        ).digest()
        algo = algorithms.ChaCha20(subkey, b"\x00" * 16)
        self._cipher = Cipher(algo, mode=None).encryptor()

    def take_bytes(self, n: int) -> bytes:
        return self._cipher.update(b"\x00" * n)

    def take_u64(self, n: int) -> np.ndarray:
        """Next n unsigned 64-bit words, little-endian."""
        return np.frombuffer(self.take_bytes(8 * n), dtype="<u8")


def _words_to_unit_open(words: np.ndarray) -> np.ndarray:
    # 53-bit mantissa construction, result in (0, 1]
    return ((words >> np.uint64(11)).astype(np.float64) + 1.0) * _INV_2_53


def gaussian_stream(key: SecretKey, label: str, count: int) -> np.ndarray:
    """Deterministic stream of `count` standard-normal float64 values.

    Box-Muller over consecutive pairs of uniforms from the keyed stream:
    pair (u1, u2) yields sqrt(-2 ln u1) * (cos, sin)(2 pi u2). For odd
    `count` the trailing half-pair is dropped.
    """
    if count < 1:
        raise EmptyRequestError("gaussian_stream needs count >= 1")
    pairs = (count + 1) // 2
    u = _words_to_unit_open(KeyedStream(key.raw, label).take_u64(2 * pairs))
    radius = np.sqrt(-2.0 * np.log(u[0::2]))
    angle = (2.0 * np.pi) * u[1::2]
    out = np.empty(2 * pairs, dtype=np.float64)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]


def prp(key: SecretKey | DerivedKey, label: str, n: int) -> np.ndarray:
    """Keyed pseudorandom permutation of {1..n} as an int64 array.

    Fisher-Yates driven by the keyed word stream; each swap index is drawn
    by masked rejection so the shuffle is exactly uniform over S_n for an
    ideal stream. Word consumption is part of the contract: both compute
    backends walk the stream identically, so outputs are bit-identical.
    """
    if n < 1:
        raise EmptyRequestError("prp needs n >= 1")
    stream = KeyedStream(key.raw, label, person=_PERSON_PRP)
    words = stream.take_u64(2 * n + 16)
    while True:
        perm, consumed = _backend.fisher_yates(words, n)
        if consumed >= 0:
            return perm + 1
        # Rejections exhausted the prefetch; extend and rerun from word 0 so
        # the result stays a pure function of (key, label, n).
        words = np.concatenate([words, stream.take_u64(n + 16)])


def read_key_file(path: str) -> SecretKey:
    """Load a key file: a single lowercase-hex line, optional trailing newline."""
    with open(path, "r", encoding="ascii") as fh:
        return SecretKey.from_hex(fh.read())


def write_key_file(path: str, key: SecretKey) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(key.to_hex() + "\n")
