"""Simulated latent-space distortion channel for desk-scale robustness runs.

Stands in for inversion error and post-processing attacks, which operate on
pixels in deployment and are out of scope here; severities are therefore not
equivalent to any pixel-space setting. The channel never sees watermark keys:
its randomness comes solely from the evaluation seed, so benchmark runs are
reproducible and channel noise cannot correlate with the mark.

Grammar: "none", "gauss:SIGMA", "drop:P[:FILL]", "scale:A",
"erase:FRACTION[:CHUNK]", composed left-to-right with '+'.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, ParameterError


@dataclass(frozen=True)
class GaussOp:
    sigma: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise ParameterError("gauss sigma must be >= 0")

    def __str__(self):
        return f"gauss:{self.sigma:g}"

    def apply(self, z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return z + rng.normal(0.0, self.sigma, size=z.shape)


@dataclass(frozen=True)
class DropOp:
    """Replace each element independently with prob p; fill is a constant, or
    fresh unit-Gaussian noise when None."""

    p: float
    fill: float | None = None

    def __post_init__(self):
        if not 0 <= self.p <= 1:
            raise ParameterError("drop probability must be in [0, 1]")

    def __str__(self):
        return f"drop:{self.p:g}" + ("" if self.fill is None else f":{self.fill:g}")

    def apply(self, z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        out = z.copy()
        hit = rng.random(size=z.shape) < self.p
        if self.fill is None:
            out[hit] = rng.standard_normal(int(hit.sum()))
        else:
            out[hit] = self.fill
        return out


@dataclass(frozen=True)
class ScaleOp:
    """Global gain, a brightness-like proxy."""

    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ParameterError("scale factor must be > 0")

    def __str__(self):
        return f"scale:{self.a:g}"

    def apply(self, z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return z * self.a


@dataclass(frozen=True)
class EraseOp:
    """Replace a random fraction of contiguous chunks with fresh noise, a
    crop/drop-like structured-loss proxy. Chunks are positional runs of the
    flat latent, unrelated to any keyed template."""

    fraction: float
    chunk: int = 64

    def __post_init__(self):
        if not 0 <= self.fraction <= 1:
            raise ParameterError("erase fraction must be in [0, 1]")
        if self.chunk < 1:
            raise ParameterError("erase chunk size must be >= 1")

    def __str__(self):
        return f"erase:{self.fraction:g}" + ("" if self.chunk == 64 else f":{self.chunk}")

    def apply(self, z: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        out = z.copy()
        nchunks = z.shape[-1] // self.chunk
        n_kill = round(self.fraction * nchunks)
        if n_kill == 0:
            return out
        kill = rng.choice(nchunks, size=n_kill, replace=False)
        for c in kill:
            out[c * self.chunk:(c + 1) * self.chunk] = rng.standard_normal(self.chunk)
        return out


Op = GaussOp | DropOp | ScaleOp | EraseOp


@dataclass(frozen=True)
class ChannelSpec:
    """Ordered distortion ops plus the evaluation seed. Empty ops = identity."""

    ops: tuple[Op, ...] = ()
    seed: int = 0

    def __str__(self):
        return "+".join(str(op) for op in self.ops) if self.ops else "none"

    @property
    def severity(self) -> float | None:
        """The single op's numeric knob, or None for identity/composites."""
        if len(self.ops) != 1:
            return None
        op = self.ops[0]
        return {
            GaussOp: lambda o: o.sigma,
            DropOp: lambda o: o.p,
            ScaleOp: lambda o: o.a,
            EraseOp: lambda o: o.fraction,
        }[type(op)](op)

    def with_seed(self, seed: int) -> "ChannelSpec":
        return replace(self, seed=seed)


def parse_channel(text: str, seed: int = 0) -> ChannelSpec:
    """Parse the compact channel grammar, e.g. "gauss:0.1+drop:0.1"."""
    text = text.strip()
    if not text:
        raise ParameterError("empty channel spec")
    parts = [p.strip() for p in text.split("+")]
    if parts == ["none"]:
        return ChannelSpec(ops=(), seed=seed)
    ops: list[Op] = []
    for part in parts:
        fields = part.split(":")
        name, args = fields[0], fields[1:]
        try:
            if name == "gauss" and len(args) == 1:
                ops.append(GaussOp(float(args[0])))
            elif name == "drop" and len(args) in (1, 2):
                fill = float(args[1]) if len(args) == 2 else None
                ops.append(DropOp(float(args[0]), fill))
            elif name == "scale" and len(args) == 1:
                ops.append(ScaleOp(float(args[0])))
            elif name == "erase" and len(args) in (1, 2):
                chunk = int(args[1]) if len(args) == 2 else 64
                ops.append(EraseOp(float(args[0]), chunk))
            else:
                raise ParameterError(f"unknown channel op {part!r}")
        except ValueError as exc:
            raise ParameterError(f"bad channel op {part!r}: {exc}") from None
    return ChannelSpec(ops=tuple(ops), seed=seed)


def apply_channel(z: np.ndarray, spec: ChannelSpec) -> np.ndarray:
    """Distort a latent. Deterministic given (z, spec, spec.seed); identity
    for the empty spec, bitwise."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1:
        raise DataError("channel input must be a flat latent")
    if not spec.ops:
        return z.copy()
    rng = np.random.default_rng(spec.seed)
    out = z
    for op in spec.ops:
        out = op.apply(out, rng)
    return out
