"""Monte Carlo robustness harness: embed -> distort -> detect over channel grids.

Each grid point runs `trials` independent embed/detect round trips with a
fresh nonce per trial (and a fresh random payload unless a fixed one is
configured), then aggregates per-bit recovery accuracy, the true-positive
rate at the configured threshold, and the mean detection statistic. One
extra row averages the metrics over all non-identity channels.

Trials are independent; reduction order is fixed, so a given config (seed
included) reproduces its metric columns exactly. Wall-clock columns are
measurements and obviously do not reproduce.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .channel import ChannelSpec, apply_channel
from .codebook import Codebook, canonical_codebook
from .codec import Embedder, Payload
from .detector import REFERENCE_TAU, Verifier
from .errors import ParameterError
from .keyspace import KEY_BYTES, NONCE_BYTES, Nonce, SecretKey
from .template import TemplateParams

ATTACKED_AVG = "attacked-avg"


@dataclass(frozen=True)
class SweepConfig:
    params: TemplateParams
    channels: tuple[ChannelSpec, ...]
    trials: int
    payload_policy: str = "random"  # "random" (fresh per trial) or "fixed"
    fixed_payload: Payload | None = None
    tau: float = REFERENCE_TAU
    seed: int = 0
    key: SecretKey | None = None  # derived from seed when omitted

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if not self.channels:
            raise ParameterError("channel grid must be nonempty")
        if self.payload_policy not in ("random", "fixed"):
            raise ParameterError(f"unknown payload policy {self.payload_policy!r}")
        if self.payload_policy == "fixed" and self.fixed_payload is None:
            raise ParameterError("fixed payload policy needs fixed_payload")


@dataclass(frozen=True)
class SweepRow:
    channel: str
    severity: float | None
    trials: int
    bit_acc: float
    tpr: float
    mean_s: float
    wall_ms: float


def _sweep_key(cfg: SweepConfig) -> SecretKey:
    if cfg.key is not None:
        return cfg.key
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 0x6B65]))
    return SecretKey(rng.bytes(KEY_BYTES))


def run_sweep(cfg: SweepConfig, cb: Codebook | None = None) -> list[SweepRow]:
    cb = cb or canonical_codebook()
    key = _sweep_key(cfg)
    embedder = Embedder(key, cfg.params, cb)
    verifier = Verifier(key, cfg.params, cb)
    nbits = cfg.params.payload_bits(cb.bits_per_group)

    rows: list[SweepRow] = []
    for point, ch in enumerate(cfg.channels):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, point]))
        bit_errors = 0
        detections = 0
        stat_sum = 0.0
        started = time.perf_counter()
        for _ in range(cfg.trials):
            if cfg.payload_policy == "random":
                m = Payload.random(nbits, rng)
            else:
                m = cfg.fixed_payload
            nonce = Nonce(rng.bytes(NONCE_BYTES))
            marked = embedder.embed(nonce, m)
            distorted = apply_channel(
                marked.values, ch.with_seed(int(rng.integers(0, 2**63)))
            )
            rep = verifier.detect(distorted, nonce, claimed_payload=m,
                                  tau_det=cfg.tau)
            bit_errors += int(np.sum(rep.decoded_payload.bits != m.bits))
            detections += int(rep.decision)
            stat_sum += rep.statistic
        wall_ms = (time.perf_counter() - started) * 1e3
        rows.append(
            SweepRow(
                channel=str(ch),
                severity=ch.severity,
                trials=cfg.trials,
                bit_acc=1.0 - bit_errors / (cfg.trials * nbits),
                tpr=detections / cfg.trials,
                mean_s=stat_sum / cfg.trials,
                wall_ms=wall_ms,
            )
        )

    attacked = [r for r in rows if r.channel != "none"]
    if attacked:
        rows.append(
            SweepRow(
                channel=ATTACKED_AVG,
                severity=None,
                trials=sum(r.trials for r in attacked),
                bit_acc=float(np.mean([r.bit_acc for r in attacked])),
                tpr=float(np.mean([r.tpr for r in attacked])),
                mean_s=float(np.mean([r.mean_s for r in attacked])),
                wall_ms=sum(r.wall_ms for r in attacked),
            )
        )
    return rows


def rows_to_csv(rows: list[SweepRow], include_timing: bool = True) -> str:
    """Render sweep rows as CSV. Timing can be dropped for byte-stable output."""
    header = "channel,severity,trials,bit_acc,tpr,mean_S"
    if include_timing:
        header += ",wall_ms"
    lines = [header]
    for r in rows:
        sev = "" if r.severity is None else f"{r.severity:g}"
        line = (
            f"{r.channel},{sev},{r.trials},{r.bit_acc:.6f},{r.tpr:.4f},"
            f"{r.mean_s:.6f}"
        )
        if include_timing:
            line += f",{r.wall_ms:.1f}"
        lines.append(line)
    return "\n".join(lines) + "\n"


def rows_to_plot(rows: list[SweepRow]) -> str:
    """Whitespace-separated columns (gnuplot-ready): severity bit_acc tpr
    mean_S. Rows without a scalar severity (identity, composites, the
    attacked average) are skipped."""
    lines = ["# severity bit_acc tpr mean_S"]
    for r in rows:
        if r.severity is None:
            continue
        lines.append(f"{r.severity:g} {r.bit_acc:.6f} {r.tpr:.4f} {r.mean_s:.6f}")
    return "\n".join(lines) + "\n"
