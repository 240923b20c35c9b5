"""Command-line front end for the watermark codec pipeline.

Exit codes are a stable contract: 0 success / watermark detected, 1 watermark
not detected, 2 usage or parameter error, 3 data error (bad files, bad hex,
length mismatches).

Flag defaults resolve in order: explicit flag, then STRUCTMARK_<NAME>
environment variable, then a --config file of key=value lines ('#' starts a
comment), then the built-in default. Watermark randomness derives only from
key and nonce; --seed steers evaluation randomness (random payloads, channel
noise, calibration nulls).
"""

from __future__ import annotations

import argparse
import json
import os
import secrets
import sys

import numpy as np

from . import calibration as calib
from .bench import SweepConfig, rows_to_csv, run_sweep
from .channel import apply_channel, parse_channel
from .codebook import Codebook, canonical_codebook, load_codebook
from .codec import Payload, embed
from .detector import MODE_BLIND, MODE_CLAIMED, REFERENCE_TAU, Verifier
from .errors import (CalibrationError, DataError, NotACodewordError,
                     ParameterError, PayloadError, StructmarkError)
from .keyspace import Nonce, SecretKey, read_key_file, write_key_file
from .latentfile import read_latent, write_latent
from .template import TemplateParams

ENV_PREFIX = "STRUCTMARK_"

EXIT_OK = 0
EXIT_NOT_DETECTED = 1
EXIT_USAGE = 2
EXIT_DATA = 3

DEFAULT_PARAMS_TEXT = "D=16384,Q=4,b=64,k=4"


def load_config(path: str) -> dict[str, str]:
    """Flat key=value config file; '#' comments and blank lines ignored."""
    out: dict[str, str] = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ParameterError(f"{path}:{lineno}: expected key=value")
                k, v = line.split("=", 1)
                out[k.strip()] = v.strip()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    return out


class Resolver:
    """Flag > environment > config file > default."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.config = load_config(args.config) if getattr(args, "config", None) else {}

    def get(self, name: str, default=None, cast=str):
        flag = getattr(self.args, name.replace("-", "_"), None)
        if flag is not None:
            return flag
        env = os.environ.get(ENV_PREFIX + name.replace("-", "_").upper())
        if env is not None:
            return cast(env)
        if name in self.config:
            return cast(self.config[name])
        return default


def parse_params(text: str) -> tuple[TemplateParams, int]:
    """Parse "D=16384,Q=4,b=64,k=4" (any subset; missing fields default)."""
    values = {"D": 16384, "Q": 4, "b": 64, "k": 4, "s": None}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ParameterError(f"bad params field {part!r}, expected NAME=VALUE")
        name, val = part.split("=", 1)
        name = name.strip()
        if name not in values:
            raise ParameterError(f"unknown params field {name!r}")
        try:
            values[name] = int(val)
        except ValueError:
            raise ParameterError(f"params field {name} must be an integer") from None
    params = TemplateParams(size=values["D"], num_bins=values["Q"],
                            block_size=values["b"], group_size=values["s"])
    return params, values["k"]


def _load_codebook_arg(path: str | None, k: int) -> Codebook:
    cb = load_codebook(path) if path else canonical_codebook()
    if cb.bits_per_group != k:
        raise ParameterError(
            f"params say k={k} but the codebook carries {cb.bits_per_group} bits/group"
        )
    return cb


def _key_from(res: Resolver) -> SecretKey:
    path = res.get("key")
    if not path:
        raise ParameterError("--key is required (flag, STRUCTMARK_KEY, or config)")
    try:
        return read_key_file(path)
    except OSError as exc:
        raise DataError(f"cannot read key file {path}: {exc}") from None


def cmd_keygen(args: argparse.Namespace) -> int:
    key = SecretKey.generate()
    if args.out:
        if os.path.exists(args.out) and not args.force:
            raise DataError(f"{args.out} exists; pass --force to overwrite")
        try:
            write_key_file(args.out, key)
        except OSError as exc:
            raise DataError(f"cannot write key file {args.out}: {exc}") from None
    else:
        print(key.to_hex())
    return EXIT_OK


def cmd_embed(args: argparse.Namespace) -> int:
    res = Resolver(args)
    key = _key_from(res)
    params, k = parse_params(res.get("params", DEFAULT_PARAMS_TEXT))
    cb = _load_codebook_arg(args.codebook, k)
    nbits = params.payload_bits(cb.bits_per_group)

    seed = res.get("seed", cast=int)
    rng = np.random.default_rng(secrets.randbits(64) if seed is None else seed)

    if args.payload_random:
        m = Payload.random(nbits, rng)
    else:
        m = Payload.from_hex(args.payload_hex, nbits)
    if args.nonce_hex:
        nonce = Nonce.from_hex(args.nonce_hex)
    else:
        nonce = Nonce(rng.bytes(16))

    marked = embed(key, nonce, m, params, cb)
    try:
        write_latent(args.out, marked.values, params, cb.bits_per_group, nonce)
        with open(args.out + ".nonce", "w", encoding="ascii") as fh:
            fh.write(nonce.to_hex() + "\n")
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc}") from None
    if args.payload_random:
        print(f"payload_hex={m.to_hex()}")
    print(f"nonce_hex={nonce.to_hex()}")
    return EXIT_OK


def cmd_detect(args: argparse.Namespace) -> int:
    res = Resolver(args)
    key = _key_from(res)
    lf = read_latent(args.infile)
    cb = _load_codebook_arg(args.codebook, lf.bits_per_group)
    tau = res.get("tau", REFERENCE_TAU, cast=float)

    claimed = None
    if args.claimed_payload_hex:
        claimed = Payload.from_hex(
            args.claimed_payload_hex, lf.params.payload_bits(cb.bits_per_group)
        )
    verifier = Verifier(key, lf.params, cb)
    rep = verifier.detect(lf.values.astype(np.float64), lf.nonce,
                          claimed_payload=claimed, tau_det=tau)
    if args.json:
        print(json.dumps(rep.to_record()))
    else:
        verdict = "detected" if rep.decision else "not-detected"
        print(f"{verdict} S={rep.statistic:.6f} tau={rep.threshold:.6f} "
              f"mode={rep.mode} payload={rep.decoded_payload.to_hex()}")
    return EXIT_OK if rep.decision else EXIT_NOT_DETECTED


def cmd_simulate(args: argparse.Namespace) -> int:
    res = Resolver(args)
    seed = res.get("seed", 0, cast=int)
    spec = parse_channel(args.channel, seed=seed)
    lf = read_latent(args.infile)
    out = apply_channel(lf.values.astype(np.float64), spec)
    try:
        write_latent(args.out, out, lf.params, lf.bits_per_group, lf.nonce)
    except OSError as exc:
        raise DataError(f"cannot write {args.out}: {exc}") from None
    return EXIT_OK


def cmd_calibrate(args: argparse.Namespace) -> int:
    res = Resolver(args)
    key = _key_from(res)
    params, k = parse_params(res.get("params", DEFAULT_PARAMS_TEXT))
    cb = _load_codebook_arg(args.codebook, k)
    if args.n < 1000:
        raise ParameterError("calibration needs --n >= 1000")
    seed = res.get("seed", 0, cast=int)
    mode = MODE_CLAIMED if args.mode == "claimed" else MODE_BLIND

    if args.null == "random":
        scores = calib.null_statistics_random_latents(
            key, params, cb, args.n, mode=mode, seed=seed
        )
    else:
        scores = calib.null_statistics_wrong_key(
            key, params, cb, args.n, mode=mode, seed=seed
        )
    result = calib.calibrate(scores, args.n, args.alpha, args.q,
                             source=args.null)
    if args.dump_scores:
        with open(args.dump_scores, "w", encoding="ascii") as fh:
            for s in scores:
                fh.write(f"{float(s)!r}\n")
    record = result.to_record()
    record["mode"] = mode
    print(json.dumps(record))
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    cfgmap = load_config(args.sweep_config)
    params, k = parse_params(cfgmap.get("params", DEFAULT_PARAMS_TEXT))
    cb = _load_codebook_arg(None, k)
    channels = tuple(
        parse_channel(c.strip())
        for c in cfgmap.get("channels", "none").split(",") if c.strip()
    )
    payload_text = cfgmap.get("payload", "random")
    if payload_text == "random":
        policy, fixed = "random", None
    else:
        policy = "fixed"
        fixed = Payload.from_hex(payload_text, params.payload_bits(k))
    key = None
    if "key" in cfgmap:
        key = read_key_file(cfgmap["key"])
    cfg = SweepConfig(
        params=params,
        channels=channels,
        trials=int(cfgmap.get("trials", "100")),
        payload_policy=policy,
        fixed_payload=fixed,
        tau=float(cfgmap.get("tau", str(REFERENCE_TAU))),
        seed=int(cfgmap.get("seed", "0")),
        key=key,
    )
    csv = rows_to_csv(run_sweep(cfg, cb),
                      include_timing=cfgmap.get("timing", "on") != "off")
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(csv)
    else:
        sys.stdout.write(csv)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="structmark",
        description="Structural watermark codec for flat Gaussian latents",
    )
    parser.add_argument("--config", help="key=value config file for flag defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keygen", help="generate a fresh 32-byte key")
    p.add_argument("--out", help="key file path (default: print to stdout)")
    p.add_argument("--force", action="store_true", help="overwrite existing file")
    p.set_defaults(func=cmd_keygen)

    p = sub.add_parser("embed", help="embed a payload into a fresh latent")
    p.add_argument("--key", help="key file")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--payload-hex", help="payload as hex")
    g.add_argument("--payload-random", action="store_true",
                   help="draw a random payload and print it")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--nonce-hex", help="public nonce as 32 hex chars")
    g.add_argument("--nonce-random", action="store_true", default=None,
                   help="draw a random nonce (default)")
    p.add_argument("--params", help=f"sizing, default {DEFAULT_PARAMS_TEXT}")
    p.add_argument("--codebook", help="custom codebook file")
    p.add_argument("--seed", type=int, help="evaluation RNG seed")
    p.add_argument("--out", required=True, help="output latent file")
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("detect", help="detect and decode a latent file")
    p.add_argument("--key", help="key file")
    p.add_argument("--in", dest="infile", required=True, help="latent file")
    p.add_argument("--claimed-payload-hex", help="verify this claimed payload")
    p.add_argument("--tau", type=float, help=f"threshold, default {REFERENCE_TAU}")
    p.add_argument("--codebook", help="custom codebook file")
    p.add_argument("--json", action="store_true", help="emit the JSON report")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("simulate", help="apply a distortion channel to a latent file")
    p.add_argument("--channel", required=True,
                   help='e.g. "none", "gauss:0.3", "gauss:0.1+drop:0.1"')
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="channel RNG seed (default 0)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("calibrate", help="solve a low-FPR threshold from null runs")
    p.add_argument("--key", help="key file")
    p.add_argument("--null", choices=["random", "wrongkey"], default="random",
                   help="null source: random latents or wrong-key marks")
    p.add_argument("--n", type=int, required=True, help="null sample size (>= 1000)")
    p.add_argument("--alpha", type=float, required=True, help="target FPR")
    p.add_argument("--q", type=float, default=calib.DEFAULT_TAIL_QUANTILE,
                   help="tail cut quantile in [0.95, 0.99]")
    p.add_argument("--mode", choices=["claimed", "blind"], default="claimed")
    p.add_argument("--params", help=f"sizing, default {DEFAULT_PARAMS_TEXT}")
    p.add_argument("--codebook", help="custom codebook file")
    p.add_argument("--seed", type=int, help="null RNG seed (default 0)")
    p.add_argument("--dump-scores", help="write null scores, one per line")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("bench", help="run a robustness sweep, emit CSV")
    p.add_argument("--sweep-config", required=True,
                   help="key=value file: channels, trials, params, tau, seed, ...")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ParameterError, CalibrationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, PayloadError, NotACodewordError, StructmarkError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def entry() -> None:
    sys.exit(main())
