"""Low-FPR threshold calibration by peaks-over-threshold tail extrapolation.

A finite null sample of size n cannot resolve tail probabilities below 1/n by
counting, so the detection threshold for a small target FPR alpha is solved
from a Generalized Pareto model fit to the score exceedances over a high
empirical quantile u:

    P(S > s) ~= p_u * (1 + xi * (s - u) / beta) ** (-1 / xi)

giving tau = u + (beta/xi) * ((p_u/alpha)**xi - 1), or the exponential-tail
log form u + beta * log(p_u/alpha) at xi = 0.

Also provides the pooled two-sample t statistic used to compare metric runs,
and null-score generators that drive the full detection pipeline on
unwatermarked or wrong-key inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import islice
from typing import Iterable

import numpy as np

from .codebook import Codebook
from .codec import Embedder, Payload
from .detector import MARGIN_EPS, MODE_BLIND, MODE_CLAIMED, Verifier
from .errors import CalibrationError, DataError, ParameterError
from .keyspace import KEY_BYTES, NONCE_BYTES, Nonce, SecretKey
from .template import TemplateParams

XI_ZERO_TOL = 1e-6  # switch to the log-form threshold below this |xi|
DEFAULT_TAIL_QUANTILE = 0.97
MIN_NULL_SAMPLES = 1000
MIN_EXCEEDANCES = 30


@dataclass(frozen=True)
class GpdFit:
    """Tail model fitted on exceedances over the cut u."""

    u: float
    xi: float
    beta: float
    p_hat_u: float
    n: int
    n_exceed: int

    def __post_init__(self):
        if not (0 < self.p_hat_u <= 1):
            raise CalibrationError("empirical exceedance probability must be in (0, 1]")
        if not self.beta > 0:
            raise CalibrationError("fitted scale must be positive")


@dataclass(frozen=True)
class TTestResult:
    t: float
    pooled_std: float
    n_a: int
    n_b: int
    mean_a: float
    mean_b: float


@dataclass(frozen=True)
class CalibrationResult:
    tau: float
    fit: GpdFit
    alpha: float
    quantile_q: float
    source: str = ""

    def to_record(self) -> dict:
        return {
            "schema": 1,
            "source": self.source,
            "u": self.fit.u,
            "xi": self.fit.xi,
            "beta": self.fit.beta,
            "p_hat_u": self.fit.p_hat_u,
            "n": self.fit.n,
            "n_exceed": self.fit.n_exceed,
            "alpha": self.alpha,
            "q": self.quantile_q,
            "tau": self.tau,
        }


def _gpd_profile_mle(y: np.ndarray) -> tuple[float, float]:
    """Maximum-likelihood (xi, beta) on exceedances y > 0.

    One-dimensional profile over eta = xi/beta; at each eta the companion
    parameter is closed-form: xi(eta) = mean(log1p(eta*y)), beta = xi/eta
    (limit mean(y) at eta -> 0). The search interval is clipped so the
    implied shape stays within [-0.5, 1], where the MLE is regular.
    """
    from scipy.optimize import minimize_scalar  # deferred: keeps CLI startup lean

    y = np.asarray(y, dtype=np.float64)
    ymax = float(y.max())
    mean_y = float(y.mean())

    def xi_of(eta: float) -> float:
        return float(np.mean(np.log1p(eta * y)))

    def beta_of(eta: float) -> float:
        if abs(eta) < 1e-12:
            return mean_y
        return xi_of(eta) / eta

    def neg_ll(eta: float) -> float:
        beta = beta_of(eta)
        if beta <= 0:
            return np.inf
        return np.log(beta) + xi_of(eta) + 1.0

    # Support bound: 1 + eta*y > 0 for all y.
    eta_floor = -(1.0 - 1e-9) / ymax

    def _bisect_xi(target: float, lo: float, hi: float) -> float:
        # xi_of is increasing in eta; find eta with xi_of(eta) = target.
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            if xi_of(mid) < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    eta_lo = eta_floor if xi_of(eta_floor) >= -0.5 else _bisect_xi(-0.5, eta_floor, 0.0)
    eta_hi = 1.0 / mean_y
    while xi_of(eta_hi) < 1.0 and eta_hi < 1e12 / mean_y:
        eta_hi *= 2.0
    if xi_of(eta_hi) > 1.0:
        eta_hi = _bisect_xi(1.0, 0.0, eta_hi)

    res = minimize_scalar(neg_ll, bounds=(eta_lo, eta_hi), method="bounded",
                          options={"xatol": 1e-12})
    eta = float(res.x)
    # The bounded minimizer never lands exactly on a boundary; also compare
    # against the exponential point eta = 0 so a flat interior cannot hide it.
    if neg_ll(0.0) < neg_ll(eta):
        eta = 0.0
    xi = xi_of(eta)
    beta = beta_of(eta)
    return float(np.clip(xi, -0.5, 1.0)), float(beta)


def fit_tail(null_scores: np.ndarray, quantile_q: float = DEFAULT_TAIL_QUANTILE) -> GpdFit:
    """Fit the exceedance tail of a null-score sample.

    The cut u is the empirical quantile_q-quantile; exceedances are the
    strictly larger scores minus u. Order of the input is irrelevant.
    """
    scores = np.asarray(null_scores, dtype=np.float64).ravel()
    n = scores.size
    if n < MIN_NULL_SAMPLES:
        raise CalibrationError(
            f"need at least {MIN_NULL_SAMPLES} null scores, got {n}"
        )
    if not 0.95 <= quantile_q <= 0.99:
        raise ParameterError("tail quantile must lie in [0.95, 0.99]")
    if not np.all(np.isfinite(scores)):
        raise DataError("null scores contain non-finite values")
    u = float(np.quantile(scores, quantile_q))
    # canonical order makes the fit exactly invariant to input permutation
    y = np.sort(scores[scores > u] - u)
    if y.size < MIN_EXCEEDANCES:
        raise CalibrationError(
            f"only {y.size} exceedances over u={u:.6g}; "
            f"increase the null sample or lower the tail quantile"
        )
    xi, beta = _gpd_profile_mle(y)
    return GpdFit(u=u, xi=xi, beta=beta, p_hat_u=y.size / n, n=n, n_exceed=int(y.size))


def solve_threshold(fit: GpdFit, alpha: float) -> float:
    """Threshold with model tail probability alpha. alpha may not exceed the
    empirical exceedance probability (no extrapolation would be needed)."""
    if not 0 < alpha <= fit.p_hat_u:
        raise ParameterError(
            f"alpha must be in (0, p_hat_u={fit.p_hat_u:.6g}]; got {alpha:.6g}"
        )
    ratio = fit.p_hat_u / alpha
    if abs(fit.xi) < XI_ZERO_TOL:
        return fit.u + fit.beta * float(np.log(ratio))
    return fit.u + (fit.beta / fit.xi) * (ratio**fit.xi - 1.0)


def calibrate(
    null_source: Iterable[float] | np.ndarray,
    n: int,
    alpha: float,
    quantile_q: float = DEFAULT_TAIL_QUANTILE,
    source: str = "",
) -> CalibrationResult:
    """Consume n null detection statistics, fit the tail, solve the threshold."""
    if n < MIN_NULL_SAMPLES:
        raise CalibrationError(f"need n >= {MIN_NULL_SAMPLES}, got {n}")
    if isinstance(null_source, np.ndarray):
        scores = null_source.ravel()[:n]
    else:
        scores = np.fromiter(islice(iter(null_source), n), dtype=np.float64)
    if scores.size < n:
        raise CalibrationError(f"null source yielded {scores.size} < n={n} scores")
    fit = fit_tail(scores, quantile_q)
    tau = solve_threshold(fit, alpha)
    return CalibrationResult(tau=tau, fit=fit, alpha=alpha, quantile_q=quantile_q,
                             source=source)


def threshold_bootstrap_band(
    null_scores: np.ndarray,
    alpha: float,
    quantile_q: float = DEFAULT_TAIL_QUANTILE,
    n_boot: int = 200,
    coverage: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Percentile bootstrap band for the solved threshold."""
    scores = np.asarray(null_scores, dtype=np.float64).ravel()
    rng = np.random.default_rng(seed)
    taus = []
    for _ in range(n_boot):
        sample = rng.choice(scores, size=scores.size, replace=True)
        try:
            taus.append(solve_threshold(fit_tail(sample, quantile_q), alpha))
        except (CalibrationError, ParameterError):
            continue
    if len(taus) < n_boot // 2:
        raise CalibrationError("bootstrap failed on most resamples")
    lo, hi = np.quantile(taus, [(1 - coverage) / 2, 1 - (1 - coverage) / 2])
    return float(lo), float(hi)


def t_test(sample_a: np.ndarray, sample_b: np.ndarray) -> TTestResult:
    """Pooled two-sample t statistic (absolute-difference form)."""
    a = np.asarray(sample_a, dtype=np.float64).ravel()
    b = np.asarray(sample_b, dtype=np.float64).ravel()
    if a.size < 2 or b.size < 2:
        raise ParameterError("t_test needs at least 2 observations per sample")
    var_a = float(np.var(a, ddof=1))
    var_b = float(np.var(b, ddof=1))
    pooled = np.sqrt(((a.size - 1) * var_a + (b.size - 1) * var_b)
                     / (a.size + b.size - 2))
    if pooled == 0.0:
        raise DataError("zero pooled variance: t statistic undefined")
    t = abs(float(np.mean(a)) - float(np.mean(b))) / (
        pooled * np.sqrt(1.0 / a.size + 1.0 / b.size)
    )
    return TTestResult(t=float(t), pooled_std=float(pooled), n_a=int(a.size),
                       n_b=int(b.size), mean_a=float(np.mean(a)),
                       mean_b=float(np.mean(b)))


# --------------------------------------------------------------------------
# Null-score generation through the real detection pipeline.

def _batched_null_run(
    verifier: Verifier,
    z_batch: np.ndarray,
    nonces: list[Nonce],
    claimed_chunks: np.ndarray | None,
):
    """Undo placement per trial, score all groups at once, reduce to per-trial
    statistics. Equivalent to looping verifier.detect; see the cross-check in
    the test suite."""
    from .codec import _placement

    p = verifier.params
    k_size = verifier.codebook.size
    n_trials = z_batch.shape[0]

    # Fused undo-and-gather: undoing the block placement and then reading
    # blocks group-major is one composed index lookup per trial. Values are
    # copied unchanged, so this is bitwise-equal to undo_placement followed
    # by gather_blocks. group_major row (g, j) holds flat block j*T + g.
    order = verifier.template.block_order
    t_blocks = p.blocks_per_bin
    group_major_block = (
        np.arange(p.num_blocks, dtype=np.int64)
        .reshape(p.num_bins, t_blocks)
        .T.ravel()
    )
    rows = np.empty((n_trials * p.num_groups, p.group_size, p.block_size))
    flat = rows.reshape(n_trials, p.num_blocks * p.block_size)
    arange_blocks = np.arange(p.num_blocks, dtype=np.int64)
    for i in range(n_trials):
        tau = _placement(verifier.key, nonces[i], p.num_blocks)
        inv = np.empty_like(tau)
        inv[tau] = arange_blocks
        flat[i] = z_batch[i][order[inv[group_major_block]].ravel()]

    scores, _ = verifier.score_blocks(rows)
    scores = scores.reshape(n_trials, p.num_groups, k_size)

    decoded = np.argmin(scores, axis=2)
    if claimed_chunks is not None:
        trial_ix = np.arange(n_trials)[:, None]
        group_ix = np.arange(p.num_groups)[None, :]
        d_tgt = scores[trial_ix, group_ix, claimed_chunks]
        masked = scores.copy()
        masked[trial_ix, group_ix, claimed_chunks] = np.inf
        d_comp = masked.min(axis=2)
    else:
        two_best = np.partition(scores, 1, axis=2)
        d_tgt = two_best[..., 0]
        d_comp = two_best[..., 1]
    margins = np.maximum(0.0, (d_comp - d_tgt) / (d_comp + MARGIN_EPS))
    return margins.mean(axis=1), decoded


def null_statistics_random_latents(
    key: SecretKey,
    params: TemplateParams,
    cb: Codebook,
    n: int,
    mode: str = MODE_CLAIMED,
    seed: int = 0,
    batch: int = 256,
    collect_chunks: bool = False,
):
    """Detection statistics for n random unwatermarked latents under `key`.

    Claimed mode verifies a fresh random payload per trial; blind mode uses
    the tracked best/second-best pair. Returns the score vector, plus the
    decoded chunk values when collect_chunks is set.
    """
    if mode not in (MODE_CLAIMED, MODE_BLIND):
        raise ParameterError(f"unknown detection mode {mode!r}")
    verifier = Verifier(key, params, cb)
    rng = np.random.default_rng(seed)
    out = np.empty(n, dtype=np.float64)
    chunks = [] if collect_chunks else None
    done = 0
    while done < n:
        take = min(batch, n - done)
        z_batch = rng.standard_normal((take, params.size))
        nonces = [Nonce(rng.bytes(NONCE_BYTES)) for _ in range(take)]
        claimed = (
            rng.integers(0, cb.size, size=(take, params.num_groups))
            if mode == MODE_CLAIMED
            else None
        )
        stats, decoded = _batched_null_run(verifier, z_batch, nonces, claimed)
        out[done:done + take] = stats
        if chunks is not None:
            chunks.append(decoded.ravel())
        done += take
    if chunks is not None:
        return out, np.concatenate(chunks)
    return out


def null_statistics_wrong_key(
    key: SecretKey,
    params: TemplateParams,
    cb: Codebook,
    n: int,
    mode: str = MODE_CLAIMED,
    seed: int = 0,
):
    """Detection statistics under `key` for latents watermarked with other,
    independently drawn keys (fresh key, nonce, and payload per trial)."""
    if mode not in (MODE_CLAIMED, MODE_BLIND):
        raise ParameterError(f"unknown detection mode {mode!r}")
    verifier = Verifier(key, params, cb)
    rng = np.random.default_rng(seed)
    nbits = params.payload_bits(cb.bits_per_group)
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        other = SecretKey(rng.bytes(KEY_BYTES))
        nonce = Nonce(rng.bytes(NONCE_BYTES))
        marked = Embedder(other, params, cb).embed(nonce, Payload.random(nbits, rng))
        claimed = Payload.random(nbits, rng) if mode == MODE_CLAIMED else None
        rep = verifier.detect(marked.values, nonce, claimed_payload=claimed)
        out[i] = rep.statistic
    return out
