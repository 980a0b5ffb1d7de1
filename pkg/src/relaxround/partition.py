"""Log-partition estimation: exact enumeration, analytic hidden-unit
sum-out, annealed importance sampling, and two estimators driven by
rounded samples of a relaxed solution (a deduplicated lower bound and a
width-2 importance sampler with exactly known proposal probabilities)."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logsumexp

from .models import (
    Domain,
    MrfParams,
    RbmParams,
    CapExceededError,
    iter_corner_blocks,
    score_batch,
)
from .rounding import (
    SampleBatch,
    _check_feasible_rows,
    _px_query_batch,
    _sample_batch,
    build_px_k2,
    enumerate_support_k2,
)

BRUTE_LOGZ_CAP = 24


class Estimator(enum.Enum):
    EXACT = "exact"
    AIS = "ais"
    RRR_LOW = "rrr-low"
    RRR_IS = "rrr-is"


@dataclass(frozen=True)
class Budget:
    """Work counters for an estimate: sample count, temperature count, and
    sweeps per run. Unused counters are zero."""

    samples: int = 0
    temperatures: int = 0
    sweeps: int = 0

    def __post_init__(self):
        if min(self.samples, self.temperatures, self.sweeps) < 0:
            raise ValueError("budget counters must be non-negative")


@dataclass(frozen=True, eq=False)
class EstimateReport:
    """One log-partition estimate with its budget and provenance. `details`
    carries estimator-specific extras (e.g. the spread of AIS run weights)."""

    estimator: Estimator
    log_z: float
    budget: Budget
    seed: int
    wall_clock: float
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.isfinite(self.log_z):
            raise ValueError("log_z must be finite")


def _streaming_logsumexp(chunks) -> float:
    """Max-shifted log-sum-exp over an iterable of score arrays."""
    running_max = -np.inf
    running_sum = 0.0
    for values in chunks:
        if values.size == 0:
            continue
        m = float(values.max())
        if m > running_max:
            if np.isfinite(running_max):
                running_sum *= np.exp(running_max - m)
            running_max = m
        running_sum += float(np.exp(values - running_max).sum())
    if not np.isfinite(running_max):
        raise ValueError("no scores to accumulate")
    return running_max + float(np.log(running_sum))


def exact_logz_mrf(params: MrfParams, cap: int = BRUTE_LOGZ_CAP) -> float:
    """log sum_x exp(x' A x) over all corners of the model's domain, by
    streaming enumeration."""
    if params.n > cap:
        raise CapExceededError(f"n={params.n} exceeds enumeration cap {cap}")
    A = params.A
    return _streaming_logsumexp(
        np.einsum("ti,ti->t", block @ A, block)
        for block in iter_corner_blocks(params.n, params.domain)
    )


def exact_logz_rbm(params: RbmParams, cap: int = BRUTE_LOGZ_CAP) -> float:
    """Exact log partition of an RBM by summing out the hidden layer.

    Enumerates the 2**m visible configurations and applies the analytic
    per-hidden-unit factor: log(2 cosh(z_j)) on the {-1,+1} domain,
    log(1 + exp(z_j)) on the {0,1} domain, with z = v'W + b. The hidden
    layer size is unbounded.
    """
    if params.m > cap:
        raise CapExceededError(f"m={params.m} exceeds enumeration cap {cap}")

    def blocks():
        for V in iter_corner_blocks(params.m, params.domain):
            z = V @ params.W + params.b
            if params.domain is Domain.PLUS_MINUS_ONE:
                hidden = np.logaddexp(z, -z).sum(axis=1)
            else:
                hidden = np.logaddexp(0.0, z).sum(axis=1)
            yield V @ params.a + hidden

    return _streaming_logsumexp(blocks())


def _uniform_states(
    rng: np.random.Generator, rows: int, cols: int, domain: Domain
) -> np.ndarray:
    bits = rng.integers(0, 2, size=(rows, cols), dtype=np.int8)
    if domain is Domain.PLUS_MINUS_ONE:
        return (2 * bits - 1).astype(np.int8)
    return bits


def _rbm_score_batch(params: RbmParams, V: np.ndarray, H: np.ndarray) -> np.ndarray:
    return (
        np.einsum("rm,rm->r", V @ params.W, H.astype(float))
        + V @ params.a
        + H @ params.b
    )


def _tempered_block_sweep(
    params: RbmParams,
    V: np.ndarray,
    H: np.ndarray,
    beta: float,
    rng: np.random.Generator,
):
    """Block sweep targeting exp(beta * score), vectorized over chains."""
    gain = 2.0 if params.domain is Domain.PLUS_MINUS_ONE else 1.0
    lo = -1 if params.domain is Domain.PLUS_MINUS_ONE else 0
    zh = V @ params.W + params.b
    ph = expit(gain * beta * zh)
    H = np.where(rng.random(ph.shape) < ph, 1, lo).astype(np.int8)
    zv = H @ params.W.T + params.a
    pv = expit(gain * beta * zv)
    V = np.where(rng.random(pv.shape) < pv, 1, lo).astype(np.int8)
    return V, H


def ais_logz(
    params: RbmParams, num_temps: int, num_runs: int, seed: int
) -> EstimateReport:
    """Annealed importance sampling from the uniform base distribution.

    Interpolates exp(beta * score) along a linear beta grid on [0, 1].
    Each run accumulates sum_t (beta_{t+1} - beta_t) * score(x_t) and
    advances x with one block sweep per temperature; the estimate is
    (m+p) log 2 plus the log-mean-exp of the run weights, reduced in run
    order. `details` reports the standard deviation of the run weights.
    """
    if num_temps < 2:
        raise ValueError("num_temps must be >= 2")
    if num_runs < 1:
        raise ValueError("num_runs must be >= 1")
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    betas = np.linspace(0.0, 1.0, num_temps)
    V = _uniform_states(rng, num_runs, params.m, params.domain)
    H = _uniform_states(rng, num_runs, params.p, params.domain)
    log_weights = np.zeros(num_runs)
    for t in range(1, num_temps):
        log_weights += (betas[t] - betas[t - 1]) * _rbm_score_batch(params, V, H)
        V, H = _tempered_block_sweep(params, V, H, float(betas[t]), rng)
    log_base = (params.m + params.p) * np.log(2.0)
    log_z = float(log_base + logsumexp(log_weights) - np.log(num_runs))
    return EstimateReport(
        estimator=Estimator.AIS,
        log_z=log_z,
        budget=Budget(samples=num_runs, temperatures=num_temps, sweeps=num_temps - 1),
        seed=seed,
        wall_clock=time.perf_counter() - start,
        details={"weight_std": float(np.std(log_weights))},
    )


def rrr_low(params: MrfParams, batch: SampleBatch) -> EstimateReport:
    """Deduplicated lower bound on the log partition.

    Keeps each distinct sampled assignment once and returns the
    log-sum-exp of their scores, which can only undercount the full sum
    over corners. Without deduplication repeated samples would be counted
    twice and the bound would be lost.
    """
    if len(batch) < 1:
        raise ValueError("batch must be nonempty")
    start = time.perf_counter()
    distinct = np.unique(batch.samples, axis=0)
    log_z = float(logsumexp(score_batch(params, distinct)))
    return EstimateReport(
        estimator=Estimator.RRR_LOW,
        log_z=log_z,
        budget=Budget(samples=len(batch)),
        seed=batch.seed,
        wall_clock=time.perf_counter() - start,
        details={"distinct": int(distinct.shape[0])},
    )


def rrr_is(params: MrfParams, X, count: int, seed: int) -> EstimateReport:
    """Importance sampling against the width-2 rounding distribution.

    Draws `count` rounded samples, weights each by exp(score)/p(sample)
    using the exactly computed pattern probability, and averages. A zero
    probability for a drawn sample would contradict the arc geometry and
    raises RuntimeError.
    """
    if params.domain is not Domain.PLUS_MINUS_ONE:
        raise ValueError("rounding produces {-1,+1} assignments")
    if count < 1:
        raise ValueError("count must be >= 1")
    X = _check_feasible_rows(params, X)
    if X.shape[1] != 2:
        raise ValueError("importance sampling requires width k=2")
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    batch = _sample_batch(params, X, count, rng, seed)
    dist = build_px_k2(X)
    probs = _px_query_batch(dist, batch.samples)
    if np.any(probs <= 0.0):
        raise RuntimeError("sampled pattern has zero computed probability")
    log_z = float(logsumexp(batch.scores - np.log(probs)) - np.log(count))
    return EstimateReport(
        estimator=Estimator.RRR_IS,
        log_z=log_z,
        budget=Budget(samples=count),
        seed=seed,
        wall_clock=time.perf_counter() - start,
    )


def rrr_is_exact(params: MrfParams, X) -> EstimateReport:
    """Exact expectation of the width-2 importance sampler.

    The mean of exp(score)/p over the rounding distribution equals the sum
    of exp(score) over the support, computed here by enumerating it. This
    lower-bounds the log partition (with equality when the support covers
    every corner) and is deterministic.
    """
    if params.domain is not Domain.PLUS_MINUS_ONE:
        raise ValueError("rounding produces {-1,+1} assignments")
    X = _check_feasible_rows(params, X)
    if X.shape[1] != 2:
        raise ValueError("importance sampling requires width k=2")
    start = time.perf_counter()
    support = enumerate_support_k2(build_px_k2(X), X)
    patterns = np.stack([pattern for pattern, _ in support])
    log_z = float(logsumexp(score_batch(params, patterns)))
    return EstimateReport(
        estimator=Estimator.RRR_IS,
        log_z=log_z,
        budget=Budget(samples=len(support)),
        seed=0,
        wall_clock=time.perf_counter() - start,
        details={"exact_support": True},
    )


def report_to_json(report: EstimateReport) -> str:
    """One report as a JSON document."""
    import json

    doc = {
        "estimator": report.estimator.value,
        "log_z": report.log_z,
        "budget": {
            "samples": report.budget.samples,
            "temperatures": report.budget.temperatures,
            "sweeps": report.budget.sweeps,
        },
        "seed": report.seed,
        "wall_clock": report.wall_clock,
        "details": report.details,
    }
    return json.dumps(doc, indent=2) + "\n"


def reports_to_csv(reports) -> str:
    """Estimates side by side as CSV, one row per estimator."""
    lines = ["estimator,log_z,samples,temperatures,sweeps,seed"]
    for r in reports:
        lines.append(
            f"{r.estimator.value},{r.log_z!r},{r.budget.samples},"
            f"{r.budget.temperatures},{r.budget.sweeps},{r.seed}"
        )
    return "\n".join(lines) + "\n"
