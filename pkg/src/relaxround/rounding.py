"""Hyperplane rounding of relaxed solutions and, for width 2, exact
computation of the induced distribution over sign patterns.

A random unit direction g turns a row matrix X into the sign pattern
sign(X g) with sign(0) := +1. For k = 2 each row constrains g to a closed
half-circle, so every realizable pattern corresponds to one arc between
consecutive boundary angles; the pattern probability is the arc length
over 2*pi and the support has at most 2n patterns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import Domain, MrfParams, check_assignment, score_batch

# Rows shorter than this are excluded from the arc geometry and treated as
# unconstrained by the distribution queries.
DEGENERATE_NORM = 1e-12

# Boundary angles closer than this merge into one boundary.
_MERGE_TOL = 1e-12

_TWO_PI = 2.0 * np.pi


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Rounded samples as int8 rows, their scores, and the seed used."""

    samples: np.ndarray
    scores: np.ndarray
    seed: int

    def __post_init__(self):
        if self.samples.ndim != 2 or self.scores.shape != (self.samples.shape[0],):
            raise ValueError(
                f"inconsistent batch shapes {self.samples.shape} / {self.scores.shape}"
            )

    def __len__(self) -> int:
        return self.samples.shape[0]


@dataclass(frozen=True, eq=False)
class RoundingDistributionK2:
    """Preprocessed arc arrangement for a width-2 row matrix.

    `angles` are the distinct boundary angles in [0, 2*pi) sorted
    increasingly, `multiplicity[i]` counts the row boundaries merged into
    angles[i], `thetas` holds each row's direction angle (NaN for
    degenerate rows), and `row_order` lists the non-degenerate row indices
    sorted by direction angle.
    """

    angles: np.ndarray
    multiplicity: np.ndarray
    thetas: np.ndarray
    row_order: np.ndarray
    degenerate_rows: frozenset

    @property
    def n(self) -> int:
        return self.thetas.shape[0]


def random_unit_vector(k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from the unit sphere in R^k (normalized Gaussian,
    redrawn in the measure-zero degenerate case)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    while True:
        g = rng.standard_normal(k)
        norm = np.linalg.norm(g)
        if norm >= 1e-12:
            return g / norm


def round_once(X, g) -> np.ndarray:
    """Sign pattern sign(X g) with sign(0) := +1, as an int8 vector."""
    X = np.asarray(X, dtype=float)
    g = np.asarray(g, dtype=float)
    if X.ndim != 2 or g.shape != (X.shape[1],):
        raise ValueError(f"shape mismatch: X {X.shape}, g {g.shape}")
    return np.where(X @ g >= 0.0, 1, -1).astype(np.int8)


def _check_feasible_rows(params: MrfParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] != params.n:
        raise ValueError(f"X has shape {X.shape}, expected ({params.n}, k)")
    norms = np.linalg.norm(X, axis=1)
    if norms.size and norms.max() > 1.0 + 1e-9:
        raise ValueError(f"infeasible rows: max norm {norms.max()}")
    return X


def _sample_batch(
    params: MrfParams, X: np.ndarray, count: int, rng: np.random.Generator, seed: int
) -> SampleBatch:
    k = X.shape[1]
    G = rng.standard_normal((count, k))
    # Signs are invariant to the length of g, so Gaussian directions round
    # exactly like unit ones; only (measure-zero) zero draws are replaced.
    norms = np.linalg.norm(G, axis=1)
    while np.any(norms < 1e-12):
        bad = norms < 1e-12
        G[bad] = rng.standard_normal((int(bad.sum()), k))
        norms = np.linalg.norm(G, axis=1)
    samples = np.where(G @ X.T >= 0.0, 1, -1).astype(np.int8)
    scores = score_batch(params, samples)
    return SampleBatch(samples=samples, scores=scores, seed=seed)


def rrr_map_sample(params: MrfParams, X, count: int, seed: int) -> SampleBatch:
    """Draw `count` rounded samples of a feasible relaxed solution and
    score each one. Deterministic given the seed."""
    if params.domain is not Domain.PLUS_MINUS_ONE:
        raise ValueError("rounding produces {-1,+1} assignments")
    if count < 1:
        raise ValueError("count must be >= 1")
    X = _check_feasible_rows(params, X)
    rng = np.random.default_rng(seed)
    return _sample_batch(params, X, count, rng, seed)


def _check_width2(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != 2:
        raise ValueError(f"expected an (n, 2) row matrix, got shape {X.shape}")
    return X


def build_px_k2(X) -> RoundingDistributionK2:
    """Preprocess the rounding distribution of a width-2 row matrix.

    Each non-degenerate row with direction angle theta contributes the two
    boundary angles theta +- pi/2 (mod 2*pi) where its sign flips.
    Coincident boundaries (up to 1e-12, including across the wraparound)
    merge with multiplicity.
    """
    X = _check_width2(X)
    n = X.shape[0]
    norms = np.linalg.norm(X, axis=1)
    degenerate = norms < DEGENERATE_NORM
    thetas = np.full(n, np.nan)
    live = ~degenerate
    thetas[live] = np.arctan2(X[live, 1], X[live, 0])

    live_idx = np.flatnonzero(live)
    row_order = live_idx[np.argsort(thetas[live_idx], kind="stable")]

    raw = np.concatenate([thetas[live] + np.pi / 2.0, thetas[live] - np.pi / 2.0])
    raw = np.mod(raw, _TWO_PI)
    raw[raw >= _TWO_PI] -= _TWO_PI  # mod can round up to the modulus itself
    raw.sort()

    angles: list[float] = []
    counts: list[int] = []
    for value in raw:
        if angles and value - angles[-1] <= _MERGE_TOL:
            counts[-1] += 1
        else:
            angles.append(float(value))
            counts.append(1)
    if len(angles) >= 2 and (_TWO_PI - angles[-1]) + angles[0] <= _MERGE_TOL:
        counts[0] += counts[-1]
        angles.pop()
        counts.pop()

    thetas.setflags(write=False)
    return RoundingDistributionK2(
        angles=np.asarray(angles),
        multiplicity=np.asarray(counts, dtype=int),
        thetas=thetas,
        row_order=row_order,
        degenerate_rows=frozenset(int(i) for i in np.flatnonzero(degenerate)),
    )


def _live_mask(dist: RoundingDistributionK2) -> np.ndarray:
    mask = np.ones(dist.n, dtype=bool)
    for i in dist.degenerate_rows:
        mask[i] = False
    return mask


def px_query(dist: RoundingDistributionK2, X, x) -> float:
    """Probability that rounding produces the sign pattern x.

    The admissible directions form the intersection of one closed
    half-circle per non-degenerate row (centered on the row direction for
    +1, opposite it for -1), which is a single arc; the probability is its
    length over 2*pi. Degenerate rows accept either sign. O(n) per query.
    """
    X = _check_width2(X)
    if X.shape[0] != dist.n:
        raise ValueError(f"X has {X.shape[0]} rows, distribution has {dist.n}")
    xv = check_assignment(x, dist.n, Domain.PLUS_MINUS_ONE)
    mask = _live_mask(dist)
    if not mask.any():
        return 1.0
    centers = dist.thetas[mask] + np.where(xv[mask] < 0.0, np.pi, 0.0)
    rel = np.mod(centers - centers[0] + np.pi, _TWO_PI) - np.pi
    lo = float(rel.max()) - np.pi / 2.0
    hi = float(rel.min()) + np.pi / 2.0
    return max(0.0, hi - lo) / _TWO_PI


def _px_query_batch(dist: RoundingDistributionK2, S: np.ndarray) -> np.ndarray:
    """Vectorized px_query over sample rows; same arithmetic as px_query."""
    mask = _live_mask(dist)
    if not mask.any():
        return np.ones(S.shape[0])
    centers = dist.thetas[mask][None, :] + np.where(S[:, mask] < 0, np.pi, 0.0)
    rel = np.mod(centers - centers[:, :1] + np.pi, _TWO_PI) - np.pi
    width = (rel.min(axis=1) + np.pi / 2.0) - (rel.max(axis=1) - np.pi / 2.0)
    return np.maximum(width, 0.0) / _TWO_PI


def enumerate_support_k2(dist: RoundingDistributionK2, X) -> list:
    """All realizable sign patterns with their probabilities.

    Sweeps the direction angle across consecutive boundary arcs and reads
    off the constant pattern on each arc at its midpoint. Degenerate rows
    are reported as +1. Probabilities sum to 1.
    """
    X = _check_width2(X)
    if X.shape[0] != dist.n:
        raise ValueError(f"X has {X.shape[0]} rows, distribution has {dist.n}")
    degenerate = np.zeros(dist.n, dtype=bool)
    for i in dist.degenerate_rows:
        degenerate[i] = True
    if dist.angles.size == 0:
        return [(np.ones(dist.n, dtype=np.int8), 1.0)]
    out = []
    m = dist.angles.size
    for j in range(m):
        a0 = dist.angles[j]
        a1 = dist.angles[j + 1] if j + 1 < m else dist.angles[0] + _TWO_PI
        width = a1 - a0
        if width <= 0.0:
            continue
        mid = 0.5 * (a0 + a1)
        direction = np.array([np.cos(mid), np.sin(mid)])
        pattern = np.where(X @ direction >= 0.0, 1, -1).astype(np.int8)
        pattern[degenerate] = 1
        out.append((pattern, width / _TWO_PI))
    return out


def batch_to_csv(batch: SampleBatch) -> str:
    """Sample scores as CSV with columns (sample, score)."""
    lines = ["sample,score"]
    lines += [f"{i},{s!r}" for i, s in enumerate(batch.scores)]
    return "\n".join(lines) + "\n"
