"""Single-site and block Gibbs sampling with optional annealing, plus the
relax-and-round warm start that feeds rounded samples into annealed chains.

Temperature always divides the score, so a conditional flip probability is
a logistic in (score difference)/temperature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .models import Domain, MrfParams, RbmParams, check_assignment
from .rounding import _check_feasible_rows, _sample_batch

__all__ = [
    "AnnealSchedule",
    "ChainState",
    "gibbs_conditional",
    "gibbs_sweep",
    "block_gibbs_rbm_sweep",
    "annealed_gibbs",
    "rrr_ag",
    "chain_to_csv",
]


@dataclass(frozen=True, eq=False)
class AnnealSchedule:
    """Sequence of strictly positive, non-increasing temperatures ending at
    1.0. May be empty (no sweeps at all)."""

    temperatures: np.ndarray

    def __post_init__(self):
        temps = np.array(self.temperatures, dtype=float)
        if temps.ndim != 1:
            raise ValueError("temperatures must be a 1-dimensional sequence")
        if temps.size:
            if not np.all(temps > 0.0):
                raise ValueError("temperatures must be strictly positive")
            if np.any(np.diff(temps) > 0.0):
                raise ValueError("temperatures must be non-increasing")
            if temps[-1] != 1.0:
                raise ValueError("the final temperature must be 1.0")
        temps.setflags(write=False)
        object.__setattr__(self, "temperatures", temps)

    @classmethod
    def linear(cls, t_high: float, steps: int) -> "AnnealSchedule":
        """Linear ramp from t_high down to 1.0 over `steps` sweeps."""
        if steps < 1:
            raise ValueError("steps must be >= 1")
        if t_high < 1.0:
            raise ValueError("t_high must be >= 1.0")
        if steps == 1:
            return cls(np.array([1.0]))
        return cls(np.linspace(t_high, 1.0, steps))

    def __len__(self) -> int:
        return self.temperatures.size


@dataclass(frozen=True, eq=False)
class ChainState:
    """A chain position: current assignment, number of sweeps performed,
    and the score after each sweep."""

    x: np.ndarray
    sweep_count: int
    score_trace: tuple

    def __post_init__(self):
        if self.sweep_count < 0 or len(self.score_trace) > self.sweep_count:
            raise ValueError("inconsistent sweep bookkeeping")

    @classmethod
    def initial(cls, x) -> "ChainState":
        return cls(np.asarray(x, dtype=np.int8).copy(), 0, ())

    @property
    def final_score(self):
        return self.score_trace[-1] if self.score_trace else None


def gibbs_conditional(params: MrfParams, x, i: int, temperature: float = 1.0) -> float:
    """P(x_i = +1 | all other coordinates) under weights exp(x'Ax / T).

    The x_i-dependent part of the score is 2 x_i sum_{j != i} A_ij x_j, so
    the conditional is logistic(4 * field / T) in that field.
    """
    if params.domain is not Domain.PLUS_MINUS_ONE:
        raise ValueError("single-site sampling expects the {-1,+1} domain")
    if not 0 <= i < params.n:
        raise ValueError(f"site {i} out of range for n={params.n}")
    if not temperature > 0.0:
        raise ValueError("temperature must be positive")
    xv = check_assignment(x, params.n, params.domain)
    field = float(params.A[i] @ xv - params.A[i, i] * xv[i])
    return float(expit(4.0 * field / temperature))


def _sweep_inplace(
    A: np.ndarray, x: np.ndarray, temperature: float, rng: np.random.Generator
) -> None:
    """One systematic scan over sites 0..n-1, drawing one uniform per site."""
    n = x.shape[0]
    for i in range(n):
        field = A[i] @ x - A[i, i] * x[i]
        prob = expit(4.0 * field / temperature)
        x[i] = 1 if rng.random() < prob else -1


def gibbs_sweep(
    params: MrfParams, state: ChainState, temperature: float, rng: np.random.Generator
) -> ChainState:
    """One systematic single-site sweep. Returns the advanced chain state
    with the new score appended to the trace."""
    if params.domain is not Domain.PLUS_MINUS_ONE:
        raise ValueError("single-site sampling expects the {-1,+1} domain")
    if not temperature > 0.0:
        raise ValueError("temperature must be positive")
    check_assignment(state.x, params.n, params.domain)
    x = state.x.astype(np.int8).copy()
    _sweep_inplace(params.A, x, temperature, rng)
    new_score = float(x @ params.A @ x)
    return ChainState(x, state.sweep_count + 1, state.score_trace + (new_score,))


def block_gibbs_rbm_sweep(
    params: RbmParams, v, h, temperature: float, rng: np.random.Generator
):
    """One block sweep: resample all hidden units given v, then all visible
    units given the new h. Conditionals are logistic(2 * field / T)."""
    if params.domain is not Domain.PLUS_MINUS_ONE:
        raise ValueError("block sampling expects the {-1,+1} domain")
    if not temperature > 0.0:
        raise ValueError("temperature must be positive")
    vv = check_assignment(v, params.m, params.domain)
    check_assignment(h, params.p, params.domain)
    ph = expit(2.0 * (vv @ params.W + params.b) / temperature)
    h_new = np.where(rng.random(params.p) < ph, 1, -1).astype(np.int8)
    pv = expit(2.0 * (params.W @ h_new + params.a) / temperature)
    v_new = np.where(rng.random(params.m) < pv, 1, -1).astype(np.int8)
    return v_new, h_new


def _run_schedule(
    params: MrfParams,
    temperatures: np.ndarray,
    x0: np.ndarray,
    rng: np.random.Generator,
) -> ChainState:
    x = np.asarray(x0, dtype=np.int8).copy()
    trace = []
    for temperature in temperatures:
        _sweep_inplace(params.A, x, float(temperature), rng)
        trace.append(float(x @ params.A @ x))
    return ChainState(x, len(trace), tuple(trace))


def annealed_gibbs(
    params: MrfParams, schedule: AnnealSchedule, init, seed: int
) -> ChainState:
    """Run one sweep per schedule temperature, starting from `init`."""
    if params.domain is not Domain.PLUS_MINUS_ONE:
        raise ValueError("single-site sampling expects the {-1,+1} domain")
    if len(schedule) == 0:
        raise ValueError("schedule must be nonempty")
    check_assignment(init, params.n, params.domain)
    rng = np.random.default_rng(seed)
    return _run_schedule(params, schedule.temperatures, init, rng)


def rrr_ag(
    params: MrfParams, X, schedule: AnnealSchedule, chains: int, seed: int
) -> ChainState:
    """Relax-and-round warm start for annealed Gibbs.

    Draws `chains` rounded samples of X, anneals one chain from each along
    `schedule`, and returns the final state with the best score (first
    winner on ties). With an empty schedule the best initial sample is
    returned unchanged. Seed derivation: the root seed spawns (sampling,
    annealing); the annealing child spawns one generator per chain.
    """
    if params.domain is not Domain.PLUS_MINUS_ONE:
        raise ValueError("single-site sampling expects the {-1,+1} domain")
    if chains < 1:
        raise ValueError("chains must be >= 1")
    X = _check_feasible_rows(params, X)
    root = np.random.SeedSequence(seed)
    sample_ss, anneal_ss = root.spawn(2)
    batch = _sample_batch(params, X, chains, np.random.default_rng(sample_ss), seed)
    best = None
    best_score = -np.inf
    for idx, chain_ss in enumerate(anneal_ss.spawn(chains)):
        if len(schedule) == 0:
            state = ChainState.initial(batch.samples[idx])
            final = float(batch.scores[idx])
        else:
            rng = np.random.default_rng(chain_ss)
            state = _run_schedule(params, schedule.temperatures, batch.samples[idx], rng)
            final = state.score_trace[-1]
        if final > best_score:
            best, best_score = state, final
    return best


def chain_to_csv(state: ChainState, schedule: AnnealSchedule) -> str:
    """Chain trace as CSV with columns (sweep, temperature, score)."""
    if len(schedule) != len(state.score_trace):
        raise ValueError("schedule length does not match the score trace")
    lines = ["sweep,temperature,score"]
    rows = zip(schedule.temperatures, state.score_trace)
    for i, (t, s) in enumerate(rows, start=1):
        lines.append(f"{i},{float(t)!r},{float(s)!r}")
    return "\n".join(lines) + "\n"
