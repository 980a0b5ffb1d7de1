"""Relax-and-round inference for binary pairwise models.

Quadratic models over {-1,+1} or {0,1} assignments (including RBMs via an
auxiliary-variable rewrite) are relaxed to a block ball-constrained program,
solved by projected gradient ascent, and rounded back through random
hyperplanes. The rounding distribution doubles as a proposal for partition
function estimation; tempered Gibbs sampling provides the baselines.
"""

from .gibbs import (
    AnnealSchedule,
    ChainState,
    annealed_gibbs,
    block_gibbs_rbm_sweep,
    chain_to_csv,
    gibbs_conditional,
    gibbs_sweep,
    rrr_ag,
)
from .instances import (
    InstanceFormatError,
    dump_instance,
    dumps_instance,
    load_instance,
    loads_instance,
)
from .models import (
    BRUTE_FORCE_CAP,
    CapExceededError,
    Domain,
    LinearReduction,
    MrfParams,
    RbmParams,
    bits_to_hyp,
    brute_force_map,
    canonicalize_auxiliary,
    check_assignment,
    domain_values,
    fold_linear_bits,
    fold_linear_hyp,
    gen_hard_rbm,
    gen_random_rbm,
    hyp_to_bits,
    iter_corner_blocks,
    rbm_score,
    rbm_to_mrf,
    score,
    score_batch,
)
from .partition import (
    BRUTE_LOGZ_CAP,
    Budget,
    EstimateReport,
    Estimator,
    ais_logz,
    exact_logz_mrf,
    exact_logz_rbm,
    report_to_json,
    reports_to_csv,
    rrr_is,
    rrr_is_exact,
    rrr_low,
)
from .relaxation import (
    LrpOptions,
    RelaxedSolution,
    StepRule,
    estimate_lipschitz,
    lrp_objective,
    project_rows,
    solve_lrp,
    trace_to_csv,
)
from .rounding import (
    RoundingDistributionK2,
    SampleBatch,
    batch_to_csv,
    build_px_k2,
    enumerate_support_k2,
    px_query,
    random_unit_vector,
    round_once,
    rrr_map_sample,
)

__version__ = "0.1.0"

__all__ = [
    "AnnealSchedule",
    "BRUTE_FORCE_CAP",
    "BRUTE_LOGZ_CAP",
    "Budget",
    "CapExceededError",
    "ChainState",
    "Domain",
    "EstimateReport",
    "Estimator",
    "InstanceFormatError",
    "LinearReduction",
    "LrpOptions",
    "MrfParams",
    "RbmParams",
    "RelaxedSolution",
    "RoundingDistributionK2",
    "SampleBatch",
    "StepRule",
    "ais_logz",
    "annealed_gibbs",
    "batch_to_csv",
    "bits_to_hyp",
    "block_gibbs_rbm_sweep",
    "brute_force_map",
    "build_px_k2",
    "canonicalize_auxiliary",
    "chain_to_csv",
    "check_assignment",
    "domain_values",
    "dump_instance",
    "dumps_instance",
    "enumerate_support_k2",
    "estimate_lipschitz",
    "exact_logz_mrf",
    "exact_logz_rbm",
    "fold_linear_bits",
    "fold_linear_hyp",
    "gen_hard_rbm",
    "gen_random_rbm",
    "gibbs_conditional",
    "gibbs_sweep",
    "hyp_to_bits",
    "iter_corner_blocks",
    "load_instance",
    "loads_instance",
    "lrp_objective",
    "project_rows",
    "px_query",
    "random_unit_vector",
    "rbm_score",
    "rbm_to_mrf",
    "report_to_json",
    "reports_to_csv",
    "round_once",
    "rrr_ag",
    "rrr_is",
    "rrr_is_exact",
    "rrr_low",
    "rrr_map_sample",
    "score",
    "score_batch",
    "solve_lrp",
    "trace_to_csv",
]
