"""Variable length Markov chains: context trees, simulation, estimation and bounds."""
from .core import (
    BINARY,
    Alphabet,
    ContextTree,
    ProbabilisticContextTree,
    RenewalSpec,
    compare_trees,
    context_of,
    iid_tree,
    read_tree,
    ref_tree,
    renewal_pct,
    truncate_tree,
    validate_tree,
    write_tree,
)
from .counts import CountTrie, build_counts, n_count, p_hat
from .estimators import (
    ContextConfig,
    DeltaConfig,
    EstimatedTree,
    delta_stat,
    ell_hat,
    empirical_tree_rissanen,
    estimate_tree_delta,
    lambda_stat,
)
from .sampler import NoStationaryRegime, check_renewal_recurrence, renewal_tree, sample_path, stationary_law
from .theory import (
    PreconditionError,
    alpha_stats,
    beta_k,
    canonical_approximation,
    conditional_law,
    cylinder_probability,
    d_m,
    deviation_bound,
    epsilon_m,
    min_k_condition,
    recovery_bound,
)

__version__ = "0.1.0"
