"""Probabilistic preference learning over permutations.

Sequential-conditional (pseudo-Mallows) sampling of a consensus ranking,
exact enumeration and MCMC baselines, click-data augmentation for top-k
recommendation, and the evaluation machinery (marginal KL, ELBO, ordering
search) that quantifies approximation quality.
"""

from .clicking import (
    Recommendation,
    TruncatedExponential,
    TruncatedPoisson,
    binarize,
    binary_mean_similarity,
    click_frequency_ranking,
    estimate_alpha_clicks,
    in_compatible_set,
    pseudo_clicking,
    recommend_topk,
    sample_user_ranking,
    sample_user_rankings,
    topk_probabilities,
)
from .data import ClickDataset, RankCountMatrix, RankingDataset, SampleSet
from .evaluation import (
    MarginalProfile,
    SearchTrace,
    assignment_solve,
    choose_sigma,
    default_sigma,
    elbo_exact,
    enumerate_ordering_study,
    iterative_search,
    joint_kl_exact,
    ls_move,
    marginal_kl,
    posterior_profile,
    reference_profile,
)
from .exact import (
    DiscreteDistribution,
    constrained_l1_minimizer,
    exact_posterior,
    log_evidence,
    log_partition,
    mallows_distribution,
    marginal_expectation,
    marginal_median,
    marginal_rank_distribution,
)
from .experiments import (
    ExperimentConfig,
    ResultTable,
    cp_consensus,
    run_alpha_roundtrip,
    run_clicking_accuracy,
    run_full_timing,
    run_g_bias,
    run_ordering_enum,
    run_sigma_study,
)
from .io import load_clicks, load_rankings, emit
from .mcmc import McmcConfig, McmcTrace, leap_and_shift_propose, mcmc_clicking, mcmc_rho
from .perms import (
    CapacityError,
    VSet,
    adjacent_swaps,
    enumerate_permutations,
    footrule_distance,
    ordering_of,
    perturbed_v_ranking,
    rank_of,
    ranking_of,
    v_set,
)
from .pseudo import (
    DEFAULT_ALPHA_GRID,
    PseudoConfig,
    estimate_alpha_full,
    estimate_rho_hat,
    exact_distribution,
    mean_pairwise_similarity,
    sample_rho,
    sample_rho_given_ordering,
    sample_rho_with_orderings,
)
from .simulate import make_dataset, sample_mallows

__version__ = "0.1.0"
