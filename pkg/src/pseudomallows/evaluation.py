"""Approximation quality metrics and ordering-space search.

Marginal KL (the sum of per-item rank-marginal divergences) is the working
surrogate for the joint KL between the factorized sampler and the exact
posterior; the exact ELBO and joint KL are available at enumeration scale
to validate it. The ordering search relocates one item at a time, scores
candidates by marginal KL, and recombines the scores through a minimum
cost assignment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import logsumexp

from .data import RankCountMatrix, RankingDataset, SampleSet
from .exact import (
    DiscreteDistribution,
    exact_posterior,
    marginal_profile_matrix,
)
from .mcmc import McmcConfig, _apply_leap_shift, mcmc_rho
from .perms import CapacityError, as_ranking, ordering_of, permutation_matrix, v_set
from .pseudo import (
    PseudoConfig,
    _pm_log_components,
    exact_distribution,
    estimate_rho_hat,
    sample_rho,
    sample_rho_given_ordering,
)

EXACT_STUDY_CAP = 6  # the enumeration study costs n!^2 evaluations
ELBO_CAP = 7
EXACT_SEARCH_CAP = 5
SAMPLED_SEARCH_CAP = 15


@dataclass(frozen=True)
class MarginalProfile:
    """Per-item rank marginals as an (n, n) row-stochastic matrix."""

    matrix: np.ndarray
    source: str = "exact"

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("profile must be a square matrix")
        if np.abs(m.sum(axis=1) - 1.0).max() > 1e-9:
            raise ValueError("profile rows must sum to 1")
        object.__setattr__(self, "matrix", m)

    @property
    def n_items(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def from_distribution(cls, dist: DiscreteDistribution) -> "MarginalProfile":
        return cls(marginal_profile_matrix(dist), source="exact")

    def smooth(self, eps: float) -> "MarginalProfile":
        """Additively smoothed copy; use on an exact reference before
        comparing against empirical profiles of matching resolution."""
        if eps <= 0:
            raise ValueError("eps must be positive")
        m = self.matrix + eps
        return MarginalProfile(m / m.sum(axis=1, keepdims=True), source=self.source)

    @classmethod
    def from_samples(cls, samples, n_items: int | None = None, smoothing: float | None = None):
        """Empirical profile with additive smoothing (default 1/(2*draws)) so
        unvisited cells stay positive."""
        arr = samples.samples if isinstance(samples, SampleSet) else np.asarray(samples)
        arr = np.asarray(arr, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("samples must be (T, n)")
        t, n = arr.shape
        if n_items is not None and n_items != n:
            raise ValueError("n_items disagrees with the sample width")
        eps = 1.0 / (2.0 * t) if smoothing is None else float(smoothing)
        if eps <= 0:
            raise ValueError("smoothing must be positive for empirical profiles")
        counts = np.zeros((n, n))
        for i in range(n):
            counts[i] = np.bincount(arr[:, i] - 1, minlength=n)
        counts += eps
        return cls(counts / counts.sum(axis=1, keepdims=True), source=f"empirical({t})")


def marginal_kl(q: MarginalProfile, p: MarginalProfile) -> float:
    """Sum over items of KL(q_i || p_i) between per-item rank marginals."""
    qm, pm = q.matrix, p.matrix
    if qm.shape != pm.shape:
        raise ValueError(f"profile shapes differ: {qm.shape} vs {pm.shape}")
    active = qm > 0
    if (pm[active] <= 0).any():
        raise ValueError("q puts mass where p is zero; smooth p first")
    total = float(np.sum(qm[active] * (np.log(qm[active]) - np.log(pm[active]))))
    return max(total, 0.0)


def _pm_components(data, alpha: float, ordering):
    if isinstance(data, RankingDataset):
        cost = RankCountMatrix.from_dataset(data).cost
    else:
        cost = RankCountMatrix(np.asarray(data)).cost
    o = as_ranking(ordering, "ordering")
    return _pm_log_components(cost, alpha, o - 1)


def elbo_exact(data: RankingDataset, alpha: float, ordering) -> float:
    """Exact evidence lower bound of the factorized family at one ordering.

    Enumerates P_n, weighting each permutation's log step-normalizer by its
    factorized probability. Feasible for n <= 7.
    """
    n = data.n_items
    if n > ELBO_CAP:
        raise CapacityError(f"elbo_exact requires n <= {ELBO_CAP}")
    _, log_q, log_zpm, _ = _pm_components(data, alpha, ordering)
    q = np.exp(log_q)
    live = q > 0
    return float(np.sum(q[live] * log_zpm[live]))


def joint_kl_exact(data: RankingDataset, alpha: float, ordering) -> float:
    """KL between the factorized distribution and the exact posterior, by
    full enumeration of P_n."""
    n = data.n_items
    if n > ELBO_CAP:
        raise CapacityError(f"joint_kl_exact requires n <= {ELBO_CAP}")
    _, log_q, _, neg_log_target = _pm_components(data, alpha, ordering)
    log_p = -neg_log_target
    log_p = log_p - logsumexp(log_p)
    q = np.exp(log_q)
    live = q > 0
    return float(np.sum(q[live] * (log_q[live] - log_p[live])))


def posterior_profile(data: RankingDataset, alpha: float) -> MarginalProfile:
    """Exact posterior rank marginals (n <= 8)."""
    return MarginalProfile.from_distribution(exact_posterior(data, alpha))


def reference_profile(
    data: RankingDataset,
    alpha: float,
    rng=None,
    mcmc_iterations: int = 20000,
) -> MarginalProfile:
    """Posterior rank marginals to compare approximations against: exact at
    enumeration scale, otherwise estimated from a long chain."""
    if data.n_items <= EXACT_STUDY_CAP:
        return posterior_profile(data, alpha)
    rng = np.random.default_rng(rng)
    trace = mcmc_rho(
        data,
        alpha,
        McmcConfig(
            iterations=mcmc_iterations,
            burn_in=mcmc_iterations // 5,
            seed=int(rng.integers(2**63)),
        ),
    )
    return MarginalProfile.from_samples(trace.rho_samples)


def enumerate_ordering_study(
    data: RankingDataset,
    alpha: float,
    mode: str = "exact",
    draws: int = 200,
    rng=None,
):
    """Score every factorization ordering against the exact posterior.

    Returns [(ordering_ranking, marginal_kl), ...] over all of P_n sorted by
    ascending KL. ``mode="exact"`` evaluates the factorized marginals by
    enumeration (n <= 6); ``mode="sampled"`` estimates them from ``draws``
    samples per ordering with additive smoothing.
    """
    n = data.n_items
    if mode == "exact":
        if n > EXACT_STUDY_CAP:
            raise CapacityError(f"exact study requires n <= {EXACT_STUDY_CAP}")
    elif mode == "sampled":
        if n > EXACT_STUDY_CAP + 1:
            raise CapacityError(f"sampled study requires n <= {EXACT_STUDY_CAP + 1}")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    rng = np.random.default_rng(rng)
    reference = posterior_profile(data, alpha)
    if mode == "sampled":
        reference = reference.smooth(1.0 / (2.0 * draws))
    cost = RankCountMatrix.from_dataset(data)
    results = []
    for ranking in permutation_matrix(n):
        o = ordering_of(ranking)
        if mode == "exact":
            q = MarginalProfile.from_distribution(exact_distribution(cost, alpha, o))
        else:
            samples = sample_rho_given_ordering(cost, alpha, o, rng, size=draws)
            q = MarginalProfile.from_samples(samples)
        results.append((tuple(int(v) for v in ranking), marginal_kl(q, reference)))
    results.sort(key=lambda pair: pair[1])
    return results


def assignment_solve(cost) -> tuple[np.ndarray, float]:
    """Minimum-cost perfect matching on a square cost matrix.

    Returns (assignment, total) where ``assignment[row]`` is the 1-based
    column matched to each row. The optimal total is unique even when the
    matching is not; scipy's solver breaks ties deterministically.
    """
    c = np.asarray(cost, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("cost matrix must be square")
    if not np.isfinite(c).all():
        raise ValueError("cost matrix must be finite")
    rows, cols = linear_sum_assignment(c)
    assignment = np.empty(c.shape[0], dtype=np.int64)
    assignment[rows] = cols + 1
    return assignment, float(c[rows, cols].sum())


def ls_move(ranking, item: int, rank: int) -> np.ndarray:
    """Deterministically relocate ``item`` to ``rank``, shifting the items in
    between by one position."""
    r = as_ranking(ranking)
    n = r.size
    if not 1 <= item <= n:
        raise IndexError(f"item {item} out of range 1..{n}")
    if not 1 <= rank <= n:
        raise IndexError(f"rank {rank} out of range 1..{n}")
    return _apply_leap_shift(r, item - 1, rank)


@dataclass(frozen=True)
class SearchTrace:
    """Per-iteration record of the ordering search (row 0 is the start)."""

    rankings: np.ndarray  # (T+1, n) ordering-rankings
    kl_values: np.ndarray  # (T+1,)
    v_distances: np.ndarray  # (T+1,) footrule to nearest V-set member

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.kl_values))

    @property
    def best_ranking(self) -> np.ndarray:
        return self.rankings[self.best_index]

    @property
    def best_kl(self) -> float:
        return float(self.kl_values[self.best_index])

    @property
    def last_ranking(self) -> np.ndarray:
        return self.rankings[-1]


def iterative_search(
    data: RankingDataset,
    alpha: float,
    init,
    max_iters: int,
    eval_mode: str = "exact",
    draws: int = 200,
    reference: MarginalProfile | None = None,
    vset_base=None,
    rng=None,
    mcmc_reference_iterations: int = 20000,
) -> SearchTrace:
    """Assignment-driven search over factorization orderings.

    Each iteration relocates every (item, rank) pair with a deterministic
    leap-and-shift move, scores the candidate ordering by marginal KL
    against the reference posterior profile, converts the score differences
    into edge weights, and adopts the permutation solving the induced
    minimum-cost matching. The trace records the KL and the footrule
    distance to the nearest V-set member at every iterate; the search can
    wander after finding a good ordering, so consumers should read the
    best-so-far entry rather than the last one.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    n = data.n_items
    if eval_mode == "exact":
        if n > EXACT_SEARCH_CAP:
            raise CapacityError(f"exact search requires n <= {EXACT_SEARCH_CAP}")
    elif eval_mode == "sampled":
        if n > SAMPLED_SEARCH_CAP:
            raise CapacityError(f"sampled search requires n <= {SAMPLED_SEARCH_CAP}")
    else:
        raise ValueError(f"unknown eval_mode {eval_mode!r}")
    rng = np.random.default_rng(rng)
    incumbent = as_ranking(init).copy()
    if reference is None:
        reference = reference_profile(data, alpha, rng, mcmc_reference_iterations)
    vset = v_set(estimate_rho_hat(data) if vset_base is None else vset_base)
    cost_table = RankCountMatrix.from_dataset(data)

    def evaluate(ranking) -> float:
        o = ordering_of(ranking)
        if eval_mode == "exact":
            q = MarginalProfile.from_distribution(exact_distribution(cost_table, alpha, o))
        else:
            q = MarginalProfile.from_samples(
                sample_rho_given_ordering(cost_table, alpha, o, rng, size=draws)
            )
        return marginal_kl(q, reference)

    rankings = [incumbent.copy()]
    kls = [evaluate(incumbent)]
    v_dists = [vset.nearest_distance(incumbent)]
    for _ in range(max_iters):
        base_kl = kls[-1]
        weights = np.zeros((n, n))
        cache: dict[tuple[int, ...], float] = {tuple(incumbent): base_kl}
        for item in range(1, n + 1):
            current = int(incumbent[item - 1])
            for rank in range(1, n + 1):
                if rank == current:
                    continue
                cand = ls_move(incumbent, item, rank)
                key = tuple(cand)
                kl = cache.get(key)
                if kl is None:
                    kl = evaluate(cand)
                    cache[key] = kl
                weights[item - 1, rank - 1] = kl - base_kl
        incumbent, _ = assignment_solve(weights)
        rankings.append(incumbent.copy())
        kls.append(evaluate(incumbent))
        v_dists.append(vset.nearest_distance(incumbent))
    return SearchTrace(
        np.array(rankings, dtype=np.int64),
        np.array(kls, dtype=np.float64),
        np.array(v_dists, dtype=np.int64),
    )


def choose_sigma(
    data: RankingDataset,
    alpha: float,
    sigma_grid,
    reference: MarginalProfile,
    n_samples: int = 500,
    rng=None,
) -> float:
    """Grid-select the ordering jitter: smallest marginal KL wins, ties go to
    the smaller sigma."""
    grid = [float(s) for s in sigma_grid]
    if not grid:
        raise ValueError("sigma grid is empty")
    if any(s < 0 for s in grid):
        raise ValueError("sigma values must be nonnegative")
    rng = np.random.default_rng(rng)
    best_sigma, best_kl = None, np.inf
    for sigma in grid:
        cfg = PseudoConfig(
            alpha=alpha, sigma=sigma, n_samples=n_samples, seed=int(rng.integers(2**63))
        )
        profile = MarginalProfile.from_samples(sample_rho(data, cfg))
        kl = marginal_kl(profile, reference)
        if kl < best_kl or (kl == best_kl and best_sigma is not None and sigma < best_sigma):
            best_sigma, best_kl = sigma, kl
    return best_sigma


def default_sigma(
    data: RankingDataset,
    alpha: float,
    sigma_grid=(0.0, 1.0, 2.0, 3.0),
    n_samples: int = 300,
    reference: MarginalProfile | None = None,
    rng=None,
) -> float:
    """Jitter heuristic: 0 when the posterior is well determined (large alpha
    and many users), otherwise grid-selected against a reference profile."""
    if alpha >= 2.0 and data.n_users >= 500:
        return 0.0
    rng = np.random.default_rng(rng)
    if reference is None:
        reference = reference_profile(data, alpha, rng)
    return choose_sigma(data, alpha, sigma_grid, reference, n_samples=n_samples, rng=rng)
