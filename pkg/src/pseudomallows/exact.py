"""Exact enumeration oracle for the Mallows model (feasible for n <= 8).

This module is the ground truth the approximate samplers are tested
against: likelihood normalizer, posterior over the consensus, per-item
rank marginals, restricted medians, and the constrained L1 minimizer.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .data import RankCountMatrix, RankingDataset
from .perms import CapacityError, as_ranking, factorial, permutation_matrix

EXACT_CAP = 8  # 8! = 40320 permutations stays sub-second


def _check_cap(n: int, cap: int = EXACT_CAP) -> None:
    if n > cap:
        raise CapacityError(f"exact enumeration requires n <= {cap}, got {n}")


@dataclass(frozen=True)
class DiscreteDistribution:
    """A probability distribution over an explicit support of rankings."""

    support: np.ndarray  # (M, n) distinct rows
    probs: np.ndarray  # (M,) nonnegative, sums to 1

    def __post_init__(self):
        support = np.asarray(self.support, dtype=np.int64)
        probs = np.asarray(self.probs, dtype=np.float64)
        if support.ndim != 2 or probs.ndim != 1 or support.shape[0] != probs.size:
            raise ValueError("support and probs shapes are inconsistent")
        if (probs < 0).any():
            raise ValueError("probabilities must be nonnegative")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "probs", probs)

    @property
    def n_items(self) -> int:
        return self.support.shape[1]

    def prob_of(self, ranking) -> float:
        r = as_ranking(ranking)
        match = np.flatnonzero((self.support == r).all(axis=1))
        return float(self.probs[match[0]]) if match.size else 0.0


@lru_cache(maxsize=None)
def _distance_multiset(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Distinct footrule distances from any fixed reference, with counts."""
    perms = permutation_matrix(n)
    ident = np.arange(1, n + 1)
    dists = np.abs(perms - ident).sum(axis=1)
    return np.unique(dists, return_counts=True)


def log_partition(n: int, alpha: float) -> float:
    """log of the Mallows normalizing constant Z_n(alpha).

    The footrule distance is right-invariant, so the reference ranking is
    irrelevant and the sum collapses onto the cached distance multiset.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    _check_cap(n)
    values, counts = _distance_multiset(n)
    return float(logsumexp(-(alpha / n) * values, b=counts))


def _log_posterior_weights(rankings: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized log posterior weight of every rho in P_n."""
    n = rankings.shape[1]
    _check_cap(n)
    perms = permutation_matrix(n)
    # sum over users of |R^j_i - rho_i|, aggregated per (item, rank) first
    cost = RankCountMatrix(rankings).cost  # (n, n)
    total = cost[np.arange(n)[None, :], perms - 1].sum(axis=1)
    return perms, -(alpha / n) * total


def exact_posterior(data: RankingDataset | np.ndarray, alpha: float) -> DiscreteDistribution:
    """Posterior over the consensus under a uniform prior, by enumeration.

    With no users (or alpha = 0) this is the uniform distribution on P_n.
    """
    rankings = data.rankings if isinstance(data, RankingDataset) else np.asarray(data, dtype=np.int64)
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    n = rankings.shape[1]
    if rankings.shape[0] == 0:
        perms = permutation_matrix(n)
        _check_cap(n)
        return DiscreteDistribution(perms, np.full(len(perms), 1.0 / len(perms)))
    perms, logw = _log_posterior_weights(rankings, alpha)
    logw = logw - logsumexp(logw)
    return DiscreteDistribution(perms, np.exp(logw))


def log_evidence(data: RankingDataset | np.ndarray, alpha: float) -> float:
    """log Z_n(alpha, R^1..R^N): the log normalizer of the posterior."""
    rankings = data.rankings if isinstance(data, RankingDataset) else np.asarray(data, dtype=np.int64)
    _, logw = _log_posterior_weights(rankings, alpha)
    return float(logsumexp(logw))


def mallows_distribution(rho0, alpha: float) -> DiscreteDistribution:
    """The Mallows distribution centered at ``rho0``, by enumeration."""
    rho0 = as_ranking(rho0)
    return exact_posterior(rho0[None, :], alpha)


def marginal_rank_distribution(dist: DiscreteDistribution, item: int) -> np.ndarray:
    """P(rank of ``item`` = r) for r = 1..n under ``dist`` (item is 1-based)."""
    n = dist.n_items
    if not 1 <= item <= n:
        raise IndexError(f"item {item} out of range 1..{n}")
    out = np.zeros(n)
    np.add.at(out, dist.support[:, item - 1] - 1, dist.probs)
    return out


def marginal_profile_matrix(dist: DiscreteDistribution) -> np.ndarray:
    """All per-item rank marginals of ``dist`` as an (n, n) row-stochastic matrix."""
    n = dist.n_items
    out = np.zeros((n, n))
    for i in range(n):
        np.add.at(out[i], dist.support[:, i] - 1, dist.probs)
    return out


def marginal_expectation(rho0, alpha: float, item: int) -> float:
    """E[R_item] under Mallows(rho0, alpha)."""
    marg = marginal_rank_distribution(mallows_distribution(rho0, alpha), item)
    return float(marg @ np.arange(1, marg.size + 1))


def marginal_median(rho0, alpha: float, item: int, excluded=()) -> int:
    """Median of the Mallows marginal of ``item`` restricted to ranks not in
    ``excluded``: the smallest rank where the renormalized CDF reaches 1/2."""
    marg = marginal_rank_distribution(mallows_distribution(rho0, alpha), item)
    n = marg.size
    excluded = set(int(e) for e in excluded)
    admissible = [r for r in range(1, n + 1) if r not in excluded]
    if not admissible:
        raise ValueError("every rank is excluded; the restricted marginal is empty")
    weights = np.array([marg[r - 1] for r in admissible])
    cdf = np.cumsum(weights) / weights.sum()
    idx = int(np.searchsorted(cdf, 0.5))
    return admissible[min(idx, len(admissible) - 1)]


def constrained_l1_minimizer(data: RankingDataset | np.ndarray, item: int, excluded=()) -> int:
    """argmin over admissible ranks l of sum_j |R^j_item - l|, smallest l on ties."""
    rankings = data.rankings if isinstance(data, RankingDataset) else np.asarray(data, dtype=np.int64)
    n = rankings.shape[1]
    if not 1 <= item <= n:
        raise IndexError(f"item {item} out of range 1..{n}")
    excluded = set(int(e) for e in excluded)
    admissible = [l for l in range(1, n + 1) if l not in excluded]
    if not admissible:
        raise ValueError("no admissible rank remains")
    col = rankings[:, item - 1]
    costs = [int(np.abs(col - l).sum()) for l in admissible]
    return admissible[int(np.argmin(costs))]


def uniform_distribution(n: int) -> DiscreteDistribution:
    _check_cap(n)
    perms = permutation_matrix(n)
    return DiscreteDistribution(perms, np.full(len(perms), 1.0 / factorial(n)))
