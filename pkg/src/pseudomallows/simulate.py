"""Synthetic Mallows data for experiments and estimator tuning.

Exact inverse-CDF sampling is used when the permutation space is small
enough to enumerate; otherwise a thinned Metropolis chain targeting the
single-center Mallows distribution supplies approximately independent
draws.
"""

from __future__ import annotations

import numpy as np

from .data import RankingDataset
from .exact import EXACT_CAP, mallows_distribution
from .mcmc import McmcConfig, _run_rho_chain
from .perms import as_ranking


def sample_mallows(
    rho0,
    alpha: float,
    size: int,
    rng,
    method: str = "auto",
    thin: int | None = None,
    burn_in: int | None = None,
    leap_size: int | None = None,
) -> np.ndarray:
    """Draw ``size`` rankings from Mallows(rho0, alpha) as a (size, n) array.

    ``method`` is "exact" (enumeration, n <= 8), "mcmc", or "auto". The MCMC
    route thins aggressively (default burn 60n, thin 3n) so that draws are
    close to independent; heavier thinning can be requested for stricter
    independence requirements.
    """
    rho0 = as_ranking(rho0)
    n = rho0.size
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if size < 1:
        raise ValueError("size must be >= 1")
    rng = np.random.default_rng(rng)
    if alpha == 0 or n == 1:
        keys = rng.random((size, n))
        return np.argsort(np.argsort(keys, axis=1), axis=1) + 1
    if method == "auto":
        method = "exact" if n <= EXACT_CAP else "mcmc"
    if method == "exact":
        dist = mallows_distribution(rho0, alpha)
        idx = rng.choice(len(dist.probs), size=size, p=dist.probs)
        return dist.support[idx]
    if method != "mcmc":
        raise ValueError(f"unknown method {method!r}")
    burn = 60 * n if burn_in is None else burn_in
    step = 3 * n if thin is None else thin
    leap = max(1, n // 5) if leap_size is None else leap_size
    cfg = McmcConfig(
        iterations=burn + size * step,
        leap_size=leap,
        thin=step,
        burn_in=burn,
        seed=None,
    )
    cost_rows = [[abs(int(r) - l) for l in range(1, n + 1)] for r in rho0]
    init = rng.permutation(n) + 1
    samples, _ = _run_rho_chain(cost_rows, alpha / n, n, cfg, rng, init)
    return samples


def make_dataset(rho0, alpha: float, n_users: int, rng, **kwargs) -> RankingDataset:
    """A RankingDataset of independent Mallows draws."""
    return RankingDataset(sample_mallows(rho0, alpha, n_users, rng, **kwargs))
