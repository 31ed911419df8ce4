"""Preference learning from binary click data.

Clicked items are assumed ranked above unclicked ones, so each user's
latent ranking factorizes into two within-group sequential samplers around
the group-restricted consensus. The alternating loop draws all user
rankings given the current consensus, then one consensus sample given the
augmented rankings, and repeats.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .data import ClickDataset, RankCountMatrix, RankingDataset, SampleSet
from .perms import as_ranking, rank_of, v_set
from .pseudo import PseudoConfig, _rank_rows, _sample_v_members, _sequential_draws


class Recommendation(NamedTuple):
    item: int  # 1-based item index
    probability: float


@dataclass(frozen=True)
class TruncatedPoisson:
    """Poisson click-count model restricted to [low, high] by rejection."""

    mean: float
    low: int = 1
    high: int | None = None

    def sample(self, rng, size: int) -> np.ndarray:
        return _rejection_counts(lambda s: rng.poisson(self.mean, s), self.low, self.high, size)


@dataclass(frozen=True)
class TruncatedExponential:
    """Exponential click-count model; draws are rounded to integers, then
    restricted to [low, high] by rejection."""

    mean: float
    low: int = 1
    high: int | None = None

    def sample(self, rng, size: int) -> np.ndarray:
        draw = lambda s: np.rint(rng.exponential(self.mean, s)).astype(np.int64)
        return _rejection_counts(draw, self.low, self.high, size)


def _rejection_counts(draw, low, high, size, max_rounds: int = 1000) -> np.ndarray:
    out = np.empty(size, dtype=np.int64)
    filled = 0
    for _ in range(max_rounds):
        cand = np.asarray(draw(max(size - filled, 16)), dtype=np.int64)
        ok = cand >= low
        if high is not None:
            ok &= cand <= high
        cand = cand[ok][: size - filled]
        out[filled : filled + cand.size] = cand
        filled += cand.size
        if filled == size:
            return out
    raise ValueError(f"truncation bounds [{low}, {high}] reject essentially all draws")


def in_compatible_set(ranking, clicks_row) -> bool:
    """True when every clicked item outranks every unclicked item."""
    r = np.asarray(ranking, dtype=np.int64)
    b = np.asarray(clicks_row, dtype=np.int64)
    c = int(b.sum())
    return bool((r[b == 1] <= c).all() and (r[b == 0] >= c + 1).all())


def click_frequency_ranking(clicks: ClickDataset) -> np.ndarray:
    """Items ranked by descending click frequency, ties by item index.

    The most-clicked item gets rank 1, consistent with clicked items being
    the preferred ones.
    """
    freq = clicks.clicks.sum(axis=0).astype(np.float64)
    return rank_of(-freq)


def _row_group_ranks(rho: np.ndarray, groups: np.ndarray) -> np.ndarray:
    """Within-group rank of every item per user row (garbage outside group)."""
    big = 2 * rho.size
    key = rho[None, :] + (1 - groups) * big
    return _rank_rows(key.astype(np.float64))


def _sequential_group_draws(targets, group_mask, scale, rng) -> np.ndarray:
    """Sample within-group ranks for all users at once.

    ``targets[j, i]`` is the group-restricted consensus rank of item i for
    user j; items outside ``group_mask`` are ignored. Returns within-group
    ranks in 1..group_size, 0 elsewhere.
    """
    n_users, n = targets.shape
    sizes = group_mask.sum(axis=1)
    out = np.zeros((n_users, n), dtype=np.int64)
    if n_users == 0 or sizes.max(initial=0) == 0:
        return out
    keys = np.where(group_mask, rng.random((n_users, n)), np.inf)
    seq = np.argsort(keys, axis=1, kind="stable")  # group items first, random order
    avail = np.arange(1, n + 1)[None, :] <= sizes[:, None]
    ranks = np.arange(1, n + 1)
    for s in range(int(sizes.max())):
        idx = np.flatnonzero(sizes > s)
        items = seq[idx, s]
        tgt = targets[idx, items]
        lw = -scale * np.abs(tgt[:, None] - ranks[None, :]).astype(np.float64)
        lw = np.where(avail[idx], lw, -np.inf)
        lw -= lw.max(axis=1, keepdims=True)
        w = np.exp(lw)
        cum = np.cumsum(w, axis=1)
        u = rng.random(idx.size) * cum[:, -1]
        chosen = np.minimum((cum <= u[:, None]).sum(axis=1), n - 1)
        bad = ~avail[idx, chosen]
        if bad.any():
            chosen[bad] = n - 1 - np.argmax(avail[idx][bad][:, ::-1], axis=1)
        out[idx, items] = chosen + 1
        avail[idx, chosen] = False
    return out


def sample_user_rankings(clicks: np.ndarray, alpha: float, rho, rng) -> np.ndarray:
    """Draw one compatible ranking per user given the consensus (vectorized).

    Within each group the factor weights use the global n in the exponent
    scale; unclicked within-group ranks are shifted up by the user's click
    count so clicked items occupy the top ranks.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    rho = as_ranking(rho)
    b = np.asarray(clicks, dtype=np.int64)
    if b.ndim == 1:
        b = b[None, :]
    n = rho.size
    scale = alpha / n
    c = b.sum(axis=1)
    tau_clicked = _row_group_ranks(rho, b)
    tau_unclicked = _row_group_ranks(rho, 1 - b)
    within_c = _sequential_group_draws(tau_clicked, b == 1, scale, rng)
    within_u = _sequential_group_draws(tau_unclicked, b == 0, scale, rng)
    return np.where(b == 1, within_c, within_u + c[:, None])


def sample_user_ranking(clicks_row, alpha: float, rho, rng) -> np.ndarray:
    """Single-user version of :func:`sample_user_rankings`."""
    b = np.asarray(clicks_row, dtype=np.int64)
    return sample_user_rankings(b[None, :], alpha, rho, rng)[0]


def pseudo_clicking(clicks: ClickDataset, cfg: PseudoConfig, warmup: int = 10):
    """Alternating sampler for click data.

    Starts the consensus at the descending click-frequency ranking, then per
    iteration (i) samples every user's ranking given the current consensus
    and (ii) draws one consensus sample treating the augmented rankings as
    complete data, with a sigma-perturbed V-set ordering around the rank of
    the current mean rankings. The first ``warmup`` iterations are
    discarded. Returns the consensus SampleSet and the per-user ranking
    draws with shape (n_samples, N, n).
    """
    if warmup < 0:
        raise ValueError("warmup must be nonnegative")
    b = clicks.clicks
    n_users, n = b.shape
    rng = np.random.default_rng(cfg.seed)
    rho = click_frequency_ranking(clicks)
    scale = cfg.alpha / n
    rho_keep = np.empty((cfg.n_samples, n), dtype=np.int64)
    user_keep = np.empty((cfg.n_samples, n_users, n), dtype=np.int64)
    start = time.perf_counter()
    for t in range(warmup + cfg.n_samples):
        R = sample_user_rankings(b, cfg.alpha, rho, rng)
        rho_hat = rank_of(R.mean(axis=0))
        v = _sample_v_members(v_set(rho_hat), 1, rng)
        if cfg.sigma > 0:
            v = _rank_rows(v + rng.normal(0.0, cfg.sigma, size=v.shape))
        ordering0 = np.argsort(v, axis=1, kind="stable")
        cost = RankCountMatrix(R).cost
        rho = _sequential_draws(-scale * cost, ordering0, rng)[0]
        if t >= warmup:
            rho_keep[t - warmup] = rho
            user_keep[t - warmup] = R
    wall = time.perf_counter() - start
    rho_samples = SampleSet(
        rho_keep, alpha=cfg.alpha, sigma=cfg.sigma, seed=cfg.seed, wall_clock=wall
    )
    return rho_samples, user_keep


def topk_probabilities(user_samples: np.ndarray, clicks_row, k: int) -> np.ndarray:
    """P(item ranked in the next-k window) per item, NaN for clicked items."""
    samples = np.asarray(user_samples, dtype=np.int64)
    b = np.asarray(clicks_row, dtype=np.int64)
    n = b.size
    c = int(b.sum())
    if not 1 <= k <= n - c:
        raise ValueError(f"k must be in [1, {n - c}] for this user")
    window = (samples >= c + 1) & (samples <= c + k)
    probs = window.mean(axis=0).astype(np.float64)
    probs[b == 1] = np.nan
    return probs


def recommend_topk(user_samples, clicks_row, k: int) -> list[Recommendation]:
    """The k unclicked items most likely to sit in the next-k rank window.

    Probabilities are the fraction of posterior samples placing the item in
    [c+1, c+k]; ties are broken by ascending item index.
    """
    samples = user_samples.samples if isinstance(user_samples, SampleSet) else user_samples
    b = np.asarray(clicks_row, dtype=np.int64)
    probs = topk_probabilities(samples, b, k)
    items = np.flatnonzero(b == 0)
    order = np.lexsort((items, -probs[items]))
    return [Recommendation(int(items[i]) + 1, float(probs[items[i]])) for i in order[:k]]


def binarize(data: RankingDataset, count_model, rng) -> ClickDataset:
    """Convert rankings to clicks: draw a click count per user from the count
    model and mark that user's top-ranked items as clicked."""
    n = data.n_items
    if count_model.low < 1 or (count_model.high is not None and count_model.high > n):
        raise ValueError(f"truncation bounds must sit inside [1, {n}]")
    if count_model.high is not None and count_model.low > count_model.high:
        raise ValueError("low exceeds high")
    rng = np.random.default_rng(rng)
    counts = count_model.sample(rng, data.n_users)
    counts = np.minimum(counts, n)
    clicks = (data.rankings <= counts[:, None]).astype(np.int64)
    return ClickDataset(clicks)


def binary_mean_similarity(clicks: ClickDataset | np.ndarray) -> float:
    """Mean pairwise cosine similarity between click vectors.

    Zero-click users carry no signal and are excluded from both the sum and
    the pair normalization.
    """
    b = clicks.clicks if isinstance(clicks, ClickDataset) else np.asarray(clicks)
    b = b[b.sum(axis=1) > 0].astype(np.float64)
    n_users = b.shape[0]
    if n_users < 2:
        raise ValueError("need at least two users with clicks")
    gram = b @ b.T
    norms = np.sqrt(np.diag(gram))
    sims = gram / np.outer(norms, norms)
    return float((sims.sum() - np.trace(sims)) / (n_users * (n_users - 1)))


def estimate_alpha_clicks(
    clicks: ClickDataset,
    alpha_grid,
    count_model=None,
    sim_users: int = 300,
    rng=None,
) -> float:
    """Grid alpha whose simulated binarized similarity best matches the data.

    Simulated Mallows datasets are binarized with ``count_model`` (default: a
    truncated Poisson with the observed mean click count) before computing
    the binary similarity statistic.
    """
    grid = [float(a) for a in alpha_grid]
    if not grid:
        raise ValueError("alpha grid is empty")
    rng = np.random.default_rng(rng)
    observed = binary_mean_similarity(clicks)
    n = clicks.n_items
    if count_model is None:
        counts = clicks.click_counts()
        counts = counts[counts > 0]
        count_model = TruncatedPoisson(mean=float(counts.mean()), low=1, high=n)
    from .simulate import make_dataset

    rho0 = np.arange(1, n + 1)
    simulated = []
    for a in grid:
        sim_data = make_dataset(rho0, a, sim_users, rng)
        sim_clicks = binarize(sim_data, count_model, rng)
        simulated.append(binary_mean_similarity(sim_clicks))
    return grid[int(np.argmin(np.abs(np.asarray(simulated) - observed)))]
