"""Metropolis-Hastings baselines for the Mallows posterior.

``mcmc_rho`` targets the consensus posterior given complete rankings with a
leap-and-shift proposal; ``mcmc_clicking`` alternates per-user augmentation
updates (within-group rank swaps) with consensus updates for click data.
Both are the comparison arm in the timing and accuracy experiments.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .data import ClickDataset, RankCountMatrix, RankingDataset
from .perms import as_ranking, rank_of

_BLOCK = 1 << 15  # pre-drawn randomness block size for the hot loops


@dataclass(frozen=True)
class McmcConfig:
    iterations: int
    leap_size: int | None = None  # default max(1, n // 10), resolved at run time
    thin: int = 1
    burn_in: int = 0
    seed: int | None = None

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iterations must be positive")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if not 0 <= self.burn_in < self.iterations:
            raise ValueError("burn_in must satisfy 0 <= burn_in < iterations")
        if self.leap_size is not None and self.leap_size < 1:
            raise ValueError("leap_size must be positive")

    def resolved_leap(self, n: int) -> int:
        leap = self.leap_size if self.leap_size is not None else max(1, n // 10)
        if leap > max(1, (n - 1) // 2):
            raise ValueError(f"leap_size {leap} exceeds max(1, (n-1)//2) for n={n}")
        return leap


@dataclass(frozen=True)
class McmcTrace:
    rho_samples: np.ndarray  # (T, n)
    acceptance_rate: float
    wall_clock: float

    @property
    def n_samples(self) -> int:
        return self.rho_samples.shape[0]


def _window(pos: int, n: int, leap: int) -> int:
    """Number of admissible destinations around ``pos`` (the leap window minus pos)."""
    return min(n, pos + leap) - max(1, pos - leap)


def _apply_leap_shift(ranks: np.ndarray, item0: int, dest: int) -> np.ndarray:
    """Relocate 0-based ``item0`` to rank ``dest``, shifting intervening items by one."""
    out = ranks.copy()
    q = int(ranks[item0])
    if dest == q:
        return out
    if q < dest:
        sel = (ranks > q) & (ranks <= dest)
        out[sel] -= 1
    else:
        sel = (ranks >= dest) & (ranks < q)
        out[sel] += 1
    out[item0] = dest
    return out


def leap_and_shift_propose(rho, leap_size: int, rng: np.random.Generator):
    """One leap-and-shift proposal from ``rho``.

    Picks an item uniformly, draws a new rank uniformly within ``leap_size``
    of its current rank (excluding the current rank, clamped to [1, n]) and
    shifts the intervening items by one. Returns the proposal and the log
    proposal-density ratio log g(rho|rho') - log g(rho'|rho).

    A move of distance one is a swap of adjacent ranks, reachable by leaping
    either of the two items involved, and its forward and backward densities
    coincide; longer moves identify the leaped item uniquely and the ratio
    reduces to the ratio of window sizes.
    """
    ranks = as_ranking(rho)
    n = ranks.size
    if n == 1:
        raise ValueError("no proposal exists for a single item")
    if not 1 <= leap_size <= max(1, (n - 1) // 2):
        raise ValueError(f"leap_size must be in [1, {max(1, (n - 1) // 2)}] for n={n}")
    item0 = int(rng.integers(0, n))
    q = int(ranks[item0])
    lo = max(1, q - leap_size)
    w = _window(q, n, leap_size)
    dest = lo + int(rng.integers(0, w))
    if dest >= q:
        dest += 1
    proposal = _apply_leap_shift(ranks, item0, dest)
    if abs(dest - q) == 1:
        log_ratio = 0.0
    else:
        log_ratio = math.log(_window(q, n, leap_size)) - math.log(_window(dest, n, leap_size))
    return proposal, log_ratio


class _RandomBlocks:
    """Batched uniforms/integers so the chain loop avoids per-step RNG calls."""

    def __init__(self, rng: np.random.Generator, n: int):
        self.rng = rng
        self.n = n
        self._refill()

    def _refill(self):
        self.items = self.rng.integers(0, self.n, size=_BLOCK)
        self.dest = self.rng.random(_BLOCK)
        self.acc = self.rng.random(_BLOCK)
        self.pos = 0

    def next(self):
        if self.pos == _BLOCK:
            self._refill()
        p = self.pos
        self.pos = p + 1
        return int(self.items[p]), float(self.dest[p]), float(self.acc[p])


def _run_rho_chain(cost_rows, scale, n, cfg, rng, init_ranks):
    """Generic Metropolis chain on rankings with target exp(-scale * cost).

    ``cost_rows[i][l-1]`` must hold the target's additive cost of giving item
    ``i`` (0-based) rank ``l``; the chain state cost is the sum over items.
    """
    leap = cfg.resolved_leap(n)
    rho = list(init_ranks)  # item -> rank
    order = [0] * (n + 1)  # rank -> item
    for item0, rank in enumerate(rho):
        order[rank] = item0
    log_w = [0.0] * (n + 1)
    for pos in range(1, n + 1):
        log_w[pos] = math.log(_window(pos, n, leap))
    blocks = _RandomBlocks(rng, n)
    keep = []
    accepted = 0
    exp_, burn, thin = math.exp, cfg.burn_in, cfg.thin
    for it in range(1, cfg.iterations + 1):
        u, du, au = blocks.next()
        q = rho[u]
        lo = q - leap
        if lo < 1:
            lo = 1
        hi = q + leap
        if hi > n:
            hi = n
        r = lo + int(du * (hi - lo))
        if r >= q:
            r += 1
        crow = cost_rows[u]
        delta = crow[r - 1] - crow[q - 1]
        if q < r:
            for p in range(q + 1, r + 1):
                m = order[p]
                delta += cost_rows[m][p - 2] - cost_rows[m][p - 1]
        else:
            for p in range(r, q):
                m = order[p]
                delta += cost_rows[m][p] - cost_rows[m][p - 1]
        log_acc = -scale * delta
        if r - q > 1 or q - r > 1:
            log_acc += log_w[q] - log_w[r]
        if log_acc >= 0.0 or au < exp_(log_acc):
            accepted += 1
            if q < r:
                for p in range(q, r):
                    m = order[p + 1]
                    order[p] = m
                    rho[m] = p
            else:
                for p in range(q, r, -1):
                    m = order[p - 1]
                    order[p] = m
                    rho[m] = p
            order[r] = u
            rho[u] = r
        if it > burn and (it - burn) % thin == 0:
            keep.append(tuple(rho))
    return np.array(keep, dtype=np.int64), accepted / cfg.iterations


def mcmc_rho(data: RankingDataset, alpha: float, cfg: McmcConfig) -> McmcTrace:
    """Metropolis chain for the consensus posterior given complete rankings.

    The chain is deterministic given ``cfg.seed`` and starts from a random
    permutation drawn from the same stream.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive for inference")
    n = data.n_items
    rng = np.random.default_rng(cfg.seed)
    if n == 1:
        t = (cfg.iterations - cfg.burn_in) // cfg.thin
        return McmcTrace(np.ones((t, 1), dtype=np.int64), 1.0, 0.0)
    init = rng.permutation(n) + 1
    cost_rows = RankCountMatrix.from_dataset(data).cost.tolist()
    start = time.perf_counter()
    samples, rate = _run_rho_chain(cost_rows, alpha / n, n, cfg, rng, init)
    return McmcTrace(samples, rate, time.perf_counter() - start)


def _initial_augmented(clicks: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """A compatible ranking per user: within each group, follow ``rho``."""
    big = 2 * rho.size
    key = rho[None, :] + (1 - clicks) * big
    order = np.argsort(key, axis=1, kind="stable")
    out = np.empty_like(key)
    rows = np.arange(clicks.shape[0])[:, None]
    out[rows, order] = np.arange(1, rho.size + 1)[None, :]
    return out


def _padded_groups(clicks: np.ndarray):
    """Per-user 0-based item indices of each group, padded with -1."""
    n_users, n = clicks.shape
    c = clicks.sum(axis=1)
    max_c = int(c.max(initial=0))
    max_u = int((n - c).max(initial=0))
    clicked = np.full((n_users, max(max_c, 1)), -1, dtype=np.int64)
    unclicked = np.full((n_users, max(max_u, 1)), -1, dtype=np.int64)
    for j in range(n_users):
        idx = np.flatnonzero(clicks[j])
        clicked[j, : idx.size] = idx
        idx = np.flatnonzero(1 - clicks[j])
        unclicked[j, : idx.size] = idx
    return clicked, unclicked, c


def mcmc_clicking(clicks: ClickDataset, alpha: float, cfg: McmcConfig):
    """Two-step augmentation MCMC for click data.

    Each iteration performs (i) one within-group rank-swap Metropolis update
    per user, restricted to the compatible set of that user's clicks, and
    (ii) one leap-and-shift update of the consensus given the current
    augmented rankings. Returns the consensus trace and the per-user ranking
    trace with shape (T, N, n).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive for inference")
    B = clicks.clicks
    n_users, n = B.shape
    rng = np.random.default_rng(cfg.seed)
    freq = B.sum(axis=0)
    rho = rank_of(-freq.astype(np.float64))
    if n == 1:
        t = (cfg.iterations - cfg.burn_in) // cfg.thin
        return (
            McmcTrace(np.ones((t, 1), dtype=np.int64), 1.0, 0.0),
            np.ones((t, n_users, 1), dtype=np.int64),
        )
    R = _initial_augmented(B, rho)
    clicked_pad, unclicked_pad, c = _padded_groups(B)
    cc = n - c
    can_click = c >= 2
    can_unclick = cc >= 2
    any_group = can_click | can_unclick
    scale = alpha / n
    leap = cfg.resolved_leap(n)
    order = np.empty(n + 1, dtype=np.int64)
    order[rho] = np.arange(n)
    log_w = np.array([0.0] + [math.log(_window(p, n, leap)) for p in range(1, n + 1)])
    rows = np.arange(n_users)

    rho_keep = []
    user_keep = []
    accepted = 0
    start = time.perf_counter()
    for it in range(1, cfg.iterations + 1):
        # (i) per-user within-group swaps; independent across users given rho
        u_g, u_1, u_2, u_acc = rng.random((4, n_users))
        pick_clicked = np.where(can_click & can_unclick, u_g < 0.5, can_click)
        sizes = np.where(pick_clicked, c, cc)
        active = any_group
        safe = np.maximum(sizes, 2)
        i1 = np.minimum((u_1 * safe).astype(np.int64), safe - 1)
        i2 = np.minimum((u_2 * (safe - 1)).astype(np.int64), safe - 2)
        i2 = i2 + (i2 >= i1)
        pad_c = clicked_pad[rows, np.minimum(i1, clicked_pad.shape[1] - 1)]
        pad_u = unclicked_pad[rows, np.minimum(i1, unclicked_pad.shape[1] - 1)]
        a = np.where(pick_clicked, pad_c, pad_u)
        pad_c = clicked_pad[rows, np.minimum(i2, clicked_pad.shape[1] - 1)]
        pad_u = unclicked_pad[rows, np.minimum(i2, unclicked_pad.shape[1] - 1)]
        b = np.where(pick_clicked, pad_c, pad_u)
        a = np.where(active, a, 0)
        b = np.where(active, b, 0)
        ra, rb = R[rows, a], R[rows, b]
        old = np.abs(ra - rho[a]) + np.abs(rb - rho[b])
        new = np.abs(rb - rho[a]) + np.abs(ra - rho[b])
        accept = active & (u_acc < np.exp(np.minimum(-scale * (new - old), 0.0)))
        idx = np.flatnonzero(accept)
        if idx.size:
            ai, bi = a[idx], b[idx]
            tmp = R[idx, ai].copy()
            R[idx, ai] = R[idx, bi]
            R[idx, bi] = tmp

        # (ii) one leap-and-shift update of rho given the augmented rankings
        u0 = int(rng.integers(0, n))
        q = int(rho[u0])
        lo, hi = max(1, q - leap), min(n, q + leap)
        r = lo + int(rng.random() * (hi - lo))
        if r >= q:
            r += 1
        moved_items = [u0]
        new_ranks = [r]
        if q < r:
            for p in range(q + 1, r + 1):
                moved_items.append(int(order[p]))
                new_ranks.append(p - 1)
        else:
            for p in range(r, q):
                moved_items.append(int(order[p]))
                new_ranks.append(p + 1)
        delta = 0.0
        for m, nr in zip(moved_items, new_ranks):
            col = R[:, m]
            delta += np.abs(col - nr).sum() - np.abs(col - rho[m]).sum()
        log_acc = -scale * delta
        if abs(q - r) > 1:
            log_acc += log_w[q] - log_w[r]
        if log_acc >= 0.0 or rng.random() < math.exp(log_acc):
            accepted += 1
            for m, nr in zip(moved_items, new_ranks):
                rho[m] = nr
                order[nr] = m
        if it > cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            rho_keep.append(rho.copy())
            user_keep.append(R.copy())
    wall = time.perf_counter() - start
    trace = McmcTrace(
        np.array(rho_keep, dtype=np.int64).reshape(-1, n),
        accepted / cfg.iterations,
        wall,
    )
    user_traces = np.array(user_keep, dtype=np.int64).reshape(-1, n_users, n)
    return trace, user_traces
