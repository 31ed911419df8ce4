"""Dataset containers and the aggregated rank-cost table.

Everything here is immutable after construction and safe to share across
threads; samplers receive their own RNG streams.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .perms import as_ranking


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class RankingDataset:
    """N complete rankings of n items, one user per row, plus item labels."""

    rankings: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.asarray(self.rankings, dtype=np.int64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise ValueError("rankings must be a (N, n) array")
        for j, row in enumerate(arr):
            as_ranking(row, f"ranking row {j}")
        if self.labels is not None and len(self.labels) != arr.shape[1]:
            raise ValueError("label count does not match item count")
        object.__setattr__(self, "rankings", _frozen(arr))

    @property
    def n_users(self) -> int:
        return self.rankings.shape[0]

    @property
    def n_items(self) -> int:
        return self.rankings.shape[1]

    def item_labels(self) -> tuple[str, ...]:
        if self.labels is not None:
            return self.labels
        return tuple(f"item{i}" for i in range(1, self.n_items + 1))


@dataclass(frozen=True)
class ClickDataset:
    """N binary click vectors over n items; 1 means the user clicked the item."""

    clicks: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        arr = np.asarray(self.clicks, dtype=np.int64)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise ValueError("clicks must be a (N, n) array")
        if not np.isin(arr, (0, 1)).all():
            bad = int(np.argwhere(~np.isin(arr, (0, 1)))[0][0])
            raise ValueError(f"clicks row {bad} contains values outside {{0, 1}}")
        if self.labels is not None and len(self.labels) != arr.shape[1]:
            raise ValueError("label count does not match item count")
        object.__setattr__(self, "clicks", _frozen(arr))

    @property
    def n_users(self) -> int:
        return self.clicks.shape[0]

    @property
    def n_items(self) -> int:
        return self.clicks.shape[1]

    def click_counts(self) -> np.ndarray:
        """Number of clicked items per user."""
        return self.clicks.sum(axis=1)


@dataclass(frozen=True)
class SampleSet:
    """A sequence of ranking draws plus the settings that generated them."""

    samples: np.ndarray
    alpha: float
    sigma: float | None = None
    seed: int | None = None
    wall_clock: float = 0.0

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("samples must be a (T, n) array")
        object.__setattr__(self, "samples", _frozen(arr))

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_items(self) -> int:
        return self.samples.shape[1]


class RankCountMatrix:
    """Per-item rank counts with precomputed L1 cost sums.

    ``cost[i, l-1]`` equals ``sum_j |R^j_i - l|``; after the O(N*n) setup any
    sampler query is O(1), which makes per-sample work independent of the
    number of users.
    """

    def __init__(self, rankings: np.ndarray):
        arr = np.asarray(rankings, dtype=np.int64)
        if arr.ndim != 2:
            raise ValueError("expected a (N, n) ranking array")
        n_users, n = arr.shape
        counts = np.zeros((n, n), dtype=np.int64)
        for i in range(n):
            counts[i] = np.bincount(arr[:, i] - 1, minlength=n)
        ranks = np.arange(1, n + 1, dtype=np.int64)
        cum_c = np.cumsum(counts, axis=1)
        cum_w = np.cumsum(counts * ranks, axis=1)
        total_w = cum_w[:, -1:]
        # sum_j |r_j - l| split at l: l*C<= - W<= + (W> - l*C>)
        cost = (
            ranks * cum_c
            - cum_w
            + (total_w - cum_w)
            - ranks * (n_users - cum_c)
        )
        self.counts = _frozen(counts)
        self.cost = _frozen(cost)
        self.n_users = n_users
        self.n_items = n

    @classmethod
    def from_dataset(cls, data: RankingDataset) -> "RankCountMatrix":
        return cls(data.rankings)
