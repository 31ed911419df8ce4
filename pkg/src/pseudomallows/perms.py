"""Permutation primitives shared by every other module.

Conventions used throughout the package:

* A *ranking* is a permutation of ``{1, ..., n}`` stored as an integer
  vector; position ``i`` holds the rank of item ``i`` and rank 1 is the
  most preferred.
* An *ordering* is the inverse permutation; position ``m`` names the item
  holding rank ``m``.

All functions accept any integer sequence and return ``numpy`` arrays.
"""

from __future__ import annotations

import itertools
import math
from typing import Iterator, Sequence

import numpy as np

ENUMERATION_CAP = 10  # 10! = 3.6M permutations; beyond this refuse to enumerate


class CapacityError(ValueError):
    """Raised when an exact/enumeration routine is asked for an infeasible n."""


def as_ranking(r, name: str = "ranking") -> np.ndarray:
    """Validate and return ``r`` as a 1-based permutation array."""
    arr = np.asarray(r, dtype=np.int64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a nonempty 1-d integer sequence")
    n = arr.size
    seen = np.zeros(n, dtype=bool)
    for v in arr:
        if v < 1 or v > n or seen[v - 1]:
            raise ValueError(f"{name} is not a permutation of 1..{n}: {arr.tolist()}")
        seen[v - 1] = True
    return arr


def is_permutation(r) -> bool:
    arr = np.asarray(r)
    if arr.ndim != 1 or arr.size < 1:
        return False
    return np.array_equal(np.sort(arr), np.arange(1, arr.size + 1))


def footrule_distance(a, b) -> int:
    """L1 distance between two rank vectors of equal length."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"rank vectors differ in length: {a.shape} vs {b.shape}")
    return int(np.abs(a - b).sum())


def rank_of(x) -> np.ndarray:
    """Rank the entries of a real vector, smallest value getting rank 1.

    Exact ties are broken by ascending position index, so the output is
    always a valid ranking even for tied inputs:

        rank_of((0.3, 1.2, 0.7)) -> [1, 3, 2]
        rank_of((1.0, 1.0))      -> [1, 2]
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("rank_of expects a nonempty 1-d vector")
    if np.isnan(arr).any():
        raise ValueError("rank_of input contains NaN")
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(arr.size, dtype=np.int64)
    ranks[order] = np.arange(1, arr.size + 1)
    return ranks


def ordering_of(ranking) -> np.ndarray:
    """Invert a ranking: position m of the result names the item with rank m."""
    r = as_ranking(ranking)
    out = np.empty(r.size, dtype=np.int64)
    out[r - 1] = np.arange(1, r.size + 1)
    return out


def ranking_of(ordering) -> np.ndarray:
    """Invert an ordering back into a ranking (same inversion both ways)."""
    return ordering_of(ordering)


def enumerate_permutations(n: int) -> Iterator[tuple[int, ...]]:
    """Yield every permutation of ``{1, ..., n}`` once, in lexicographic order."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > ENUMERATION_CAP:
        raise CapacityError(f"refusing to enumerate {n}! permutations (cap n <= {ENUMERATION_CAP})")
    return itertools.permutations(range(1, n + 1))


_PERM_MATRIX_CACHE: dict[int, np.ndarray] = {}


def permutation_matrix(n: int) -> np.ndarray:
    """All of P_n as an ``(n!, n)`` read-only array, lexicographic row order."""
    mat = _PERM_MATRIX_CACHE.get(n)
    if mat is None:
        mat = np.array(list(enumerate_permutations(n)), dtype=np.int64)
        mat.setflags(write=False)
        _PERM_MATRIX_CACHE[n] = mat
    return mat


class VSet:
    """The set of rankings that put the middle item of a base ranking first
    and work outward to the extremes, one orientation coin per symmetric pair.

    Membership is encoded implicitly by the pair structure; the full set
    (size ``2^(m-1)`` for odd ``n = 2m-1``, ``2^m`` for even ``n = 2m``) is
    only materialized on demand via :meth:`members`.
    """

    def __init__(self, base):
        self.base = as_ranking(base, "base ranking")
        n = self.base.size
        o = ordering_of(self.base)  # 1-based items
        m = (n + 1) // 2
        self._middle_item: int | None = None
        pairs: list[tuple[int, int, int]] = []  # (item_low, item_high, low_rank)
        if n % 2 == 1:
            self._middle_item = int(o[m - 1])
            for k in range(1, m):
                pairs.append((int(o[m - k - 1]), int(o[m + k - 1]), 2 * k))
        else:
            for k in range(0, m):
                pairs.append((int(o[m - k - 1]), int(o[m + k]), 2 * k + 1))
        self._pairs = pairs

    @property
    def n(self) -> int:
        return self.base.size

    @property
    def size(self) -> int:
        return 2 ** len(self._pairs)

    def __len__(self) -> int:
        return self.size

    def _build(self, orientation: Sequence[int]) -> np.ndarray:
        v = np.empty(self.n, dtype=np.int64)
        if self._middle_item is not None:
            v[self._middle_item - 1] = 1
        for bit, (a, b, low) in zip(orientation, self._pairs):
            if bit:
                v[a - 1], v[b - 1] = low + 1, low
            else:
                v[a - 1], v[b - 1] = low, low + 1
        return v

    def members(self) -> Iterator[np.ndarray]:
        """Yield every member ranking (2^#pairs of them)."""
        for bits in itertools.product((0, 1), repeat=len(self._pairs)):
            yield self._build(bits)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Draw one member uniformly: each pair orientation is a fair coin."""
        bits = rng.integers(0, 2, size=len(self._pairs))
        return self._build(bits)

    def __contains__(self, candidate) -> bool:
        v = np.asarray(candidate, dtype=np.int64)
        if v.shape != self.base.shape:
            return False
        if self._middle_item is not None and v[self._middle_item - 1] != 1:
            return False
        for a, b, low in self._pairs:
            got = (int(v[a - 1]), int(v[b - 1]))
            if got not in ((low, low + 1), (low + 1, low)):
                return False
        return True

    def nearest_distance(self, candidate) -> int:
        """Footrule distance from ``candidate`` to the closest member.

        Pair orientations are independent, so the minimum decomposes into a
        per-pair choice; this is O(n) even though the set is exponential.
        """
        v = np.asarray(candidate, dtype=np.int64)
        if v.shape != self.base.shape:
            raise ValueError("candidate has the wrong length")
        total = 0
        if self._middle_item is not None:
            total += abs(int(v[self._middle_item - 1]) - 1)
        for a, b, low in self._pairs:
            va, vb = int(v[a - 1]), int(v[b - 1])
            keep = abs(va - low) + abs(vb - (low + 1))
            flip = abs(va - (low + 1)) + abs(vb - low)
            total += min(keep, flip)
        return total


def v_set(rho) -> VSet:
    """Construct the V-set of a ranking."""
    return VSet(rho)


def perturbed_v_ranking(rho_hat, sigma: float, rng: np.random.Generator) -> np.ndarray:
    """Draw a V-set member of ``rho_hat``, jitter each entry with Gaussian noise
    of standard deviation ``sigma``, and rank the result.

    ``sigma = 0`` returns a V-set member exactly.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be nonnegative, got {sigma}")
    v = v_set(rho_hat).sample(rng)
    if sigma == 0:
        return v
    return rank_of(v + rng.normal(0.0, sigma, size=v.size))


def adjacent_swaps(ranking, count: int, rng: np.random.Generator) -> np.ndarray:
    """Apply ``count`` random swaps of neighboring ranks to a ranking."""
    r = as_ranking(ranking).copy()
    n = r.size
    if n < 2:
        return r
    order = ordering_of(r)
    for _ in range(count):
        pos = int(rng.integers(0, n - 1))
        order[pos], order[pos + 1] = order[pos + 1], order[pos]
    return ranking_of(order)


def factorial(n: int) -> int:
    return math.factorial(n)
