"""Superset sampling for candidate means.

Draw a uniform multiset large enough that some fixed-size subset has a mean
close to the mean of any sufficiently heavy hidden cluster, then enumerate
all subset means.  Crossing one such candidate list per cluster yields a set
of K-tuples that contains a good mean tuple with constant probability per
round.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .model import PointSet, _as_points

def round_success_probability(delta: float) -> float:
    """Per-round success probability of the sampling guarantee, (1 - delta)/5."""
    return (1.0 - delta) / 5.0


@dataclass
class SamplingConfig:
    """Parameters of the sampling scheme.

    alpha is the assumed minimum cluster mass.  The defaults are the sizes
    required by the sampling guarantee, subset_size = ceil(1/(eps*delta))
    and sample_size = ceil(2/(alpha*eps*delta)); both may be overridden for
    desk-scale runs where the guarantee is checked statistically instead.
    """

    alpha: float
    epsilon: float
    delta: float
    subset_size: int | None = None
    sample_size: int | None = None
    repeats: int | None = None
    dedup: bool = True
    max_subset_combinations: int = 200_000
    max_product_size: int = 2_000_000
    max_repeats: int = 32

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.resolved_subset_size() > self.resolved_sample_size():
            raise ValueError("subset_size must not exceed sample_size")

    def resolved_subset_size(self) -> int:
        if self.subset_size is not None:
            if self.subset_size < 1:
                raise ValueError("subset_size must be >= 1")
            return self.subset_size
        return math.ceil(1.0 / (self.epsilon * self.delta))

    def resolved_sample_size(self) -> int:
        if self.sample_size is not None:
            if self.sample_size < 1:
                raise ValueError("sample_size must be >= 1")
            return self.sample_size
        # The guarantee needs 2/(alpha*eps*delta) draws; the looser 1/(...)
        # sometimes quoted is not enough for the proof, so the larger size
        # is the default.
        return math.ceil(2.0 / (self.alpha * self.epsilon * self.delta))

    def resolved_repeats(self, k: int) -> int:
        if self.repeats is not None:
            if self.repeats < 1:
                raise ValueError("repeats must be >= 1")
            return self.repeats
        p_round = round_success_probability(self.delta) ** k
        if p_round >= 1.0:
            return 1
        wanted = math.ceil(math.log(1.0 / self.delta) / -math.log1p(-p_round))
        return max(1, min(wanted, self.max_repeats))


@dataclass(frozen=True)
class MeanTupleSet:
    """Candidate K-tuples of means, stored as an (m, k, d) array."""

    tuples: np.ndarray
    repeats: int
    per_round_sizes: list[int]

    @property
    def count(self) -> int:
        return self.tuples.shape[0]


def sample_multiset(ps: PointSet, s: int, rng: np.random.Generator) -> np.ndarray:
    """s independent uniform draws with replacement, as an (s, d) array."""
    if s < 1:
        raise ValueError(f"sample size must be >= 1, got {s}")
    idx = rng.integers(0, ps.n, size=s)
    return ps.points[idx]


def subset_means(
    sample: np.ndarray,
    m: int,
    max_combinations: int = 200_000,
    dedup: bool = False,
) -> np.ndarray:
    """Means of all size-m index combinations of the sample.

    The sample is treated positionally, so repeated points produce repeated
    combinations; with dedup=True exactly-equal means are collapsed
    (first occurrence kept).
    """
    arr = _as_points(sample)
    s = arr.shape[0]
    if not (1 <= m <= s):
        raise ValueError(f"subset size must be in [1, {s}], got {m}")
    n_comb = math.comb(s, m)
    if n_comb > max_combinations:
        raise BudgetExceededError(
            f"C({s}, {m}) = {n_comb} subset means exceed the cap"
            f" of {max_combinations}",
            requested=n_comb,
            cap=max_combinations,
        )
    combos = np.array(list(itertools.combinations(range(s), m)), dtype=int)
    means = arr[combos].mean(axis=1)
    if dedup:
        means = _dedup_rows(means)
    return means


def _dedup_rows(arr: np.ndarray) -> np.ndarray:
    seen: set[bytes] = set()
    keep = []
    for i in range(arr.shape[0]):
        key = arr[i].tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return arr[keep]


def approx_means_product(
    ps: PointSet, k: int, cfg: SamplingConfig, rng: np.random.Generator
) -> MeanTupleSet:
    """Candidate mean tuples: per round, draw a fresh multiset, enumerate its
    subset means, and extend the Cartesian product; union over repeats.

    With the default sizes, each repeat contains a tuple within the sampling
    guarantee's distance of every true cluster mean with probability at
    least ((1 - delta) / 5)^k.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    s = cfg.resolved_sample_size()
    m = cfg.resolved_subset_size()
    repeats = cfg.resolved_repeats(k)

    all_tuples: list[np.ndarray] = []
    per_round_sizes: list[int] = []
    for _ in range(repeats):
        lists = []
        for _ in range(k):
            sample = sample_multiset(ps, s, rng)
            t = subset_means(
                sample, m, max_combinations=cfg.max_subset_combinations,
                dedup=cfg.dedup,
            )
            lists.append(t)
            per_round_sizes.append(t.shape[0])
        size = math.prod(t.shape[0] for t in lists)
        if size > cfg.max_product_size:
            raise BudgetExceededError(
                f"mean-tuple product of size {size} exceeds the cap"
                f" of {cfg.max_product_size}",
                requested=size,
                cap=cfg.max_product_size,
            )
        tuples = _cartesian_rows(lists)
        all_tuples.append(tuples)

    stacked = np.concatenate(all_tuples, axis=0)
    if cfg.dedup:
        flat = stacked.reshape(stacked.shape[0], -1)
        stacked = stacked[_dedup_row_indices(flat)]
    return MeanTupleSet(
        tuples=stacked, repeats=repeats, per_round_sizes=per_round_sizes
    )


def _dedup_row_indices(flat: np.ndarray) -> list[int]:
    seen: set[bytes] = set()
    keep = []
    for i in range(flat.shape[0]):
        key = flat[i].tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return keep


def _cartesian_rows(lists: list[np.ndarray]) -> np.ndarray:
    """Cartesian product of per-cluster candidate arrays, lexicographic in
    the input order, as an (m, k, d) array."""
    k = len(lists)
    d = lists[0].shape[1]
    sizes = [t.shape[0] for t in lists]
    total = math.prod(sizes)
    out = np.empty((total, k, d))
    grids = np.meshgrid(*[np.arange(n) for n in sizes], indexing="ij")
    for c in range(k):
        out[:, c, :] = lists[c][grids[c].reshape(-1)]
    return out
