"""Exact brute-force solvers for desk-scale verification.

Partitions are enumerated as restricted growth strings (blocks appear in
order of their smallest member), so each unordered partition is visited
exactly once.  Sizes and block counts are pruned during generation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import BudgetExceededError, DegenerateClusterError
from .model import (
    HardPartition,
    PointSet,
    SphericalComponent,
    SphericalMixture,
    opt_single,
    pairwise_sq_dists,
)

OBJECTIVES = ("cmle", "wkm", "ucmle")

DEFAULT_CAP = 14


@dataclass
class OracleResult:
    best_partition: HardPartition
    best_mixture: SphericalMixture
    opt: float
    partitions_scanned: int


@lru_cache(maxsize=None)
def count_partitions(n: int, k: int, min_size: int = 2) -> int:
    """Number of partitions of n labeled items into exactly k unlabeled
    blocks of at least min_size items, by dynamic programming."""
    if k == 0:
        return 1 if n == 0 else 0
    if n < k * min_size:
        return 0
    if min_size == 1:
        # Stirling numbers of the second kind.
        return k * count_partitions(n - 1, k, 1) + count_partitions(n - 1, k - 1, 1)
    if min_size == 2:
        # Place the last item: into one of k open blocks of a smaller
        # partition, or as a fresh pair with one of the other n-1 items.
        return k * count_partitions(n - 1, k, 2) + (n - 1) * count_partitions(
            n - 2, k - 1, 2
        )
    raise ValueError("only min_size 1 and 2 are supported")


def partition_labels(n: int, k: int, min_size: int = 2) -> Iterator[np.ndarray]:
    """Yield the label vector of every partition of range(n) into exactly k
    unlabeled blocks of at least min_size items."""
    labels = np.zeros(n, dtype=int)
    counts = [0] * k

    def rec(i: int, used: int):
        if i == n:
            if used == k and all(counts[b] >= min_size for b in range(k)):
                yield labels.copy()
            return
        remaining = n - i
        deficit = sum(max(0, min_size - counts[b]) for b in range(used))
        deficit += (k - used) * min_size
        if deficit > remaining:
            return
        for b in range(used):
            labels[i] = b
            counts[b] += 1
            yield from rec(i + 1, used)
            counts[b] -= 1
        if used < k:
            labels[i] = used
            counts[used] += 1
            yield from rec(i + 1, used + 1)
            counts[used] -= 1

    yield from rec(0, 0)


def _check_cap(ps: PointSet, cap: int, k: int, min_size: int) -> None:
    if ps.n > cap:
        estimate = count_partitions(ps.n, k, min_size)
        raise BudgetExceededError(
            f"n={ps.n} exceeds the oracle cap of {cap}"
            f" ({estimate} partitions would be scanned)",
            requested=ps.n,
            cap=cap,
        )


def _cluster_stats(points: np.ndarray, labels: np.ndarray, k: int):
    """Per-cluster (indices, mean, sum of squared deviations); None when a
    cluster has zero spread (identical points)."""
    out = []
    for c in range(k):
        idx = np.flatnonzero(labels == c)
        pts = points[idx]
        mu = pts.mean(axis=0)
        ss = float(np.sum((pts - mu) ** 2))
        out.append((idx, mu, ss))
    return out


def exact_solve(
    ps: PointSet,
    k: int,
    objective: str = "cmle",
    beta: float | None = None,
    cap: int = DEFAULT_CAP,
) -> OracleResult:
    """Scan every well-defined partition (all blocks >= 2 points) and return
    the best closed-form objective value.

    Partitions containing a zero-variance block are scanned but never
    scored; they fall outside the restricted search space.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}")
    if objective == "wkm":
        if beta is None or beta <= 0.0:
            raise ValueError("wkm needs a positive beta")
    if k < 1:
        raise ValueError("k must be >= 1")
    if 2 * k > ps.n:
        raise ValueError(
            f"no partition of {ps.n} points into {k} blocks of >= 2 exists"
        )
    _check_cap(ps, cap, k, 2)

    n, d = ps.n, ps.dim
    scanned = 0
    best: tuple[float, np.ndarray] | None = None
    for labels in partition_labels(n, k, min_size=2):
        scanned += 1
        stats = _cluster_stats(ps.points, labels, k)
        # Zero-spread blocks fall outside the restricted search space.
        if any(ss <= 0.0 for _, _, ss in stats):
            continue
        total = 0.0
        for idx, _, ss in stats:
            size = idx.size
            if objective == "cmle":
                v = ss / (size * d)
                total += (size * d / 2.0) * (math.log(2.0 * math.pi * v) + 1.0)
                total -= math.log(size / n) * size
            elif objective == "wkm":
                total += beta * ss - math.log(size / n) * size
            else:  # ucmle: uniform weights 1/k
                v = ss / (size * d)
                total += (size * d / 2.0) * (math.log(2.0 * math.pi * v) + 1.0)
                total += math.log(k) * size
        if best is None or total < best[0]:
            best = (total, labels)
    if best is None:
        raise DegenerateClusterError(
            "every partition has a zero-variance cluster; instance is degenerate"
        )

    opt, labels = best
    part = HardPartition(labels, k)
    comps = []
    for c in range(k):
        idx = part.cluster_indices(c)
        pts = ps.points[idx]
        mu = pts.mean(axis=0)
        ss = float(np.sum((pts - mu) ** 2))
        if objective == "cmle":
            comps.append(SphericalComponent(idx.size / n, mu, ss / (idx.size * d)))
        elif objective == "wkm":
            comps.append(SphericalComponent(idx.size / n, mu, 1.0 / (2.0 * beta)))
        else:
            comps.append(SphericalComponent(1.0 / k, mu, ss / (idx.size * d)))
    return OracleResult(
        best_partition=part,
        best_mixture=SphericalMixture(comps),
        opt=float(opt),
        partitions_scanned=scanned,
    )


def exact_opt_diam(ps: PointSet, k: int, cap: int = DEFAULT_CAP) -> float:
    """Minimum over all partitions into k non-empty blocks of the largest
    intra-block point distance."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > ps.n:
        raise ValueError(f"k={k} exceeds the number of points {ps.n}")
    _check_cap(ps, cap, k, 1)
    dist = np.sqrt(pairwise_sq_dists(ps.points, ps.points))
    best = math.inf
    for labels in partition_labels(ps.n, k, min_size=1):
        worst = 0.0
        for c in range(k):
            idx = np.flatnonzero(labels == c)
            if idx.size > 1:
                worst = max(worst, float(dist[np.ix_(idx, idx)].max()))
            if worst >= best:
                break
        best = min(best, worst)
    return best
