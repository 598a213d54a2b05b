"""Recursive sample-and-prune search for candidate means under fixed
variances and weights.

Starting from the full instance, the search alternates two moves:

* sampling: draw a uniform multiset from the remaining points, enumerate its
  subset means, and recurse with one more mean fixed for each of them;
* pruning: discard the half of the remaining points best explained by the
  components fixed so far, and recurse on the survivors.

Every completed branch contributes one candidate mean tuple; the result is
the candidate whose mixture (with the fixed shape) scores best on the whole
instance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import BudgetExceededError
from .model import (
    PointSet,
    SphericalComponent,
    SphericalMixture,
    weighted_point_costs,
)
from .sampling import subset_means


@dataclass(frozen=True)
class FixedShape:
    """The non-mean parameters a search run commits to: one variance and one
    weight per component, weights summing to one."""

    variances: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.variances, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if v.size != w.size:
            raise ValueError("variances and weights must have equal length")
        if np.any(v <= 0.0) or np.any(w <= 0.0):
            raise ValueError("variances and weights must be positive")
        if abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
        v = v.copy()
        w = w.copy()
        v.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "variances", v)
        object.__setattr__(self, "weights", w)

    @property
    def k(self) -> int:
        return self.variances.size


@dataclass
class AbsConfig:
    """Search parameters.

    alpha defaults to epsilon / (16 k^2), which makes the analysis factor
    (1 + 8*alpha*k^2) equal exactly 1 + epsilon/2.  Desk-scale runs override
    alpha (up to 1/(2k)) along with the sample sizes and rely on measured
    success rates instead of worst-case constants.
    """

    epsilon: float
    delta: float
    alpha: float | None = None
    sample_size: int | None = None
    subset_size: int | None = None
    max_candidates: int = 100_000
    max_nodes: int = 100_000
    seed: int | None = None

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if not (0.0 < self.delta < 1.0):
            raise ValueError("delta must be in (0, 1)")
        if self.alpha is not None and not (0.0 < self.alpha <= 1.0):
            raise ValueError("alpha must be in (0, 1]")

    def resolved_alpha(self, k: int) -> float:
        if self.alpha is not None:
            return self.alpha
        return min(1.0, self.epsilon / (16.0 * k * k))

    def resolved_subset_size(self) -> int:
        if self.subset_size is not None:
            if self.subset_size < 1:
                raise ValueError("subset_size must be >= 1")
            return self.subset_size
        return math.ceil(1.0 / (self.epsilon * self.delta))

    def resolved_sample_size(self, k: int) -> int:
        if self.sample_size is not None:
            if self.sample_size < 1:
                raise ValueError("sample_size must be >= 1")
            return self.sample_size
        # The guarantee requires 2/(alpha*eps*delta) draws.
        return math.ceil(
            2.0 / (self.resolved_alpha(k) * self.epsilon * self.delta)
        )


def prune_half(points, fixed: Sequence[SphericalComponent]) -> np.ndarray:
    """Indices (in input order) surviving removal of the floor(n/2) points
    with the smallest minimum cost under the fixed components.

    Cost ties are broken by input index: lower indices are pruned first.
    """
    if len(fixed) < 1:
        raise ValueError("pruning needs at least one fixed component")
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    n = arr.shape[0]
    costs = weighted_point_costs(
        arr,
        [c.weight for c in fixed],
        np.stack([c.mean for c in fixed]),
        [c.variance for c in fixed],
    ).min(axis=1)
    drop = n // 2
    order = np.lexsort((np.arange(n), costs))
    survivors = np.sort(order[drop:])
    return survivors


@dataclass
class _SearchState:
    points: np.ndarray
    k: int
    shape: FixedShape
    sample_size: int
    subset_size: int
    max_candidates: int
    max_nodes: int
    rng: np.random.Generator
    candidates: list[np.ndarray] = field(default_factory=list)
    nodes: int = 0


def _fixed_components(shape: FixedShape, prefix: list[np.ndarray]):
    return [
        SphericalComponent(float(shape.weights[i]), prefix[i], float(shape.variances[i]))
        for i in range(len(prefix))
    ]


def _emit(state: _SearchState, means: list[np.ndarray]) -> None:
    if len(state.candidates) >= state.max_candidates:
        raise BudgetExceededError(
            f"candidate mean tuples exceed the cap of {state.max_candidates}",
            requested=len(state.candidates) + 1,
            cap=state.max_candidates,
        )
    if means:
        state.candidates.append(np.stack(means))
    else:
        state.candidates.append(np.empty((0, state.points.shape[1])))


def _recurse(state: _SearchState, remaining: np.ndarray, level: int,
             prefix: list[np.ndarray]) -> None:
    state.nodes += 1
    if state.nodes > state.max_nodes:
        raise BudgetExceededError(
            f"search tree exceeds the node cap of {state.max_nodes}",
            requested=state.nodes,
            cap=state.max_nodes,
        )
    if level == 0:
        _emit(state, prefix)
        return
    if level >= remaining.size:
        # Too few points left to keep sampling: every remaining point
        # becomes a mean, completing the branch (possibly short).
        tail = [state.points[i] for i in remaining]
        _emit(state, prefix + tail)
        return

    draws = state.rng.integers(0, remaining.size, size=state.sample_size)
    sample = state.points[remaining[draws]]
    t = subset_means(sample, state.subset_size, dedup=True)
    for row in t:
        _recurse(state, remaining, level - 1, prefix + [row])

    if prefix:
        survivors = prune_half(
            state.points[remaining], _fixed_components(state.shape, prefix)
        )
        _recurse(state, remaining[survivors], level, prefix)


def enumerate_mean_candidates(
    ps: PointSet,
    k: int,
    shape: FixedShape,
    cfg: AbsConfig,
    rng: np.random.Generator | None = None,
) -> tuple[list[np.ndarray], dict]:
    """All candidate mean tuples the search produces, deduplicated, with a
    stats dict (nodes visited, raw and distinct candidate counts)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if shape.k != k:
        raise ValueError(f"shape has {shape.k} entries, expected {k}")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    state = _SearchState(
        points=ps.points,
        k=k,
        shape=shape,
        sample_size=cfg.resolved_sample_size(k),
        subset_size=cfg.resolved_subset_size(),
        max_candidates=cfg.max_candidates,
        max_nodes=cfg.max_nodes,
        rng=rng,
    )
    _recurse(state, np.arange(ps.n), k, [])
    raw = len(state.candidates)
    seen: set[bytes] = set()
    unique: list[np.ndarray] = []
    for cand in state.candidates:
        key = cand.shape[0].to_bytes(4, "little") + cand.tobytes()
        if key not in seen:
            seen.add(key)
            unique.append(cand)
    stats = {"nodes": state.nodes, "raw_candidates": raw,
             "candidates": len(unique)}
    return unique, stats


def score_candidate(ps: PointSet, means: np.ndarray, shape: FixedShape) -> float:
    """Objective of a (possibly short) candidate: each point charged to its
    cheapest component among the first len(means) shape entries, with the
    shape's weights taken as-is."""
    kc = means.shape[0]
    if kc == 0:
        return math.inf
    costs = weighted_point_costs(
        ps.points, shape.weights[:kc], means, shape.variances[:kc]
    )
    return float(costs.min(axis=1).sum())


def candidate_mixture(means: np.ndarray, shape: FixedShape) -> SphericalMixture:
    """Mixture for a candidate tuple.  Short tuples (points ran out during
    the search) renormalize the truncated weights, which can only lower the
    weight penalty relative to the internal score."""
    kc = means.shape[0]
    w = np.asarray(shape.weights[:kc], dtype=float)
    w = w / w.sum()
    return SphericalMixture.from_arrays(w, means, shape.variances[:kc])


def abs_search(
    ps: PointSet,
    k: int,
    shape: FixedShape,
    cfg: AbsConfig,
    rng: np.random.Generator | None = None,
) -> SphericalMixture:
    """Run the search and return the best-scoring candidate as a mixture.

    The returned mixture minimizes the whole-instance objective over every
    enumerated candidate; ties keep the first candidate in enumeration
    order.
    """
    candidates, _ = enumerate_mean_candidates(ps, k, shape, cfg, rng)
    best_means = None
    best_score = math.inf
    for cand in candidates:
        score = score_candidate(ps, cand, shape)
        if score < best_score:
            best_score = score
            best_means = cand
    if best_means is None or best_means.shape[0] == 0:
        raise ValueError("search produced no usable candidate")
    return candidate_mixture(best_means, shape)
