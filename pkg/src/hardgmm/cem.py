"""Classification-EM: alternate refitting parameters to the current partition
with reassigning points to their most likely component, until the objective
stops decreasing."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateClusterError
from .model import (
    HardPartition,
    PointSet,
    SphericalMixture,
    complete_nll,
    fit_params,
    induce_partition,
    validate_instance,
)

INIT_MODES = ("random-partition", "given-partition", "given-mixture")
DEGENERACY_POLICIES = ("abort", "reassign")


@dataclass
class CemConfig:
    max_iters: int = 200
    rel_tol: float = 1e-10
    init: str = "random-partition"
    degeneracy_policy: str = "abort"
    seed: int = 0
    strict: bool = False  # reject instances violating the separation restriction

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.rel_tol < 0.0:
            raise ValueError("rel_tol must be >= 0")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}, got {self.init!r}")
        if self.degeneracy_policy not in DEGENERACY_POLICIES:
            raise ValueError(
                f"degeneracy_policy must be one of {DEGENERACY_POLICIES},"
                f" got {self.degeneracy_policy!r}"
            )


@dataclass
class CemTrace:
    costs: list[float] = field(default_factory=list)
    iterations: int = 0
    terminated_by: str = "converged"
    repaired_rounds: list[int] = field(default_factory=list)


class CemDegeneracyError(DegenerateClusterError):
    """Raised under the abort policy when a reassignment empties a cluster."""

    def __init__(self, iteration: int, cluster: int):
        super().__init__(
            f"cluster {cluster} became degenerate at iteration {iteration}",
            cluster=cluster,
        )
        self.iteration = iteration


def _random_partition(n: int, k: int, rng: np.random.Generator) -> HardPartition:
    # Shuffle, then deal round-robin: every cluster starts with >= floor(n/k).
    order = rng.permutation(n)
    labels = np.empty(n, dtype=int)
    labels[order] = np.arange(n) % k
    return HardPartition(labels, k)


def _deficient_clusters(ps: PointSet, labels: np.ndarray, k: int) -> list[int]:
    bad = []
    for c in range(k):
        idx = np.flatnonzero(labels == c)
        if idx.size < 2:
            bad.append(c)
            continue
        pts = ps.points[idx]
        if np.all(pts == pts[0]):
            bad.append(c)
    return bad


def _repair(
    ps: PointSet,
    labels: np.ndarray,
    k: int,
    means: np.ndarray,
    iteration: int,
    policy: str,
) -> tuple[np.ndarray, int]:
    """Move far points into deficient clusters until all are viable.

    The donor is always the point with maximum distance to its own current
    center, excluding points already in the cluster under repair.
    """
    labels = labels.copy()
    repairs = 0
    for _ in range(ps.n):
        bad = _deficient_clusters(ps, labels, k)
        if not bad:
            return labels, repairs
        target = bad[0]
        if policy == "abort":
            raise CemDegeneracyError(iteration, target)
        dist = np.linalg.norm(ps.points - means[labels], axis=1)
        dist[labels == target] = -np.inf
        # Prefer donors whose cluster survives the donation; otherwise a
        # pair of two-point clusters can trade the same point forever.
        sizes = np.bincount(labels, minlength=k)
        preferred = dist.copy()
        preferred[sizes[labels] < 3] = -np.inf
        pool = preferred if preferred.max() > -np.inf else dist
        if pool.max() == -np.inf:
            break
        labels[int(np.argmax(pool))] = target
        repairs += 1
    raise CemDegeneracyError(iteration, _deficient_clusters(ps, labels, k)[0])


def cem_run(
    ps: PointSet,
    k: int,
    cfg: CemConfig,
    init_partition: HardPartition | None = None,
    init_mixture: SphericalMixture | None = None,
) -> tuple[SphericalMixture, HardPartition, CemTrace]:
    """Run CEM until the labels stabilize or the objective stops decreasing.

    Returns the final (mixture, partition) pair and a trace holding the
    objective after every full refit/reassign round.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if ps.n < 2 * k:
        raise ValueError(f"need at least {2 * k} points for k={k}, got {ps.n}")
    if cfg.strict and not validate_instance(ps).well_defined:
        raise ValueError("instance violates the minimum-separation restriction")

    rng = np.random.default_rng(cfg.seed)
    if cfg.init == "random-partition":
        part = _random_partition(ps.n, k, rng)
    elif cfg.init == "given-partition":
        if init_partition is None:
            raise ValueError("init='given-partition' requires init_partition")
        if init_partition.k != k or init_partition.n != ps.n:
            raise ValueError("init_partition does not match the instance and k")
        part = init_partition
    else:
        if init_mixture is None:
            raise ValueError("init='given-mixture' requires init_mixture")
        if init_mixture.k != k:
            raise ValueError(f"init_mixture has k={init_mixture.k}, expected {k}")
        part = induce_partition(ps, init_mixture)

    trace = CemTrace()
    labels = np.asarray(part.labels).copy()
    prev_cost = None

    for it in range(1, cfg.max_iters + 1):
        # refit parameters, guarding against a degenerate incoming partition
        bad = _deficient_clusters(ps, labels, k)
        if bad:
            if cfg.degeneracy_policy == "abort":
                raise CemDegeneracyError(it, bad[0])
            means = _safe_means(ps, labels, k)
            labels, _ = _repair(ps, labels, k, means, it, cfg.degeneracy_policy)
            trace.repaired_rounds.append(it)
        mixture = fit_params(ps, HardPartition(labels, k))

        new_labels = np.asarray(induce_partition(ps, mixture).labels)

        repaired = False
        if _deficient_clusters(ps, new_labels, k):
            if cfg.degeneracy_policy == "abort":
                trace.iterations = it
                trace.terminated_by = "degeneracy"
                raise CemDegeneracyError(
                    it, _deficient_clusters(ps, new_labels, k)[0]
                )
            new_labels, _ = _repair(
                ps, new_labels, k, mixture.means, it, cfg.degeneracy_policy
            )
            mixture = fit_params(ps, HardPartition(new_labels, k))
            repaired = True
            trace.repaired_rounds.append(it)

        cost = complete_nll(ps, HardPartition(new_labels, k), mixture).total
        trace.costs.append(cost)
        trace.iterations = it

        labels_stable = np.array_equal(new_labels, labels) and not repaired
        small_step = (
            prev_cost is not None
            and prev_cost - cost < cfg.rel_tol * abs(cost)
            and not repaired
        )
        labels = new_labels
        if labels_stable or small_step:
            trace.terminated_by = "converged"
            break
        prev_cost = cost
    else:
        trace.terminated_by = "max_iters"

    final_part = HardPartition(labels, k)
    return fit_params(ps, final_part), final_part, trace


def _safe_means(ps: PointSet, labels: np.ndarray, k: int) -> np.ndarray:
    means = np.zeros((k, ps.dim))
    for c in range(k):
        idx = np.flatnonzero(labels == c)
        if idx.size:
            means[c] = ps.points[idx].mean(axis=0)
    return means


def cem_best_of(
    ps: PointSet, k: int, cfg: CemConfig, restarts: int
) -> tuple[SphericalMixture, HardPartition, CemTrace, list[float]]:
    """Best of several independent runs; stream i uses seed + i.

    Ties are broken by restart index, so results do not depend on evaluation
    order.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    best = None
    per_restart: list[float] = []
    for i in range(restarts):
        run_cfg = CemConfig(
            max_iters=cfg.max_iters,
            rel_tol=cfg.rel_tol,
            init=cfg.init,
            degeneracy_policy=cfg.degeneracy_policy,
            seed=cfg.seed + i,
            strict=cfg.strict,
        )
        try:
            mixture, part, trace = cem_run(ps, k, run_cfg)
        except CemDegeneracyError:
            per_restart.append(float("nan"))
            continue
        cost = trace.costs[-1]
        per_restart.append(cost)
        if best is None or cost < best[0]:
            best = (cost, i, mixture, part, trace)
    if best is None:
        raise CemDegeneracyError(0, 0)
    _, _, mixture, part, trace = best
    return mixture, part, trace, per_restart
