"""Core domain types and cost functions for hard-clustering spherical
Gaussian mixtures.

Everything here is a pure function of immutable values.  Costs are negative
log-likelihoods in nats (natural log throughout).  The per-point cost of a
weighted spherical component (w, mu, v) is

    (d/2) * ln(2*pi*v) + ||x - mu||^2 / (2*v) - ln(w)

and the full hard-assignment objective sums this over points with each point
charged to its assigned component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateClusterError

LOG_TWO_PI = math.log(2.0 * math.pi)

#: Lower bound on the variance of any >=2-point subset of an instance whose
#: pairwise squared distances are all >= 4d/pi.
VARIANCE_FLOOR = 1.0 / (2.0 * math.pi)


def separation_threshold(dim: int) -> float:
    """Minimum pairwise squared distance required of a well-defined instance."""
    return 4.0 * dim / math.pi


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"points must be a 2-d array, got shape {arr.shape}")
    return arr


def pairwise_sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """All squared Euclidean distances between rows of a and rows of b."""
    na = np.sum(a * a, axis=1)[:, None]
    nb = np.sum(b * b, axis=1)[None, :]
    d2 = na + nb - 2.0 * (a @ b.T)
    return np.maximum(d2, 0.0)


class PointSet:
    """Immutable finite set of observation vectors in R^d.

    One-dimensional input is promoted to an (n, 1) array for convenience.
    """

    def __init__(self, points):
        arr = _as_points(points).copy()
        if arr.shape[0] < 1:
            raise ValueError("a point set needs at least one point")
        if arr.shape[1] < 1:
            raise ValueError("points need at least one coordinate")
        if not np.all(np.isfinite(arr)):
            raise ValueError("points must have finite coordinates")
        arr.setflags(write=False)
        self.points = arr

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @cached_property
    def _pairwise_sq(self) -> np.ndarray:
        # Exact O(n^2) scan; instances are desk scale.
        return pairwise_sq_dists(self.points, self.points)

    @cached_property
    def min_sq_dist(self) -> float:
        """Smallest squared distance between two distinct points (inf if n == 1)."""
        if self.n == 1:
            return math.inf
        d2 = self._pairwise_sq.copy()
        np.fill_diagonal(d2, math.inf)
        return float(d2.min())

    @cached_property
    def max_sq_dist(self) -> float:
        """Largest pairwise squared distance (0 if n == 1)."""
        if self.n == 1:
            return 0.0
        return float(self._pairwise_sq.max())

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"PointSet(n={self.n}, dim={self.dim})"


class HardPartition:
    """Assignment of each point index to one of k cluster labels (0-based)."""

    def __init__(self, labels, k: int):
        lab = np.asarray(labels, dtype=int)
        if lab.ndim != 1:
            raise ValueError("labels must be one-dimensional")
        if k < 1:
            raise ValueError("k must be >= 1")
        if lab.size and (lab.min() < 0 or lab.max() >= k):
            raise ValueError(f"labels must lie in [0, {k})")
        lab = lab.copy()
        lab.setflags(write=False)
        self.labels = lab
        self.k = k

    @property
    def n(self) -> int:
        return self.labels.size

    def cluster_indices(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.labels == c)

    def clusters(self) -> list[np.ndarray]:
        return [self.cluster_indices(c) for c in range(self.k)]

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def is_well_defined(self) -> bool:
        """Every cluster holds at least two points."""
        return bool(self.sizes().min() >= 2)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HardPartition)
            and self.k == other.k
            and np.array_equal(self.labels, other.labels)
        )

    def __repr__(self) -> str:
        return f"HardPartition(k={self.k}, sizes={self.sizes().tolist()})"


@dataclass(frozen=True)
class SphericalComponent:
    """One weighted spherical Gaussian: (weight, mean, variance)."""

    weight: float
    mean: np.ndarray
    variance: float

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1).copy()
        mean.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        if not (0.0 < self.weight <= 1.0):
            raise ValueError(f"weight must be in (0, 1], got {self.weight}")
        if self.variance <= 0.0:
            raise ValueError(f"variance must be positive, got {self.variance}")
        if not np.all(np.isfinite(mean)):
            raise ValueError("mean must be finite")

    @property
    def dim(self) -> int:
        return self.mean.size


class SphericalMixture:
    """K weighted spherical Gaussians with weights summing to one."""

    WEIGHT_TOL = 1e-9

    def __init__(self, components: Sequence[SphericalComponent]):
        comps = list(components)
        if not comps:
            raise ValueError("a mixture needs at least one component")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise ValueError(f"component means disagree on dimension: {sorted(dims)}")
        total = sum(c.weight for c in comps)
        if abs(total - 1.0) > self.WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1 (got {total!r})")
        self.components = tuple(comps)

    @classmethod
    def from_arrays(cls, weights, means, variances) -> "SphericalMixture":
        w = np.asarray(weights, dtype=float).reshape(-1)
        m = _as_points(means)
        v = np.asarray(variances, dtype=float).reshape(-1)
        if not (len(w) == m.shape[0] == len(v)):
            raise ValueError("weights, means and variances must agree in length")
        return cls(
            [SphericalComponent(float(w[i]), m[i], float(v[i])) for i in range(len(w))]
        )

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @cached_property
    def means(self) -> np.ndarray:
        return np.stack([c.mean for c in self.components])

    @cached_property
    def variances(self) -> np.ndarray:
        return np.array([c.variance for c in self.components])

    def __repr__(self) -> str:
        return f"SphericalMixture(k={self.k}, dim={self.dim})"


@dataclass(frozen=True)
class BalanceProfile:
    """Assumed balance constants: every optimal cluster holds at least n/f
    points, and (optionally) at least a 1/g share of the summed
    single-cluster optima."""

    f: float
    g: float | None = None

    def __post_init__(self):
        if self.f < 1.0:
            raise ValueError(f"f must be >= 1, got {self.f}")
        if self.g is not None and self.g < 1.0:
            raise ValueError(f"g must be >= 1, got {self.g}")


@dataclass(frozen=True)
class CostReport:
    """Decomposition of the hard-assignment objective.

    total = sum(per_cluster) + weight_term, where per_cluster holds the
    unweighted Gaussian negative log-likelihood of each cluster and
    weight_term = -sum_k ln(w_k) * |C_k|.
    """

    total: float
    per_cluster: np.ndarray
    weight_term: float


@dataclass(frozen=True)
class InstanceCheck:
    well_defined: bool
    min_sq_dist: float
    threshold: float


@dataclass(frozen=True)
class BalanceCheck:
    f_balanced: bool
    fg_balanced: bool | None


@dataclass(frozen=True)
class SingleClusterFit:
    mean: np.ndarray
    variance: float
    cost: float


# ---------------------------------------------------------------------------
# elementary statistics
# ---------------------------------------------------------------------------


def mean(points) -> np.ndarray:
    """Coordinate-wise average; minimizes the sum of squared distances."""
    arr = _as_points(points)
    if arr.shape[0] == 0:
        raise ValueError("mean of an empty point set is undefined")
    return arr.mean(axis=0)


def variance(points, center) -> float:
    """(1 / (|Y| d)) * sum ||y - center||^2.

    With center = mean(Y) this is the refit variance of a spherical
    component for cluster Y.
    """
    arr = _as_points(points)
    if arr.shape[0] == 0:
        raise ValueError("variance of an empty point set is undefined")
    c = np.asarray(center, dtype=float).reshape(-1)
    if c.size != arr.shape[1]:
        raise ValueError(f"center has dimension {c.size}, points have {arr.shape[1]}")
    sq = np.sum((arr - c) ** 2)
    return float(sq / (arr.shape[0] * arr.shape[1]))


def sum_sq_to(points, center) -> float:
    """sum ||y - center||^2 over the rows of points."""
    arr = _as_points(points)
    c = np.asarray(center, dtype=float).reshape(-1)
    return float(np.sum((arr - c) ** 2))


def opt_single(points) -> SingleClusterFit:
    """Best single spherical Gaussian for a cluster, with its closed-form cost.

    The minimum of the cluster NLL over (mean, variance) is attained at the
    refit parameters and equals (|C| d / 2) * (ln(2*pi*v) + 1).
    """
    arr = _as_points(points)
    n, d = arr.shape
    if n < 2:
        raise DegenerateClusterError(
            f"a cluster needs at least two points, got {n}"
        )
    mu = arr.mean(axis=0)
    v = variance(arr, mu)
    if v <= 0.0:
        raise DegenerateClusterError("all points identical: zero variance")
    cost = (n * d / 2.0) * (math.log(2.0 * math.pi * v) + 1.0)
    return SingleClusterFit(mean=mu, variance=v, cost=cost)


# ---------------------------------------------------------------------------
# cost functions
# ---------------------------------------------------------------------------


def weighted_point_costs(points: np.ndarray, weights, means, variances) -> np.ndarray:
    """Cost of every point under every weighted component, as an (n, k) array.

    `weights` need not sum to one; each entry must be positive.  This is the
    workhorse behind the scalar and mixture-level cost functions.
    """
    arr = _as_points(points)
    w = np.asarray(weights, dtype=float).reshape(-1)
    m = _as_points(means)
    v = np.asarray(variances, dtype=float).reshape(-1)
    if np.any(v <= 0.0):
        raise ValueError("variances must be positive")
    if np.any(w <= 0.0):
        raise ValueError("weights must be positive")
    d = arr.shape[1]
    d2 = pairwise_sq_dists(arr, m)
    return (d / 2.0) * np.log(2.0 * math.pi * v)[None, :] + d2 / (2.0 * v)[
        None, :
    ] - np.log(w)[None, :]


def mixture_point_costs(ps: PointSet, mixture: SphericalMixture) -> np.ndarray:
    if ps.dim != mixture.dim:
        raise ValueError(f"dimension mismatch: points {ps.dim}, mixture {mixture.dim}")
    return weighted_point_costs(
        ps.points, mixture.weights, mixture.means, mixture.variances
    )


def point_cost(x, comp: SphericalComponent) -> float:
    """(d/2) ln(2 pi v) + ||x - mu||^2 / (2v) - ln(w) for one point."""
    xv = np.asarray(x, dtype=float).reshape(-1)
    if xv.size != comp.dim:
        raise ValueError(f"point has dimension {xv.size}, component has {comp.dim}")
    costs = weighted_point_costs(
        xv.reshape(1, -1), [comp.weight], comp.mean.reshape(1, -1), [comp.variance]
    )
    return float(costs[0, 0])


def complete_nll(
    ps: PointSet, part: HardPartition, mixture: SphericalMixture
) -> CostReport:
    """Hard-assignment objective of (partition, mixture) on the instance."""
    if part.k != mixture.k:
        raise ValueError(f"partition has k={part.k}, mixture has k={mixture.k}")
    if part.n != ps.n:
        raise ValueError("partition does not cover the instance")
    d = ps.dim
    per_cluster = np.zeros(part.k)
    weight_term = 0.0
    for c, comp in enumerate(mixture.components):
        idx = part.cluster_indices(c)
        if idx.size == 0:
            continue
        sq = sum_sq_to(ps.points[idx], comp.mean)
        per_cluster[c] = (idx.size * d / 2.0) * math.log(
            2.0 * math.pi * comp.variance
        ) + sq / (2.0 * comp.variance)
        weight_term -= math.log(comp.weight) * idx.size
    return CostReport(
        total=float(per_cluster.sum() + weight_term),
        per_cluster=per_cluster,
        weight_term=weight_term,
    )


def model_nll(ps: PointSet, mixture: SphericalMixture) -> float:
    """Objective of the mixture with each point charged to its cheapest
    component; equals complete_nll under the induced partition."""
    costs = mixture_point_costs(ps, mixture)
    return float(costs.min(axis=1).sum())


def partition_nll(ps: PointSet, part: HardPartition) -> float:
    """Best achievable objective for a fixed partition (refit parameters)."""
    if part.n != ps.n:
        raise ValueError("partition does not cover the instance")
    n = ps.n
    total = 0.0
    for c in range(part.k):
        idx = part.cluster_indices(c)
        if idx.size < 2:
            raise DegenerateClusterError(
                f"cluster {c} has {idx.size} point(s), needs >= 2", cluster=c
            )
        try:
            fit = opt_single(ps.points[idx])
        except DegenerateClusterError as err:
            raise DegenerateClusterError(
                f"cluster {c} has zero variance", cluster=c
            ) from err
        total += fit.cost - math.log(idx.size / n) * idx.size
    return float(total)


def fit_params(ps: PointSet, part: HardPartition) -> SphericalMixture:
    """Refit step: weights |C_k|/n, means mu(C_k), variances sigma^2(C_k)."""
    if part.n != ps.n:
        raise ValueError("partition does not cover the instance")
    comps = []
    for c in range(part.k):
        idx = part.cluster_indices(c)
        if idx.size == 0:
            raise DegenerateClusterError(f"cluster {c} is empty", cluster=c)
        mu = ps.points[idx].mean(axis=0)
        v = variance(ps.points[idx], mu)
        if v <= 0.0:
            raise DegenerateClusterError(
                f"cluster {c} has zero variance", cluster=c
            )
        comps.append(SphericalComponent(idx.size / ps.n, mu, v))
    return SphericalMixture(comps)


def induce_partition(ps: PointSet, mixture: SphericalMixture) -> HardPartition:
    """Assign each point to its most likely component.

    Equivalent to the per-point argmin of the weighted cost; ties go to the
    lowest component index for reproducibility.
    """
    costs = mixture_point_costs(ps, mixture)
    return HardPartition(costs.argmin(axis=1), mixture.k)


def posterior(x, mixture: SphericalMixture) -> np.ndarray:
    """Posterior component probabilities of one point, computed in the log
    domain so extreme components underflow to 0.0 rather than NaN."""
    xv = np.asarray(x, dtype=float).reshape(1, -1)
    log_p = -weighted_point_costs(
        xv, mixture.weights, mixture.means, mixture.variances
    )[0]
    log_p -= log_p.max()
    p = np.exp(log_p)
    return p / p.sum()


# ---------------------------------------------------------------------------
# validity checks
# ---------------------------------------------------------------------------


def validate_instance(ps: PointSet) -> InstanceCheck:
    """Check the minimum-separation restriction: all pairwise squared
    distances at least 4d/pi.  Duplicate points fail the check."""
    threshold = separation_threshold(ps.dim)
    min_sq = ps.min_sq_dist
    return InstanceCheck(
        well_defined=bool(min_sq >= threshold),
        min_sq_dist=min_sq,
        threshold=threshold,
    )


def validate_balance(
    ps: PointSet, part: HardPartition, prof: BalanceProfile
) -> BalanceCheck:
    """Check the f-balance (cluster sizes) and, when g is supplied, the
    (f, g)-balance (cluster cost shares) of a partition."""
    if part.n != ps.n:
        raise ValueError("partition does not cover the instance")
    sizes = part.sizes()
    f_balanced = bool(np.all(sizes >= ps.n / prof.f))
    fg_balanced = None
    if prof.g is not None:
        costs = []
        for c in range(part.k):
            idx = part.cluster_indices(c)
            if idx.size < 2:
                raise DegenerateClusterError(
                    f"cluster {c} has {idx.size} point(s); cannot check cost share",
                    cluster=c,
                )
            costs.append(opt_single(ps.points[idx]).cost)
        total = sum(costs)
        fg_balanced = f_balanced and all(c >= total / prof.g for c in costs)
    return BalanceCheck(f_balanced=f_balanced, fg_balanced=fg_balanced)
