"""Candidate grids for cluster sizes, objective estimates, and variances,
plus the farthest-first-traversal certificate that anchors them.

All grids are geometric ladders chosen so that any value the target solution
can take is bracketed by a grid value within the advertised slack.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .model import LOG_TWO_PI, VARIANCE_FLOOR, BalanceProfile, PointSet

_CEIL_FUZZ = 1e-12  # absorb float noise before ceil()


def _ceil_log(x: float, ratio: float) -> int:
    """ceil(log_{1+ratio}(x)) with protection against last-ulp noise."""
    return math.ceil(math.log(x) / math.log1p(ratio) - _CEIL_FUZZ)


@dataclass(frozen=True)
class GonzalezCertificate:
    """Output of the farthest-first traversal.

    radius is the largest distance from any point to its nearest chosen
    center.  nll_bound_coeff is ln(2*pi*radius^2) + 1 + ln(k); the optimal
    hard-clustering objective is at most (n*d/2) times this coefficient.
    It is None when radius == 0 (k covers every distinct point).
    """

    center_indices: tuple[int, ...]
    centers: np.ndarray
    radius: float
    nll_bound_coeff: float | None
    k: int

    def nll_upper_bound(self, n: int, dim: int) -> float:
        if self.nll_bound_coeff is None:
            raise ValueError("coefficient undefined for radius 0")
        return (n * dim / 2.0) * self.nll_bound_coeff


@dataclass(frozen=True)
class SizeGrid:
    """Cluster-size candidates (1+eps)^i * n/f for i = 1..ceil(log_{1+eps} f).

    Values are real; only the ratios matter downstream (they become mixture
    weights), and rounding to integers could break the bracket at small
    cluster sizes.
    """

    values: np.ndarray
    exponents: tuple[int, ...]
    epsilon: float
    n: int
    f: float


@dataclass(frozen=True)
class NllGrid:
    """Candidates for the summed single-cluster optima:
    (1+eps)^i * n*d/2 for i = 1..ceil(log_{1+eps} coeff)."""

    values: np.ndarray
    epsilon: float
    n: int
    dim: int
    bound_coeff: float


@dataclass(frozen=True)
class VarianceGrid:
    """Variance candidates exp(j*eps)/(2*pi) covering [1/(2*pi), max_sq_dist]
    with additive steps of eps in ln(variance)."""

    values: np.ndarray
    epsilon: float
    max_sq_dist: float


def gonzalez(ps: PointSet, k: int) -> GonzalezCertificate:
    """Farthest-first traversal seeded at index 0; deterministic tie-breaks.

    Each successive center is the point farthest from the chosen set (lowest
    index on ties).  radius is then the covering radius of the k centers.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > ps.n:
        raise ValueError(f"k={k} exceeds the number of points {ps.n}")
    pts = ps.points
    chosen = [0]
    min_dist = np.linalg.norm(pts - pts[0], axis=1)
    for _ in range(1, k):
        nxt = int(np.argmax(min_dist))
        chosen.append(nxt)
        min_dist = np.minimum(min_dist, np.linalg.norm(pts - pts[nxt], axis=1))
    radius = float(min_dist.max())
    if radius > 0.0:
        coeff = math.log(2.0 * math.pi * radius * radius) + 1.0 + math.log(k)
    else:
        coeff = None
    return GonzalezCertificate(
        center_indices=tuple(chosen),
        centers=pts[chosen],
        radius=radius,
        nll_bound_coeff=coeff,
        k=k,
    )


def size_grid(n: int, prof: BalanceProfile, eps: float) -> SizeGrid:
    """Grid covering every size in [n/f, n]: for each such size there is a
    grid value v with size <= v <= (1+eps)*size."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if prof.f == 1.0:
        # Only size n is possible; emit it exactly.
        return SizeGrid(
            values=np.array([float(n)]), exponents=(0,), epsilon=eps, n=n, f=1.0
        )
    count = max(1, _ceil_log(prof.f, eps))
    exponents = tuple(range(1, count + 1))
    values = (1.0 + eps) ** np.array(exponents, dtype=float) * (n / prof.f)
    return SizeGrid(values=values, exponents=exponents, epsilon=eps, n=n, f=prof.f)


def nll_grid(n: int, dim: int, bound_coeff: float, eps: float) -> NllGrid:
    """Grid covering every value in [n*d/2, (n*d/2)*coeff]: for each such
    value v there is a grid value u with v <= u <= (1+eps)*v."""
    if bound_coeff < 1.0:
        raise ValueError(f"bound coefficient must be >= 1, got {bound_coeff}")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    count = max(1, _ceil_log(bound_coeff, eps)) if bound_coeff > 1.0 else 1
    base = n * dim / 2.0
    values = (1.0 + eps) ** np.arange(1, count + 1, dtype=float) * base
    return NllGrid(values=values, epsilon=eps, n=n, dim=dim, bound_coeff=bound_coeff)


def variance_candidates(
    nll_estimate: float,
    size_estimate: float,
    prof: BalanceProfile,
    eps: float,
    dim: int,
) -> np.ndarray:
    """Per-cluster variance candidates derived from an estimate of the summed
    single-cluster optima and an estimated cluster size.

    One candidate per exponent j in {ceil(-log_{1+eps} g), ..., 0}:

        exp( 2*(1+eps) * (1+eps)^j * nll_estimate / (size_estimate * d)
             - ln(2*pi) - 1 )

    Values are returned in increasing order.
    """
    if prof.g is None:
        raise ValueError("variance candidates need the g balance constant")
    if nll_estimate <= 0.0 or size_estimate <= 0.0:
        raise ValueError("estimates must be positive")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    j_lo = -max(0, _ceil_log(prof.g, eps)) if prof.g > 1.0 else 0
    js = np.arange(j_lo, 1, dtype=float)
    scaled = (1.0 + eps) ** js * nll_estimate
    exponent = 2.0 * (1.0 + eps) * scaled / (size_estimate * dim) - LOG_TWO_PI - 1.0
    return np.exp(exponent)


def variance_grid_welldefined(max_sq_dist: float, eps: float) -> VarianceGrid:
    """Variance grid for instances obeying the separation restriction.

    Covers [1/(2*pi), max_sq_dist] multiplicatively: for every variance v in
    the range some grid value u satisfies u >= v and ln(u) - ln(v) <= eps.
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if max_sq_dist <= 0.0:
        raise ValueError("max_sq_dist must be positive")
    upper = math.log(2.0 * math.pi * max_sq_dist)
    if upper < 0.0:
        warnings.warn(
            "max squared distance below the variance floor; grid reduced to"
            " the floor value",
            stacklevel=2,
        )
    count = max(0, math.ceil(upper / eps - _CEIL_FUZZ))
    values = np.exp(np.arange(count + 1, dtype=float) * eps) * VARIANCE_FLOOR
    return VarianceGrid(values=values, epsilon=eps, max_sq_dist=max_sq_dist)


def tuple_iterator(per_cluster_candidates):
    """Lazily stream the lexicographic Cartesian product of per-cluster
    candidate lists; raises if the total count overflows 64 bits."""
    lists = [list(c) for c in per_cluster_candidates]
    if any(len(c) == 0 for c in lists):
        raise ValueError("every candidate list must be non-empty")
    total = math.prod(len(c) for c in lists)
    if total > 2**63 - 1:
        raise BudgetExceededError(
            f"candidate tuple count {total} overflows 64 bits",
            requested=total,
            cap=2**63 - 1,
        )
    return itertools.product(*lists)
