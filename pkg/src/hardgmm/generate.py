"""Synthetic spherical-mixture instances for tests and experiments.

Cluster centers sit on a simplex (k <= d + 1) or a one-dimensional lattice,
spaced separation * sigma apart; points are Gaussian around their center.
If the draw violates the minimum-separation restriction the whole instance
is rescaled uniformly, which preserves which partition is optimal but not
its cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import PointSet, separation_threshold


@dataclass
class GeneratedInstance:
    points: PointSet
    labels: np.ndarray
    means: np.ndarray  # post-scaling centers
    sigma: float  # post-scaling component sigma
    scale: float
    meta: dict


def _centers(k: int, d: int, spacing: float) -> np.ndarray:
    if k == 1:
        return np.zeros((1, d))
    if k <= d + 1:
        # 0 and spacing * e_i: minimum pairwise distance is exactly `spacing`.
        centers = np.zeros((k, d))
        for i in range(1, k):
            centers[i, i - 1] = spacing
        return centers
    centers = np.zeros((k, d))
    centers[:, 0] = spacing * np.arange(k)
    return centers


def generate_instance(
    n: int,
    d: int,
    k: int,
    separation: float,
    sigma: float,
    seed: int,
    max_attempts: int = 100,
) -> GeneratedInstance:
    """Balanced synthetic instance satisfying the separation restriction.

    Cluster sizes differ by at most one.  Raises ValueError for invalid
    parameters and RuntimeError when max_attempts draws all contain
    duplicate points (so no rescaling can separate them).
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive (zero risks duplicate points)")
    if separation <= 0.0:
        raise ValueError("separation must be positive")
    if n < k:
        raise ValueError(f"need at least k={k} points")
    if min(n, d, k) < 1:
        raise ValueError("n, d and k must be positive")

    counts = [n // k + (1 if i < n % k else 0) for i in range(k)]
    centers = _centers(k, d, separation * sigma)
    threshold = separation_threshold(d)
    rng = np.random.default_rng(seed)

    for attempt in range(max_attempts):
        labels = np.repeat(np.arange(k), counts)
        pts = centers[labels] + sigma * rng.standard_normal((n, d))
        ps = PointSet(pts)
        min_sq = ps.min_sq_dist
        if min_sq == 0.0:
            continue  # exact duplicates: rescaling cannot help
        scale = 1.0
        if min_sq < threshold:
            scale = math.sqrt(threshold / min_sq) * (1.0 + 1e-9)
            ps = PointSet(pts * scale)
        return GeneratedInstance(
            points=ps,
            labels=labels,
            means=centers * scale,
            sigma=sigma * scale,
            scale=scale,
            meta={
                "n": n,
                "d": d,
                "k": k,
                "separation": separation,
                "sigma_requested": sigma,
                "seed": seed,
                "attempt": attempt,
                "scale": scale,
                "min_sq_dist": float(ps.min_sq_dist),
                "threshold": threshold,
            },
        )
    raise RuntimeError(
        f"could not draw a duplicate-free instance in {max_attempts} attempts"
    )
