import math

import numpy as np
import pytest

from hardgmm import BalanceProfile, HardPartition, PointSet, separation_threshold


@pytest.fixture
def micro() -> PointSet:
    """The four-point line instance with a unique separated optimum."""
    return PointSet([0.0, 2.0, 10.0, 12.0])


@pytest.fixture
def micro_partition() -> HardPartition:
    return HardPartition([0, 0, 1, 1], 2)


MICRO_OPT = 2.0 * (math.log(2.0 * math.pi) + 1.0) + 4.0 * math.log(2.0)
MICRO_WKM_OPT = 2.0 + 4.0 * math.log(2.0)


def random_well_defined(rng: np.random.Generator, n: int, d: int,
                        spread: float = 1.0) -> PointSet:
    """Random points rescaled until the minimum-separation restriction holds."""
    while True:
        pts = rng.standard_normal((n, d)) * spread
        ps = PointSet(pts)
        if ps.min_sq_dist > 0.0:
            break
    threshold = separation_threshold(d)
    if ps.min_sq_dist < threshold:
        scale = math.sqrt(threshold / ps.min_sq_dist) * (1.0 + 1e-9)
        ps = PointSet(pts * scale)
    return ps


def random_mixture(rng: np.random.Generator, k: int, d: int):
    from hardgmm import SphericalMixture

    w = rng.uniform(0.2, 1.0, size=k)
    w = w / w.sum()
    means = rng.normal(0.0, 5.0, size=(k, d))
    variances = rng.uniform(0.3, 4.0, size=k)
    return SphericalMixture.from_arrays(w, means, variances)


def balanced_profile(f: float, g: float | None = None) -> BalanceProfile:
    return BalanceProfile(f=f, g=g)
