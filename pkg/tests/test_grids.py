import itertools
import math

import numpy as np
import pytest

from hardgmm import (
    BalanceProfile,
    BudgetExceededError,
    PointSet,
    VARIANCE_FLOOR,
    gonzalez,
    nll_grid,
    opt_single,
    size_grid,
    tuple_iterator,
    variance_candidates,
    variance_grid_welldefined,
)
from hardgmm.model import LOG_TWO_PI
from hardgmm.oracle import exact_opt_diam, exact_solve
from conftest import random_well_defined


class TestGonzalez:
    def test_micro_trace(self, micro):
        cert = gonzalez(micro, 2)
        assert cert.center_indices == (0, 3)
        assert np.allclose(cert.centers.ravel(), [0.0, 12.0])
        assert cert.radius == pytest.approx(2.0)
        expected = math.log(8.0 * math.pi) + 1.0 + math.log(2.0)
        assert cert.nll_bound_coeff == pytest.approx(expected, rel=1e-12)
        assert cert.nll_bound_coeff == pytest.approx(4.91732, abs=1e-5)

    def test_coeff_consistent_with_radius(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            ps = PointSet(rng.normal(size=(9, 2)) * 4)
            cert = gonzalez(ps, 3)
            expected = (
                math.log(2.0 * math.pi * cert.radius**2) + 1.0 + math.log(3)
            )
            assert cert.nll_bound_coeff == pytest.approx(expected, abs=1e-12)

    def test_k_equals_n_flags_zero_radius(self):
        ps = PointSet([0.0, 5.0, 9.0])
        cert = gonzalez(ps, 3)
        assert cert.radius == 0.0
        assert cert.nll_bound_coeff is None
        with pytest.raises(ValueError):
            cert.nll_upper_bound(3, 1)

    def test_k_above_n_rejected(self, micro):
        with pytest.raises(ValueError):
            gonzalez(micro, 5)

    def test_determinism(self):
        rng = np.random.default_rng(77)
        ps = PointSet(rng.normal(size=(12, 3)))
        a, b = gonzalez(ps, 4), gonzalez(ps, 4)
        assert a.center_indices == b.center_indices
        assert a.radius == b.radius

    def test_radius_within_four_opt_diam(self):
        rng = np.random.default_rng(50)
        for _ in range(25):
            n = int(rng.integers(4, 9))
            ps = PointSet(rng.normal(size=(n, int(rng.integers(1, 3)))))
            k = int(rng.integers(2, n // 2 + 1))
            cert = gonzalez(ps, k)
            assert cert.radius <= 4.0 * exact_opt_diam(ps, k) + 1e-12

    def test_bound_dominates_oracle_optimum(self):
        rng = np.random.default_rng(51)
        for _ in range(15):
            n = int(rng.integers(6, 9))
            ps = random_well_defined(rng, n=n, d=1)
            cert = gonzalez(ps, 2)
            opt = exact_solve(ps, 2).opt
            assert cert.nll_upper_bound(ps.n, ps.dim) >= opt - 1e-9


class TestSizeGrid:
    def test_worked_example(self):
        grid = size_grid(16, BalanceProfile(f=4.0), 1.0)
        assert np.allclose(grid.values, [8.0, 16.0])

    def test_bracket_example(self):
        grid = size_grid(16, BalanceProfile(f=4.0), 1.0)
        true_size = 5.0
        ok = [v for v in grid.values if true_size <= v <= 2.0 * true_size]
        assert ok == [8.0]

    def test_f_one_returns_n(self):
        grid = size_grid(10, BalanceProfile(f=1.0), 0.25)
        assert grid.values.tolist() == [10.0]
        assert grid.exponents == (0,)

    def test_values_strictly_increasing(self):
        grid = size_grid(100, BalanceProfile(f=7.3), 0.17)
        assert np.all(np.diff(grid.values) > 0)

    def test_coverage_randomized(self):
        rng = np.random.default_rng(8)
        for _ in range(500):
            n = int(rng.integers(4, 200))
            f = float(rng.uniform(1.01, 12.0))
            eps = float(rng.uniform(0.05, 1.5))
            grid = size_grid(n, BalanceProfile(f=f), eps)
            true_size = float(rng.uniform(n / f, n))
            assert _bracketed(grid.values, true_size, eps)


def _bracketed(values, truth, eps) -> bool:
    return any(truth <= v <= (1.0 + eps) * truth + 1e-9 for v in values)


class TestNllGrid:
    def test_worked_example(self):
        grid = nll_grid(4, 1, 4.917, 1.0)
        assert np.allclose(grid.values, [4.0, 8.0, 16.0])

    def test_bracket_example(self):
        grid = nll_grid(4, 1, 4.917, 1.0)
        truth = 2.0 * (math.log(2.0 * math.pi) + 1.0)  # 5.675754
        ok = [v for v in grid.values if truth <= v <= 2.0 * truth]
        assert 8.0 in ok

    def test_tiny_range(self):
        grid = nll_grid(4, 1, 1.0 + 1e-12, 0.5)
        assert np.allclose(grid.values, [1.5 * 4 * 1 / 2.0])

    def test_coverage_randomized(self):
        rng = np.random.default_rng(18)
        for _ in range(500):
            n = int(rng.integers(2, 100))
            d = int(rng.integers(1, 5))
            coeff = float(rng.uniform(1.0 + 1e-6, 40.0))
            eps = float(rng.uniform(0.05, 1.5))
            grid = nll_grid(n, d, coeff, eps)
            truth = float(rng.uniform(n * d / 2.0, n * d / 2.0 * coeff))
            assert _bracketed(grid.values, truth, eps)


class TestVarianceCandidates:
    def test_worked_example(self):
        vals = variance_candidates(
            6.0, 2.0, BalanceProfile(f=2.0, g=2.0), 1.0, 1
        )
        expected = [
            math.exp(2.0 * 2.0 * 3.0 / 2.0 - LOG_TWO_PI - 1.0),
            math.exp(2.0 * 2.0 * 6.0 / 2.0 - LOG_TWO_PI - 1.0),
        ]
        assert np.allclose(vals, expected)
        assert vals[0] == pytest.approx(math.exp(3.1621229335906547), rel=1e-10)
        assert vals[1] == pytest.approx(math.exp(9.1621229335906547), rel=1e-10)

    def test_g_one_single_candidate(self):
        vals = variance_candidates(5.0, 2.0, BalanceProfile(f=2.0, g=1.0), 0.5, 1)
        assert len(vals) == 1

    def test_micro_end_to_end_contract(self, micro, micro_partition):
        # with exact brackets supplied, some candidate dominates each true
        # variance within the advertised log gap
        eps = 0.4
        fits = [opt_single(micro.points[micro_partition.cluster_indices(c)])
                for c in range(2)]
        total = sum(f.cost for f in fits)
        nll_est = total * (1.0 + eps / 2.0)  # inside [total, (1+eps) total]
        g = max(total / f.cost for f in fits) * 1.01
        prof = BalanceProfile(f=2.0, g=g)
        for c, fit in enumerate(fits):
            n_k = 2.0 * (1.0 + eps / 2.0)
            vals = variance_candidates(nll_est, n_k, prof, eps, 1)
            size = 2
            slack = ((1.0 + eps) ** 2 - 1.0) * 2.0 / (size * 1) * fit.cost
            ok = [
                v
                for v in vals
                if v >= fit.variance
                and math.log(v) - math.log(fit.variance) <= slack + 1e-9
            ]
            assert ok, f"cluster {c}: no candidate within contract"

    def test_requires_g(self):
        with pytest.raises(ValueError):
            variance_candidates(5.0, 2.0, BalanceProfile(f=2.0), 0.5, 1)

    def test_coverage_randomized(self):
        # random viable clusters with exact brackets: contract holds
        rng = np.random.default_rng(33)
        for _ in range(300):
            d = int(rng.integers(1, 4))
            k = int(rng.integers(2, 4))
            eps = float(rng.uniform(0.1, 1.0))
            sizes = [int(rng.integers(2, 8)) for _ in range(k)]
            clusters = [
                opt_single(random_well_defined(rng, n=size, d=d).points)
                for size in sizes
            ]
            total = sum(c.cost for c in clusters)
            g = max(total / c.cost for c in clusters) * (1.0 + 1e-9)
            nll_est = total * float(rng.uniform(1.0, 1.0 + eps))
            for cl, csize in zip(clusters, sizes):
                n_k = csize * float(rng.uniform(1.0, 1.0 + eps))
                vals = variance_candidates(
                    nll_est, n_k, BalanceProfile(f=float(k), g=g), eps, d
                )
                slack = ((1.0 + eps) ** 2 - 1.0) * 2.0 / (csize * d) * cl.cost
                assert any(
                    v >= cl.variance
                    and math.log(v) - math.log(cl.variance) <= slack + 1e-9
                    for v in vals
                )


class TestVarianceGridWellDefined:
    def test_worked_example(self):
        grid = variance_grid_welldefined(4.0, 0.5)
        assert grid.values[0] == pytest.approx(VARIANCE_FLOOR)
        assert len(grid.values) == 8  # u-grid 0, 0.5, ..., 3.5
        logs = np.log(2.0 * math.pi * grid.values)
        assert np.allclose(logs, np.arange(8) * 0.5, atol=1e-12)

    def test_bracket_example(self):
        grid = variance_grid_welldefined(4.0, 0.5)
        target = 0.3
        cands = [v for v in grid.values
                 if v >= target and math.log(v) - math.log(target) <= 0.5]
        assert cands
        assert cands[0] == pytest.approx(math.exp(1.0) / (2 * math.pi), rel=1e-12)

    def test_floor_exact_at_lower_endpoint(self):
        grid = variance_grid_welldefined(4.0, 0.5)
        assert grid.values[0] == VARIANCE_FLOOR

    def test_tiny_spread_warns_but_returns(self):
        with pytest.warns(UserWarning):
            grid = variance_grid_welldefined(1e-3, 0.5)
        assert len(grid.values) >= 1

    def test_coverage_randomized(self):
        rng = np.random.default_rng(44)
        for _ in range(500):
            max_sq = float(rng.uniform(0.5, 1e4))
            eps = float(rng.uniform(0.05, 1.0))
            grid = variance_grid_welldefined(max_sq, eps)
            lo = VARIANCE_FLOOR
            hi = max(max_sq, lo)
            truth = float(rng.uniform(lo, hi))
            assert any(
                v >= truth and math.log(v) - math.log(truth) <= eps + 1e-9
                for v in grid.values
            )


class TestTupleIterator:
    def test_singletons(self):
        assert list(tuple_iterator([["a"], ["b"]])) == [("a", "b")]

    def test_lexicographic_order(self):
        got = list(tuple_iterator([[0, 1], ["x", "y", "z"]]))
        assert got == list(itertools.product([0, 1], ["x", "y", "z"]))
        assert len(got) == 6

    def test_streams_lazily(self):
        it = tuple_iterator([range(10), range(10), range(10)])
        assert next(it) == (0, 0, 0)
        assert sum(1 for _ in it) == 999

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            tuple_iterator([[1], []])

    def test_overflow_rejected(self):
        with pytest.raises(BudgetExceededError):
            tuple_iterator([range(2**22)] * 3)


class TestBalanceRelation:
    def test_f_balanced_is_f_gamma_f_balanced(self):
        # every cluster of an optimal partition carries at least a
        # 1/(f * coeff) share of the summed single-cluster optima
        rng = np.random.default_rng(60)
        for _ in range(10):
            ps = random_well_defined(rng, n=8, d=1)
            result = exact_solve(ps, 2)
            part = result.best_partition
            sizes = part.sizes()
            f = ps.n / sizes.min()
            coeff = gonzalez(ps, 2).nll_bound_coeff
            costs = [
                opt_single(ps.points[part.cluster_indices(c)]).cost
                for c in range(2)
            ]
            total = sum(costs)
            for c in costs:
                assert c >= total / (f * coeff) - 1e-9


class TestEpsilonMonotonicity:
    def test_grids_coarsen_with_epsilon(self):
        for eps_small, eps_big in [(0.1, 0.3), (0.2, 0.9)]:
            s_small = size_grid(50, BalanceProfile(f=5.0), eps_small)
            s_big = size_grid(50, BalanceProfile(f=5.0), eps_big)
            assert len(s_big.values) <= len(s_small.values)
            n_small = nll_grid(50, 2, 6.0, eps_small)
            n_big = nll_grid(50, 2, 6.0, eps_big)
            assert len(n_big.values) <= len(n_small.values)
            v_small = variance_grid_welldefined(100.0, eps_small)
            v_big = variance_grid_welldefined(100.0, eps_big)
            assert len(v_big.values) <= len(v_small.values)
