import itertools
import math

import numpy as np
import pytest

from hardgmm import (
    BudgetExceededError,
    PointSet,
    model_nll,
    opt_single,
    partition_nll,
)
from hardgmm.cem import CemConfig, cem_run
from hardgmm.oracle import (
    count_partitions,
    exact_opt_diam,
    exact_solve,
    partition_labels,
)
from conftest import MICRO_OPT, MICRO_WKM_OPT, random_well_defined


class TestExactSolve:
    def test_micro_cmle(self, micro):
        result = exact_solve(micro, 2)
        assert result.opt == pytest.approx(MICRO_OPT, rel=1e-12)
        assert result.opt == pytest.approx(8.448343, abs=1e-6)
        assert result.partitions_scanned == 3
        assert result.best_partition.labels.tolist() == [0, 0, 1, 1]

    def test_micro_wkm(self, micro):
        result = exact_solve(micro, 2, objective="wkm", beta=0.5)
        assert result.opt == pytest.approx(MICRO_WKM_OPT, rel=1e-12)
        assert result.opt == pytest.approx(4.772589, abs=1e-6)
        assert np.allclose(result.best_mixture.variances, [1.0, 1.0])

    def test_micro_ucmle(self, micro):
        result = exact_solve(micro, 2, objective="ucmle")
        assert result.opt == pytest.approx(8.448343, abs=1e-6)
        assert np.allclose(result.best_mixture.weights, [0.5, 0.5])

    def test_k1(self, micro):
        result = exact_solve(micro, 1)
        assert result.partitions_scanned == 1
        assert result.opt == pytest.approx(opt_single(micro.points).cost, rel=1e-12)

    def test_opt_matches_partition_nll_recomputation(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            ps = random_well_defined(rng, n=8, d=2)
            result = exact_solve(ps, 2)
            assert result.opt == pytest.approx(
                partition_nll(ps, result.best_partition), rel=1e-9
            )
            assert result.opt == pytest.approx(
                model_nll(ps, result.best_mixture), rel=1e-9
            )

    def test_no_scanned_partition_scores_lower(self):
        rng = np.random.default_rng(13)
        ps = random_well_defined(rng, n=7, d=1)
        result = exact_solve(ps, 2)
        for labels in partition_labels(7, 2, min_size=2):
            from hardgmm import HardPartition

            cost = partition_nll(ps, HardPartition(labels, 2))
            assert result.opt <= cost + 1e-9

    def test_cap_error_reports_estimate(self):
        ps = PointSet(np.linspace(0.0, 60.0, 15))
        with pytest.raises(BudgetExceededError) as exc:
            exact_solve(ps, 2, cap=14)
        assert str(count_partitions(15, 2, 2)) in str(exc.value)

    def test_wkm_needs_beta(self, micro):
        with pytest.raises(ValueError):
            exact_solve(micro, 2, objective="wkm")

    def test_infeasible_k_rejected(self, micro):
        with pytest.raises(ValueError):
            exact_solve(micro, 3)


class TestEnumeration:
    def test_counts_match_dp(self):
        for n, k in [(4, 2), (6, 2), (6, 3), (8, 2), (8, 3), (9, 4), (10, 3)]:
            got = sum(1 for _ in partition_labels(n, k, min_size=2))
            assert got == count_partitions(n, k, 2), (n, k)

    def test_counts_match_naive_enumeration(self):
        # independent brute force: all label vectors, canonicalized
        for n, k in [(5, 2), (6, 2), (6, 3), (7, 3)]:
            seen = set()
            for assign in itertools.product(range(k), repeat=n):
                counts = [assign.count(c) for c in range(k)]
                if any(c < 2 for c in counts):
                    continue
                first_seen = {}
                canon = []
                for a in assign:
                    if a not in first_seen:
                        first_seen[a] = len(first_seen)
                    canon.append(first_seen[a])
                seen.add(tuple(canon))
            got = sum(1 for _ in partition_labels(n, k, min_size=2))
            assert got == len(seen), (n, k)

    def test_unlabeled_canonical_form(self):
        for labels in partition_labels(6, 3, min_size=2):
            first_positions = [np.flatnonzero(labels == c)[0] for c in range(3)]
            assert first_positions == sorted(first_positions)

    def test_degenerate_partitions_scanned_not_scored(self):
        # duplicate pair forces one all-identical cluster in some partitions
        ps = PointSet([0.0, 0.0, 10.0, 12.0])
        result = exact_solve(ps, 2)
        assert result.partitions_scanned == 3
        # the best partition cannot be the one with the identical pair alone
        sizes = result.best_partition.sizes()
        assert sizes.min() >= 2
        labels = result.best_partition.labels
        first_cluster = np.flatnonzero(labels == labels[0])
        assert not np.array_equal(first_cluster, [0, 1])


class TestOptDiam:
    def test_micro(self, micro):
        assert exact_opt_diam(micro, 2) == pytest.approx(2.0)

    def test_k_equals_n(self, micro):
        assert exact_opt_diam(micro, 4) == 0.0

    def test_k1_max_pairwise(self, micro):
        assert exact_opt_diam(micro, 1) == pytest.approx(12.0)


class TestDominance:
    def test_oracle_lower_bounds_cem(self):
        rng = np.random.default_rng(15)
        for trial in range(10):
            ps = random_well_defined(rng, n=8, d=1)
            opt = exact_solve(ps, 2).opt
            _, _, trace = cem_run(
                ps, 2, CemConfig(seed=trial, degeneracy_policy="reassign")
            )
            assert opt <= trace.costs[-1] + 1e-9

    def test_uniform_weights_never_beat_free_weights(self):
        rng = np.random.default_rng(16)
        for _ in range(10):
            n = int(rng.integers(6, 11))
            ps = random_well_defined(rng, n=n, d=1)
            assert (
                exact_solve(ps, 2, objective="ucmle").opt
                >= exact_solve(ps, 2).opt - 1e-9
            )

    def test_imbalanced_instance_gap(self):
        rng = np.random.default_rng(17)
        pts = np.concatenate([
            rng.normal(0.0, 1.0, size=2), rng.normal(30.0, 1.0, size=6)
        ])
        ps = PointSet(pts * 2.5)
        ucmle = exact_solve(ps, 2, objective="ucmle").opt
        cmle = exact_solve(ps, 2).opt
        assert ucmle >= cmle - 1e-9

    def test_summed_size_floor_at_optimum(self):
        rng = np.random.default_rng(18)
        for _ in range(10):
            ps = random_well_defined(rng, n=8, d=2)
            result = exact_solve(ps, 2)
            floor = sum(
                result.best_partition.cluster_indices(c).size * ps.dim / 2.0
                for c in range(2)
            )
            assert result.opt >= floor - 1e-9
