import numpy as np
import pytest

from hardgmm import (
    HardPartition,
    PointSet,
    SphericalMixture,
    cem_best_of,
    cem_run,
    complete_nll,
    fit_params,
    induce_partition,
    model_nll,
    opt_single,
)
from hardgmm.cem import CemConfig, CemDegeneracyError
from hardgmm.oracle import exact_solve
from conftest import MICRO_OPT


def test_given_partition_converges_in_one_round(micro, micro_partition):
    cfg = CemConfig(init="given-partition")
    mixture, part, trace = cem_run(micro, 2, cfg, init_partition=micro_partition)
    assert trace.iterations == 1
    assert trace.terminated_by == "converged"
    assert trace.costs[-1] == pytest.approx(MICRO_OPT, rel=1e-9)
    assert part == micro_partition


def test_oracle_fixed_point(micro):
    oracle = exact_solve(micro, 2)
    cfg = CemConfig(init="given-mixture")
    mixture, part, trace = cem_run(micro, 2, cfg, init_mixture=oracle.best_mixture)
    assert trace.costs[-1] == pytest.approx(oracle.opt, rel=1e-9)
    assert part == oracle.best_partition
    assert np.allclose(mixture.means, oracle.best_mixture.means)


def test_k1_single_refit(micro):
    cfg = CemConfig(init="random-partition", seed=1)
    mixture, part, trace = cem_run(micro, 1, cfg)
    assert trace.iterations == 1
    assert trace.terminated_by == "converged"
    assert trace.costs[0] == pytest.approx(opt_single(micro.points).cost, rel=1e-12)


def test_costs_non_increasing_without_repairs():
    rng = np.random.default_rng(100)
    checked = 0
    for trial in range(100):
        n = int(rng.integers(6, 41))
        k = int(rng.integers(1, 4))
        if n < 2 * k:
            continue
        pts = rng.normal(scale=3.0, size=(n, int(rng.integers(1, 4))))
        ps = PointSet(pts)
        cfg = CemConfig(seed=trial, degeneracy_policy="reassign")
        _, _, trace = cem_run(ps, k, cfg)
        clean = [
            c
            for i, c in enumerate(trace.costs, start=1)
            if i not in trace.repaired_rounds
        ]
        for a, b in zip(clean, clean[1:]):
            assert b <= a + 1e-9
        checked += 1
    assert checked >= 90


def test_fixed_point_idempotence(micro):
    cfg = CemConfig(seed=5)
    mixture, part, trace = cem_run(micro, 2, cfg)
    again_cfg = CemConfig(init="given-partition")
    mixture2, part2, trace2 = cem_run(micro, 2, again_cfg, init_partition=part)
    assert part2 == part
    assert np.allclose(mixture2.means, mixture.means)
    assert trace2.costs[-1] == pytest.approx(trace.costs[-1], rel=1e-12)


def test_steps_match_module_primitives():
    # one full round equals fit_params followed by induce_partition
    rng = np.random.default_rng(8)
    ps = PointSet(rng.normal(scale=4.0, size=(12, 2)))
    init = HardPartition(np.arange(12) % 2, 2)
    cfg = CemConfig(init="given-partition", max_iters=1)
    mixture, part, trace = cem_run(ps, 2, cfg, init_partition=init)
    expect_mixture = fit_params(ps, init)
    assert np.allclose(mixture.means, fit_params(ps, part).means)
    expected_labels = induce_partition(ps, expect_mixture).labels
    assert np.array_equal(part.labels, expected_labels)
    assert trace.costs[0] == pytest.approx(
        complete_nll(ps, part, expect_mixture).total, rel=1e-12
    )


def test_abort_policy_names_iteration_and_cluster():
    # a far stray component captures nothing: its cluster starts empty
    ps = PointSet([0.0, 2.0, 4.0, 6.0])
    bad = SphericalMixture.from_arrays(
        [0.5, 0.5], [[3.0], [1000.0]], [1.0, 1.0]
    )
    cfg = CemConfig(init="given-mixture", degeneracy_policy="abort")
    with pytest.raises(CemDegeneracyError) as exc:
        cem_run(ps, 2, cfg, init_mixture=bad)
    assert exc.value.iteration >= 1
    assert exc.value.cluster == 1


def test_reassign_policy_recovers():
    ps = PointSet([0.0, 2.0, 4.0, 6.0])
    bad = SphericalMixture.from_arrays(
        [0.5, 0.5], [[3.0], [1000.0]], [1.0, 1.0]
    )
    cfg = CemConfig(init="given-mixture", degeneracy_policy="reassign")
    mixture, part, trace = cem_run(ps, 2, cfg, init_mixture=bad)
    assert part.is_well_defined()
    assert len(trace.repaired_rounds) >= 1


def test_requires_enough_points():
    with pytest.raises(ValueError):
        cem_run(PointSet([0.0, 1.0, 2.0]), 2, CemConfig())


def test_strict_mode_rejects_crowded_instance():
    cfg = CemConfig(strict=True)
    with pytest.raises(ValueError):
        cem_run(PointSet([0.0, 0.5, 10.0, 10.5]), 2, cfg)


def test_best_of_picks_minimum(micro):
    mixture, part, trace, per_restart = cem_best_of(
        micro, 2, CemConfig(seed=3), restarts=6
    )
    finite = [c for c in per_restart if np.isfinite(c)]
    assert trace.costs[-1] == pytest.approx(min(finite), rel=1e-12)
    assert model_nll(micro, mixture) == pytest.approx(min(finite), rel=1e-9)
