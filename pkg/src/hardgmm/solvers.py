"""End-to-end solvers: the two sampling-plus-gridding approximation
pipelines, the fixed-shape special cases, and the CEM baseline.

Candidate parameters always come from the documented grids and sampling
routines; the heavy cross products are evaluated with vectorized scans that
enumerate exactly the same candidate set as the literal nested loops.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .abs_search import (
    AbsConfig,
    FixedShape,
    candidate_mixture,
    enumerate_mean_candidates,
    score_candidate,
)
from .cem import CemConfig, cem_best_of, cem_run, CemDegeneracyError
from .errors import BudgetExceededError
from .grids import gonzalez, nll_grid, size_grid, variance_grid_welldefined
from .model import (
    LOG_TWO_PI,
    BalanceProfile,
    HardPartition,
    PointSet,
    SphericalMixture,
    induce_partition,
    model_nll,
    validate_instance,
)
from .sampling import SamplingConfig, approx_means_product

ALGORITHMS = ("theorem1", "theorem2", "cem", "wkm", "ucmle")

_POLISHABLE = ("theorem1", "theorem2", "cem")

# Everything except weighted k-means scores candidates by the full
# hard-assignment objective.
_WKM = "wkm"


@dataclass
class Budgets:
    max_mean_tuples: int = 500_000
    max_subset_combinations: int = 200_000
    max_parameter_combinations: int = 50_000_000
    max_nodes: int = 500_000
    max_grid_cells: int = 20_000_000


@dataclass
class SolveRequest:
    k: int
    algorithm: str
    epsilon: float | None = None
    delta: float | None = None
    balance: BalanceProfile | None = None
    beta: float | None = None
    alpha: float | None = None
    subset_size: int | None = None
    sample_size: int | None = None
    repeats: int | None = None
    restarts: int = 8
    polish: bool = False
    seed: int = 0
    budgets: Budgets = field(default_factory=Budgets)
    threads: int | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if self.algorithm != "cem":
            if self.epsilon is None or not (0.0 < self.epsilon < 1.0):
                raise ValueError("epsilon must be set in (0, 1)")
            if self.delta is None or not (0.0 < self.delta < 1.0):
                raise ValueError("delta must be set in (0, 1)")
        if self.algorithm == _WKM and (self.beta is None or self.beta <= 0.0):
            raise ValueError("wkm needs a positive beta")
        if self.polish and self.algorithm not in _POLISHABLE:
            raise ValueError(
                "polish refits free weights and variances, which would leave"
                f" the {self.algorithm} objective; not supported"
            )


@dataclass
class SolveResult:
    mixture: SphericalMixture
    partition: HardPartition
    cost: float
    certificate: dict


def objective_value(
    ps: PointSet, mixture: SphericalMixture, objective: str, beta: float | None = None
) -> float:
    """Score a mixture under the requested problem's objective."""
    if objective == _WKM:
        if beta is None:
            raise ValueError("wkm objective needs beta")
        sq = _sq_dists(ps.points, mixture.means)
        costs = beta * sq - np.log(mixture.weights)[None, :]
        return float(costs.min(axis=1).sum())
    return model_nll(ps, mixture)


def _sq_dists(points: np.ndarray, means: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - means[None, :, :]
    return np.sum(diff * diff, axis=2)


def solve(ps: PointSet, req: SolveRequest) -> SolveResult:
    if req.algorithm == "theorem1":
        return solve_theorem1(ps, req)
    if req.algorithm == "theorem2":
        return solve_theorem2(ps, req)
    if req.algorithm == "cem":
        return solve_cem(ps, req)
    if req.algorithm == _WKM:
        return solve_wkm(ps, req)
    return solve_ucmle(ps, req)


# ---------------------------------------------------------------------------
# pipeline 1: sampled means x size grid x objective-estimate grid x variances
# ---------------------------------------------------------------------------


def solve_theorem1(ps: PointSet, req: SolveRequest) -> SolveResult:
    """Grid-assembled search achieving (1 + eps) of the optimum for
    balanced instances, with high probability.

    Each stage runs at eps' = (1 + eps)^(1/4) - 1, so the four stage
    slacks compose to the advertised factor.
    """
    if req.balance is None:
        raise ValueError("theorem1 needs a balance profile (f, optionally g)")
    k, n, d = req.k, ps.n, ps.dim
    f = req.balance.f
    eps_p = (1.0 + req.epsilon) ** 0.25 - 1.0

    cert_gz = gonzalez(ps, k)
    if cert_gz.nll_bound_coeff is None:
        raise ValueError("instance has covering radius 0; no usable bound")
    coeff = max(cert_gz.nll_bound_coeff, 1.0)
    g = req.balance.g if req.balance.g is not None else max(1.0, coeff * f)

    alpha = req.alpha if req.alpha is not None else min(1.0, 1.0 / f)
    if alpha > 1.0 / f + 1e-12:
        raise ValueError(
            f"alpha={alpha} exceeds the assumed minimum cluster mass 1/f={1.0 / f}"
        )

    scfg = SamplingConfig(
        alpha=alpha,
        epsilon=eps_p,
        delta=req.delta,
        subset_size=req.subset_size,
        sample_size=req.sample_size,
        repeats=1,
        max_subset_combinations=req.budgets.max_subset_combinations,
        max_product_size=req.budgets.max_mean_tuples,
    )
    repeats = (
        req.repeats
        if req.repeats is not None
        else SamplingConfig(
            alpha=alpha, epsilon=eps_p, delta=req.delta,
            subset_size=req.subset_size, sample_size=req.sample_size,
        ).resolved_repeats(k)
    )

    sgrid = size_grid(n, BalanceProfile(f), eps_p)
    ngrid = nll_grid(n, d, coeff, eps_p)
    n_levels = len(ngrid.values)
    j_lo = 0 if g <= 1.0 else -max(
        1, math.ceil(math.log(g) / math.log1p(eps_p) - 1e-12)
    )
    var_per_cluster = 1 - j_lo

    size_tuples = len(sgrid.values) ** k
    nominal = None  # filled per repeat; mean-tuple counts vary
    evaluator = _Theorem1Evaluator(
        ps, k, f, eps_p, sgrid, n_levels, j_lo, req.budgets
    )

    best = None
    per_repeat_costs: list[float] = []
    mean_counts: list[int] = []
    for r in range(repeats):
        rng = np.random.default_rng(req.seed + r)
        tuples = approx_means_product(ps, k, scfg, rng).tuples
        tuples = _canonical_mean_tuples(tuples)
        mean_counts.append(tuples.shape[0])
        work_r = tuples.shape[0] * size_tuples * evaluator.cells
        if work_r > req.budgets.max_parameter_combinations:
            raise BudgetExceededError(
                f"theorem1 assembly stage: {work_r} parameter evaluations"
                f" exceed the cap of {req.budgets.max_parameter_combinations}",
                requested=work_r,
                cap=req.budgets.max_parameter_combinations,
            )
        found = evaluator.best_over(tuples)
        per_repeat_costs.append(found[0])
        if best is None or found[0] < best[0]:
            best = found

    cost_internal, weights, means, variances = best
    mixture = SphericalMixture.from_arrays(weights, means, variances)
    nominal = sum(m * size_tuples * n_levels * var_per_cluster**k for m in mean_counts)
    certificate = {
        "algorithm": "theorem1",
        "epsilon": float(req.epsilon),
        "delta": float(req.delta),
        "stage_epsilon": float(eps_p),
        "f": float(f),
        "g": float(g),
        "alpha": float(alpha),
        "gonzalez_radius": float(cert_gz.radius),
        "nll_bound_coeff": float(cert_gz.nll_bound_coeff),
        "grid_sizes": {
            "size": len(sgrid.values),
            "nll": n_levels,
            "variance_per_cluster": var_per_cluster,
        },
        "mean_tuples_per_repeat": mean_counts,
        "size_tuples": size_tuples,
        "candidate_counts": {
            "nominal_parameter_combinations": int(nominal),
            "evaluated_combinations": int(evaluator.evaluated),
        },
        "repeats": repeats,
        "per_repeat_costs": [float(c) for c in per_repeat_costs],
        "seed": req.seed,
        "threads": req.threads,
    }
    return _finish(ps, req, mixture, certificate, objective="cmle")


def _canonical_mean_tuples(tuples: np.ndarray) -> np.ndarray:
    """Sort each tuple's means lexicographically and drop duplicates.

    Valid because every per-cluster grid downstream is identical, so the
    evaluated shape product is permutation-symmetric.
    """
    m, k, d = tuples.shape
    if k == 1:
        canon = tuples
    else:
        canon = np.empty_like(tuples)
        for i in range(m):
            rows = sorted(map(tuple, tuples[i]))
            canon[i] = np.array(rows)
    flat = canon.reshape(m, -1)
    seen: set[bytes] = set()
    keep = []
    for i in range(m):
        key = flat[i].tobytes()
        if key not in seen:
            seen.add(key)
            keep.append(i)
    return canon[keep]


class _Theorem1Evaluator:
    """Scores every (mean tuple, size tuple, objective level, variance level)
    combination.

    The variance candidates produced for size exponent i_k, grid level i and
    ladder step j depend only on e = i + j + 1 - i_k, so per size tuple the
    scan runs over the integer grid a = e + i_k (shared across clusters) with
    a feasibility mask encoding "some common level i realizes these steps".
    """

    def __init__(self, ps, k, f, eps_p, sgrid, n_levels, j_lo, budgets):
        self.ps = ps
        self.k = k
        self.d = ps.dim
        self.eps_p = eps_p
        self.f = f
        self.n_levels = n_levels
        self.j_lo = j_lo
        self.budgets = budgets
        self.evaluated = 0

        self.exponents = sgrid.exponents
        self.size_values = np.asarray(sgrid.values, dtype=float)
        self.a_lo = j_lo + 2
        self.a_hi = n_levels + 1
        self.width = self.a_hi - self.a_lo + 1
        if self.width**k > budgets.max_grid_cells:
            raise BudgetExceededError(
                f"variance-level grid of {self.width ** k} cells exceeds"
                f" the cap of {budgets.max_grid_cells}",
                requested=self.width**k,
                cap=budgets.max_grid_cells,
            )

        self.e_lo = self.a_lo - max(self.exponents)
        e_hi = self.a_hi - min(self.exponents)
        e_vals = np.arange(self.e_lo, e_hi + 1, dtype=float)
        self.var_table = np.exp(
            f * (1.0 + eps_p) ** e_vals - LOG_TWO_PI - 1.0
        )
        self.log_term = 0.5 * self.d * np.log(2.0 * math.pi * self.var_table)
        self.inv_term = 0.5 / self.var_table

        self.mask = self._level_mask()
        self.cells = self.width**k
        self.size_index_tuples = list(
            itertools.product(range(len(self.size_values)), repeat=k)
        )

    def _level_mask(self) -> np.ndarray:
        a_vals = np.arange(self.a_lo, self.a_hi + 1)
        grids = np.meshgrid(*([a_vals] * self.k), indexing="ij")
        amax = reduce(np.maximum, grids)
        amin = reduce(np.minimum, grids)
        lower = np.maximum(1, amax - 1)
        upper = np.minimum(self.n_levels, amin - 1 - self.j_lo)
        return lower <= upper

    def best_over(self, mean_tuples: np.ndarray):
        """Best (cost, weights, means, variances) over all combinations for
        the given mean tuples."""
        best_cost = math.inf
        best = None
        n_feasible = int(self.mask.sum())
        for t in range(mean_tuples.shape[0]):
            means = mean_tuples[t]
            base = self._base_costs(means)
            for idx in self.size_index_tuples:
                sizes = self.size_values[list(idx)]
                weights = sizes / sizes.sum()
                log_w = np.log(weights)
                slices = []
                for c in range(self.k):
                    off = self.a_lo - self.exponents[idx[c]] - self.e_lo
                    slices.append(base[c][off : off + self.width] - log_w[c])
                total = _min_cost_grid(slices)
                total = np.where(self.mask, total, math.inf)
                flat = int(np.argmin(total))
                cost = float(total.reshape(-1)[flat])
                self.evaluated += n_feasible
                if cost < best_cost:
                    a_idx = np.unravel_index(flat, total.shape)
                    variances = np.array(
                        [
                            self.var_table[
                                self.a_lo
                                + a_idx[c]
                                - self.exponents[idx[c]]
                                - self.e_lo
                            ]
                            for c in range(self.k)
                        ]
                    )
                    best_cost = cost
                    best = (cost, weights.copy(), means.copy(), variances)
        if best is None:
            raise ValueError("no parameter combination was feasible")
        return best

    def _base_costs(self, means: np.ndarray) -> list[np.ndarray]:
        d2 = _sq_dists(self.ps.points, means)  # (n, k)
        out = []
        for c in range(self.k):
            out.append(
                self.log_term[:, None] + self.inv_term[:, None] * d2[:, c][None, :]
            )
        return out


def _min_cost_grid(slices: list[np.ndarray]) -> np.ndarray:
    """Given per-cluster cost arrays (A_c, n), return the (A_1, ..., A_K)
    array of summed per-point minima, evaluated with bounded memory."""
    k = len(slices)
    if k == 1:
        return slices[0].sum(axis=1)
    if k == 2:
        return np.minimum(slices[0][:, None, :], slices[1][None, :, :]).sum(axis=2)
    # Fold the trailing clusters into one block while it stays small, then
    # iterate over the leading axes.
    n = slices[0].shape[1]
    cap = 4_000_000
    suffix = slices[-1]
    suffix_axes = [slices[-1].shape[0]]
    j = k - 2
    while j >= 1 and suffix.size * slices[j].shape[0] <= cap:
        lead = slices[j].reshape((slices[j].shape[0],) + (1,) * len(suffix_axes) + (n,))
        suffix = np.minimum(lead, suffix[None])
        suffix_axes.insert(0, slices[j].shape[0])
        j -= 1
    lead_axes = [slices[t].shape[0] for t in range(j + 1)]
    out = np.empty(tuple(lead_axes) + tuple(suffix_axes))
    for idx in np.ndindex(*lead_axes):
        lead_min = reduce(
            np.minimum, [slices[t][idx[t]] for t in range(j + 1)]
        )
        out[idx] = np.minimum(lead_min, suffix).sum(axis=-1)
    return out


# ---------------------------------------------------------------------------
# pipeline 2 and special cases: fixed-shape search behind grids
# ---------------------------------------------------------------------------


def solve_theorem2(ps: PointSet, req: SolveRequest) -> SolveResult:
    """Sample-and-prune search run for every variance tuple from the
    well-defined grid and every weight vector from the size grid."""
    if req.balance is None:
        raise ValueError("theorem2 needs a balance profile (f)")
    if not validate_instance(ps).well_defined:
        import warnings

        warnings.warn(
            "instance violates the minimum-separation restriction; the"
            " variance grid's floor may not bracket the optimum",
            stacklevel=2,
        )
    eps_grid = req.epsilon / 3.0
    vgrid = variance_grid_welldefined(max(ps.max_sq_dist, 1e-12), eps_grid)
    sgrid = size_grid(ps.n, BalanceProfile(req.balance.f), eps_grid)
    weight_vectors, weight_nominal = _weight_vectors_from_size_grid(
        len(sgrid.values), eps_grid, req.k
    )
    certificate = {
        "algorithm": "theorem2",
        "epsilon": float(req.epsilon),
        "delta": float(req.delta),
        "grid_epsilon": float(eps_grid),
        "f": float(req.balance.f),
        "grid_sizes": {
            "variance": len(vgrid.values),
            "size": len(sgrid.values),
        },
        "shape_counts": {
            "nominal": len(vgrid.values) ** req.k * weight_nominal,
            "distinct_weight_vectors": len(weight_vectors),
        },
    }
    return _fixed_shape_pipeline(
        ps,
        req,
        var_values=np.asarray(vgrid.values),
        weight_vectors=weight_vectors,
        objective="cmle",
        certificate=certificate,
    )


def solve_wkm(ps: PointSet, req: SolveRequest) -> SolveResult:
    """Weighted k-means: all variances pinned to 1/(2 beta), weight
    candidates from the size grid, sample-and-prune for the means."""
    if req.balance is None:
        raise ValueError("wkm needs a balance profile (f)")
    eps_grid = req.epsilon / 3.0
    sgrid = size_grid(ps.n, BalanceProfile(req.balance.f), eps_grid)
    weight_vectors, weight_nominal = _weight_vectors_from_size_grid(
        len(sgrid.values), eps_grid, req.k
    )
    fixed_var = 1.0 / (2.0 * req.beta)
    certificate = {
        "algorithm": "wkm",
        "epsilon": float(req.epsilon),
        "delta": float(req.delta),
        "grid_epsilon": float(eps_grid),
        "beta": float(req.beta),
        "fixed_variance": fixed_var,
        "f": float(req.balance.f),
        "grid_sizes": {"variance": 1, "size": len(sgrid.values)},
        "shape_counts": {
            "nominal": weight_nominal,
            "distinct_weight_vectors": len(weight_vectors),
        },
    }
    return _fixed_shape_pipeline(
        ps,
        req,
        var_values=np.array([fixed_var]),
        weight_vectors=weight_vectors,
        objective=_WKM,
        certificate=certificate,
    )


def solve_ucmle(ps: PointSet, req: SolveRequest) -> SolveResult:
    """Uniform weights 1/k, variance candidates from the well-defined grid,
    sample-and-prune for the means."""
    if not validate_instance(ps).well_defined:
        import warnings

        warnings.warn(
            "instance violates the minimum-separation restriction; the"
            " variance grid's floor may not bracket the optimum",
            stacklevel=2,
        )
    eps_grid = req.epsilon / 3.0
    vgrid = variance_grid_welldefined(max(ps.max_sq_dist, 1e-12), eps_grid)
    weight_vectors = [np.full(req.k, 1.0 / req.k)]
    certificate = {
        "algorithm": "ucmle",
        "epsilon": float(req.epsilon),
        "delta": float(req.delta),
        "grid_epsilon": float(eps_grid),
        "grid_sizes": {"variance": len(vgrid.values), "size": 1},
        "shape_counts": {
            "nominal": len(vgrid.values) ** req.k,
            "distinct_weight_vectors": 1,
        },
    }
    return _fixed_shape_pipeline(
        ps,
        req,
        var_values=np.asarray(vgrid.values),
        weight_vectors=weight_vectors,
        objective="cmle",
        certificate=certificate,
    )


def _weight_vectors_from_size_grid(
    levels: int, eps: float, k: int
) -> tuple[list[np.ndarray], int]:
    """Distinct weight vectors the size grid can induce.

    Ratios depend only on the exponent differences, so vectors are built
    from canonical difference tuples; the nominal tuple count is levels^k.
    """
    nominal = levels**k
    if levels == 1:
        return [np.full(k, 1.0 / k)], nominal
    vectors = []
    for diffs in itertools.product(range(levels), repeat=k):
        if min(diffs) != 0:
            continue
        raw = (1.0 + eps) ** np.array(diffs, dtype=float)
        vectors.append(raw / raw.sum())
    return vectors, nominal


def _resolve_abs_config(req: SolveRequest) -> AbsConfig:
    alpha = req.alpha
    if alpha is None and req.balance is not None:
        alpha = min(1.0, 1.0 / req.balance.f)
    return AbsConfig(
        epsilon=req.epsilon,
        delta=req.delta,
        alpha=alpha,
        sample_size=req.sample_size,
        subset_size=req.subset_size,
        max_candidates=req.budgets.max_mean_tuples,
        max_nodes=req.budgets.max_nodes,
    )


def _fixed_shape_pipeline(
    ps: PointSet,
    req: SolveRequest,
    var_values: np.ndarray,
    weight_vectors: list[np.ndarray],
    objective: str,
    certificate: dict,
) -> SolveResult:
    k = req.k
    cfg = _resolve_abs_config(req)
    repeats = (
        req.repeats
        if req.repeats is not None
        else max(1, math.ceil(math.log(1.0 / req.delta)))
    )
    n_shapes = len(var_values) ** k * len(weight_vectors)
    if n_shapes > req.budgets.max_parameter_combinations:
        raise BudgetExceededError(
            f"shape stage: {n_shapes} (variance, weight) combinations exceed"
            f" the cap of {req.budgets.max_parameter_combinations}",
            requested=n_shapes,
            cap=req.budgets.max_parameter_combinations,
        )

    best = None
    per_repeat_costs = []
    candidate_counts = []
    for r in range(repeats):
        rng = np.random.default_rng(req.seed + r)
        if k <= 2:
            found, n_cands = _fixed_shape_repeat_vectorized(
                ps, k, cfg, rng, var_values, weight_vectors, objective, req.beta
            )
        else:
            found, n_cands = _fixed_shape_repeat_by_shape(
                ps, k, cfg, rng, var_values, weight_vectors, objective, req.beta
            )
        candidate_counts.append(n_cands)
        per_repeat_costs.append(found[0])
        if best is None or found[0] < best[0]:
            best = found

    cost_internal, mixture = best
    certificate.update(
        {
            "repeats": repeats,
            "per_repeat_costs": [float(c) for c in per_repeat_costs],
            "mean_candidates_per_repeat": candidate_counts,
            "alpha": float(cfg.resolved_alpha(k)),
            "seed": req.seed,
            "threads": req.threads,
        }
    )
    return _finish(ps, req, mixture, certificate, objective, req.beta)


def _fixed_shape_repeat_vectorized(
    ps, k, cfg, rng, var_values, weight_vectors, objective, beta
):
    """One repeat for k <= 2.

    With at most one component fixed at any pruning step, the prune order is
    the distance order regardless of the shape, so every shape's search
    visits the same candidate mean tuples; they are enumerated once and all
    (candidate, shape) pairs are scored in bulk.
    """
    ref_shape = FixedShape(
        variances=np.full(k, float(var_values[0])),
        weights=np.full(k, 1.0 / k),
    )
    candidates, stats = enumerate_mean_candidates(ps, k, ref_shape, cfg, rng)
    w_mat = np.stack(weight_vectors)  # (W, k)
    log_w = np.log(w_mat)
    v = np.asarray(var_values, dtype=float)
    d = ps.dim
    n = ps.n

    best_cost = math.inf
    best_pick = None
    for cand in candidates:
        kc = cand.shape[0]
        if kc == 0:
            continue
        d2 = _sq_dists(ps.points, cand)  # (n, kc)
        if objective == _WKM:
            # (W, n) per component: beta * d2 - ln w
            comps = [
                beta * d2[:, c][None, :] - log_w[:, c][:, None] for c in range(kc)
            ]
            total = reduce(np.minimum, comps).sum(axis=1)  # (W,)
            flat = int(np.argmin(total))
            cost = float(total[flat])
            if cost < best_cost:
                best_cost = cost
                best_pick = (cand, (0,) * kc, flat)
        else:
            base = [
                0.5 * d * np.log(2.0 * math.pi * v)[:, None]
                + d2[:, c][None, :] * (0.5 / v)[:, None]
                for c in range(kc)
            ]  # (V, n) each
            if kc == 1:
                per_var = base[0].sum(axis=1)  # (V,)
                total = per_var[:, None] - n * log_w[:, 0][None, :]  # (V, W)
                flat = int(np.argmin(total))
                vi, wi = np.unravel_index(flat, total.shape)
                cost = float(total[vi, wi])
                if cost < best_cost:
                    best_cost = cost
                    best_pick = (cand, (int(vi),), int(wi))
            else:
                a = base[0][:, None, None, :] - log_w[None, None, :, 0][..., None]
                b = base[1][None, :, None, :] - log_w[None, None, :, 1][..., None]
                total = np.minimum(a, b).sum(axis=3)  # (V, V, W)
                flat = int(np.argmin(total))
                vi, vj, wi = np.unravel_index(flat, total.shape)
                cost = float(total[vi, vj, wi])
                if cost < best_cost:
                    best_cost = cost
                    best_pick = (cand, (int(vi), int(vj)), int(wi))
    if best_pick is None:
        raise ValueError("search produced no usable candidate")
    cand, v_idx, w_idx = best_pick
    kc = cand.shape[0]
    variances = np.array([float(var_values[i]) for i in v_idx])
    weights = np.asarray(w_mat[w_idx][:kc], dtype=float)
    weights = weights / weights.sum()
    mixture = SphericalMixture.from_arrays(weights, cand, variances)
    return (best_cost, mixture), stats["candidates"]


def _fixed_shape_repeat_by_shape(
    ps, k, cfg, rng, var_values, weight_vectors, objective, beta
):
    """One repeat for k >= 3: run the search separately per shape (pruning
    may depend on the shape once two or more components are fixed)."""
    best_cost = math.inf
    best_mixture = None
    n_cands = 0
    for var_tuple in itertools.product(var_values, repeat=k):
        for w in weight_vectors:
            shape = FixedShape(
                variances=np.asarray(var_tuple, dtype=float), weights=w
            )
            candidates, stats = enumerate_mean_candidates(ps, k, shape, cfg, rng)
            n_cands = max(n_cands, stats["candidates"])
            for cand in candidates:
                if cand.shape[0] == 0:
                    continue
                if objective == _WKM:
                    d2 = _sq_dists(ps.points, cand)
                    costs = beta * d2 - np.log(shape.weights[: cand.shape[0]])[None, :]
                    cost = float(costs.min(axis=1).sum())
                else:
                    cost = score_candidate(ps, cand, shape)
                if cost < best_cost:
                    best_cost = cost
                    best_mixture = candidate_mixture(cand, shape)
    if best_mixture is None:
        raise ValueError("search produced no usable candidate")
    return (best_cost, best_mixture), n_cands


# ---------------------------------------------------------------------------
# baseline and shared finishing
# ---------------------------------------------------------------------------


def solve_cem(ps: PointSet, req: SolveRequest) -> SolveResult:
    cfg = CemConfig(seed=req.seed, degeneracy_policy="reassign")
    mixture, part, trace, per_restart = cem_best_of(ps, req.k, cfg, req.restarts)
    certificate = {
        "algorithm": "cem",
        "restarts": req.restarts,
        "per_restart_costs": [float(c) for c in per_restart],
        "iterations": trace.iterations,
        "terminated_by": trace.terminated_by,
        "seed": req.seed,
        "threads": req.threads,
    }
    return _finish(ps, req, mixture, certificate, objective="cmle")


def _finish(
    ps: PointSet,
    req: SolveRequest,
    mixture: SphericalMixture,
    certificate: dict,
    objective: str,
    beta: float | None = None,
) -> SolveResult:
    if req.polish and req.algorithm in _POLISHABLE:
        polished = _polish(ps, req, mixture)
        if polished is not None:
            before = objective_value(ps, mixture, objective, beta)
            after = objective_value(ps, polished, objective, beta)
            certificate["polish"] = {"before": float(before), "after": float(after)}
            if after <= before:
                mixture = polished
    cost = objective_value(ps, mixture, objective, beta)
    partition = induce_partition(ps, mixture)
    return SolveResult(
        mixture=mixture, partition=partition, cost=cost, certificate=certificate
    )


def _polish(ps, req, mixture) -> SphericalMixture | None:
    cfg = CemConfig(
        init="given-mixture", degeneracy_policy="reassign", seed=req.seed
    )
    try:
        polished, _, _ = cem_run(ps, mixture.k, cfg, init_mixture=mixture)
    except (CemDegeneracyError, ValueError):
        return None
    return polished
