"""Hard clustering with spherical Gaussian mixtures: exact desk-scale
oracles, a CEM baseline, and sampling-plus-gridding approximation pipelines
with multiplicative guarantees."""

__version__ = "0.1.0"

from .abs_search import AbsConfig, FixedShape, abs_search, prune_half
from .cem import CemConfig, CemDegeneracyError, CemTrace, cem_best_of, cem_run
from .errors import BudgetExceededError, DegenerateClusterError, InstanceFormatError
from .grids import (
    GonzalezCertificate,
    NllGrid,
    SizeGrid,
    VarianceGrid,
    gonzalez,
    nll_grid,
    size_grid,
    tuple_iterator,
    variance_candidates,
    variance_grid_welldefined,
)
from .model import (
    BalanceProfile,
    CostReport,
    HardPartition,
    PointSet,
    SphericalComponent,
    SphericalMixture,
    VARIANCE_FLOOR,
    complete_nll,
    fit_params,
    induce_partition,
    mean,
    model_nll,
    opt_single,
    partition_nll,
    point_cost,
    posterior,
    separation_threshold,
    validate_balance,
    validate_instance,
    variance,
)
from .oracle import OracleResult, count_partitions, exact_opt_diam, exact_solve
from .sampling import (
    MeanTupleSet,
    SamplingConfig,
    approx_means_product,
    sample_multiset,
    subset_means,
)
from .solvers import (
    ALGORITHMS,
    Budgets,
    SolveRequest,
    SolveResult,
    objective_value,
    solve,
    solve_cem,
    solve_theorem1,
    solve_theorem2,
    solve_ucmle,
    solve_wkm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
