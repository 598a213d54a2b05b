"""Command-line front end.

Exit codes: 0 success, 1 input/usage error, 2 budget exceeded.  All errors
go to stderr with a machine-parsable ``error: <kind>:`` prefix.  Stochastic
commands require an explicit seed; there is no wall-clock entropy anywhere.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import (
    format_instance,
    instance_digest,
    labels_to_partition,
    load_instance,
    load_labels,
    mixture_to_doc,
    write_document,
)
from .errors import BudgetExceededError, InstanceFormatError
from .generate import generate_instance
from .model import BalanceProfile, validate_balance, validate_instance
from .oracle import DEFAULT_CAP, exact_solve
from .solvers import ALGORITHMS, Budgets, SolveRequest, solve

THREADS_ENV = "HARDGMM_THREADS"


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="hardgmm", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="run a solver on an instance file")
    ps.add_argument("--input", required=True, help="instance file path")
    ps.add_argument("--k", type=int, required=True, help="number of clusters")
    ps.add_argument("--algorithm", required=True, choices=ALGORITHMS)
    ps.add_argument("--epsilon", type=float, help="approximation slack in (0,1)")
    ps.add_argument("--delta", type=float, help="failure probability in (0,1)")
    ps.add_argument("--f", type=float, help="balance constant f")
    ps.add_argument("--g", type=float, help="balance constant g (default from the run)")
    ps.add_argument("--beta", type=float, help="wkm precision: variance = 1/(2 beta)")
    ps.add_argument("--alpha", type=float, help="assumed minimum cluster mass")
    ps.add_argument("--seed", type=int, required=True)
    ps.add_argument("--budget-candidates", type=int, default=None,
                    help="cap on candidate parameter combinations")
    ps.add_argument("--subset-size", type=int, default=None,
                    help="override the sampled subset size")
    ps.add_argument("--sample-size", type=int, default=None,
                    help="override the sampled multiset size")
    ps.add_argument("--repeats", type=int, default=None,
                    help="override the number of independent repeats")
    ps.add_argument("--restarts", type=int, default=8, help="CEM restarts")
    ps.add_argument("--polish", action="store_true",
                    help="refine the result with CEM (theorem1/theorem2/cem)")
    ps.add_argument("--threads", type=int, default=None,
                    help="parallelism ceiling (default: %s)" % THREADS_ENV)
    ps.add_argument("--timing", action="store_true",
                    help="include wall time in the document (breaks byte-determinism)")
    ps.add_argument("--output", default="-", help="output path or '-' for stdout")

    po = sub.add_parser("oracle", help="exact brute-force optimum (small n)")
    po.add_argument("--input", required=True)
    po.add_argument("--k", type=int, required=True)
    po.add_argument("--objective", choices=("cmle", "wkm", "ucmle"), default="cmle")
    po.add_argument("--beta", type=float)
    po.add_argument("--cap", type=int, default=DEFAULT_CAP)
    po.add_argument("--output", default="-")

    pg = sub.add_parser("gen", help="generate a synthetic instance")
    pg.add_argument("--n", type=int, required=True)
    pg.add_argument("--d", type=int, required=True)
    pg.add_argument("--k", type=int, required=True)
    pg.add_argument("--separation", type=float, required=True,
                    help="inter-mean distance as a multiple of sigma")
    pg.add_argument("--sigma", type=float, required=True)
    pg.add_argument("--seed", type=int, required=True)
    pg.add_argument("--output", required=True, help="instance file path")

    pc = sub.add_parser("check", help="validate an instance (and labels)")
    pc.add_argument("--input", required=True)
    pc.add_argument("--labels", default=None)
    pc.add_argument("--f", type=float, default=None)
    pc.add_argument("--g", type=float, default=None)
    pc.add_argument("--output", default="-")

    return parser


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise UsageError(message)


def _cmd_solve(args) -> int:
    ps = load_instance(args.input)
    needs_eps = args.algorithm != "cem"
    if needs_eps:
        _require(args.epsilon is not None, "--epsilon is required for this algorithm")
        _require(args.delta is not None, "--delta is required for this algorithm")
    if args.algorithm in ("theorem1", "theorem2", "wkm"):
        _require(args.f is not None, "--f is required for this algorithm")
    if args.algorithm == "wkm":
        _require(args.beta is not None, "--beta is required for wkm")

    balance = None
    if args.f is not None:
        balance = BalanceProfile(f=args.f, g=args.g)
    budgets = Budgets()
    if args.budget_candidates is not None:
        budgets.max_parameter_combinations = args.budget_candidates
    threads = args.threads
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        threads = int(env) if env else None

    try:
        req = SolveRequest(
            k=args.k,
            algorithm=args.algorithm,
            epsilon=args.epsilon,
            delta=args.delta,
            balance=balance,
            beta=args.beta,
            alpha=args.alpha,
            subset_size=args.subset_size,
            sample_size=args.sample_size,
            repeats=args.repeats,
            restarts=args.restarts,
            polish=args.polish,
            seed=args.seed,
            budgets=budgets,
            threads=threads,
        )
    except ValueError as err:
        raise UsageError(str(err)) from None

    started = time.perf_counter()
    result = solve(ps, req)
    elapsed = time.perf_counter() - started

    doc = {
        "instance": instance_digest(ps),
        "request": {
            "command": "solve",
            "algorithm": args.algorithm,
            "k": args.k,
            "epsilon": args.epsilon,
            "delta": args.delta,
            "f": args.f,
            "g": args.g,
            "beta": args.beta,
            "alpha": args.alpha,
            "seed": args.seed,
            "subset_size": args.subset_size,
            "sample_size": args.sample_size,
            "repeats": args.repeats,
            "restarts": args.restarts,
            "polish": args.polish,
            "budget_candidates": args.budget_candidates,
            "threads": threads,
        },
        "mixture": mixture_to_doc(result.mixture),
        "labels": [int(l) for l in result.partition.labels],
        "cost": float(result.cost),
        "certificate": result.certificate,
    }
    if args.timing:
        doc["timing"] = {"wall_s": elapsed}
    write_document(doc, args.output)
    return 0


def _cmd_oracle(args) -> int:
    ps = load_instance(args.input)
    if args.objective == "wkm":
        _require(args.beta is not None, "--beta is required for objective wkm")
    try:
        result = exact_solve(
            ps, args.k, objective=args.objective, beta=args.beta, cap=args.cap
        )
    except ValueError as err:
        raise UsageError(str(err)) from None
    doc = {
        "instance": instance_digest(ps),
        "request": {
            "command": "oracle",
            "objective": args.objective,
            "k": args.k,
            "beta": args.beta,
            "cap": args.cap,
        },
        "opt": float(result.opt),
        "labels": [int(l) for l in result.best_partition.labels],
        "mixture": mixture_to_doc(result.best_mixture),
        "partitions_scanned": result.partitions_scanned,
    }
    write_document(doc, args.output)
    return 0


def _cmd_gen(args) -> int:
    try:
        inst = generate_instance(
            n=args.n, d=args.d, k=args.k, separation=args.separation,
            sigma=args.sigma, seed=args.seed,
        )
    except ValueError as err:
        raise UsageError(str(err)) from None
    except RuntimeError as err:
        raise BudgetExceededError(str(err)) from None
    out = Path(args.output)
    out.write_text(format_instance(inst.points.points))
    sidecar = {
        "labels": [int(l) for l in inst.labels],
        "means": [[float(x) for x in row] for row in inst.means],
        "sigma": inst.sigma,
        "meta": inst.meta,
    }
    out.with_suffix(out.suffix + ".meta.json").write_text(
        json.dumps(sidecar, indent=2) + "\n"
    )
    return 0


def _cmd_check(args) -> int:
    ps = load_instance(args.input)
    check = validate_instance(ps)
    doc = {
        "instance": instance_digest(ps),
        "well_defined": check.well_defined,
        "min_sq_dist": check.min_sq_dist if check.min_sq_dist != float("inf") else "inf",
        "threshold": check.threshold,
    }
    if args.labels is not None:
        labels = load_labels(args.labels)
        if labels.size != ps.n:
            raise UsageError(
                f"labels file has {labels.size} entries, instance has {ps.n}"
            )
        part = labels_to_partition(labels)
        doc["partition"] = {
            "k": part.k,
            "sizes": [int(s) for s in part.sizes()],
            "well_defined_partition": part.is_well_defined(),
        }
        if args.f is not None:
            prof = BalanceProfile(f=args.f, g=args.g)
            bal = validate_balance(ps, part, prof)
            doc["balance"] = {
                "f": args.f,
                "g": args.g,
                "f_balanced": bal.f_balanced,
                "fg_balanced": bal.fg_balanced,
            }
    write_document(doc, args.output)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "oracle":
            return _cmd_oracle(args)
        if args.command == "gen":
            return _cmd_gen(args)
        return _cmd_check(args)
    except BudgetExceededError as err:
        print(f"error: budget: {err}", file=sys.stderr)
        return 2
    except InstanceFormatError as err:
        print(f"error: input: {err}", file=sys.stderr)
        return 1
    except UsageError as err:
        print(f"error: usage: {err}", file=sys.stderr)
        return 1
    except ValueError as err:
        print(f"error: input: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
