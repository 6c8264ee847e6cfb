"""
Experiment sweeps: KL against latent FVS size, greedy recovery, initialization
sensitivity and log-determinant timing.
"""
import argparse
import logging
from typing import Any, Dict, List

from fvsggm.cli.arguments import add_threads_option, int_list, nonnegative_int, positive_int
from fvsggm.cli.io import read_matrix_csv, sidecar_path, write_rows_csv, write_text
from fvsggm.core.config import settings
from fvsggm.core.exceptions import InvalidParameterError
from fvsggm.models.gaussian import SymMatrix
from fvsggm.schemas.report import RecoveryReportResponse, SensitivityReportResponse, SweepMetadata
from fvsggm.services.experiments import (
    FBM_GRID,
    fbm_covariance,
    greedy_recovery_study,
    init_sensitivity_study,
    kl_vs_k_sweep,
    log_det_timing_study,
)

logger = logging.getLogger(__name__)

SWEEP_FIELDS = ["n", "k", "kl_value", "kl_ratio_vs_tree", "iterations", "wall_time"]
RECOVERY_FIELDS = ["n", "k", "samples_per_run", "runs", "successes"]
SENSITIVITY_FIELDS = ["seed", "iter", "objective", "tree_edge_hash"]
TIMING_FIELDS = ["n", "k", "fvs_seconds", "dense_seconds", "abs_difference"]


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("sweep", help="run an experiment and write plot-ready CSV")
    kinds = parser.add_subparsers(dest="kind", required=True)

    fbm = kinds.add_parser("fbm", help="KL divergence against latent FVS size on fBM covariances")
    fbm.add_argument("--n", type=int_list, required=True, help="comma list of problem sizes")
    fbm.add_argument("--k", type=int_list, required=True, help="FVS sizes, e.g. 0..7 or 1,3")
    fbm.add_argument("--hurst", type=float, default=0.2)
    fbm.add_argument("--iters", type=positive_int, default=settings.LATENT_MAX_ITERS)
    fbm.add_argument("--tol", type=float, default=settings.LATENT_TOL)
    fbm.add_argument("--seed", type=int, default=0, help="first initialization seed")
    fbm.add_argument("--seeds", type=positive_int, default=settings.SWEEP_SEEDS)
    fbm.add_argument("--out", required=True)
    add_threads_option(fbm)
    fbm.set_defaults(func=sweep_fbm)

    recovery = kinds.add_parser("recovery", help="greedy structure recovery on random FVS models")
    recovery.add_argument("--runs", type=positive_int, required=True)
    recovery.add_argument("--n", type=positive_int, default=20)
    recovery.add_argument("--k", type=nonnegative_int, default=3)
    recovery.add_argument("--samples", type=positive_int, default=1000)
    recovery.add_argument("--seed", type=int, default=0)
    recovery.add_argument("--out", required=True, help="summary CSV")
    recovery.add_argument("--report", help="per-run JSON report (default: <out>.runs.json)")
    add_threads_option(recovery)
    recovery.set_defaults(func=sweep_recovery)

    sensitivity = kinds.add_parser("sensitivity", help="observed-tree structure per iteration across seeds")
    sensitivity.add_argument("--input", help="covariance CSV (default: fBM covariance from --n/--hurst)")
    sensitivity.add_argument("--n", type=positive_int, default=64)
    sensitivity.add_argument("--hurst", type=float, default=0.2)
    sensitivity.add_argument("--k", type=positive_int, required=True)
    sensitivity.add_argument("--seeds", type=positive_int, default=5)
    sensitivity.add_argument("--iters", type=positive_int, default=settings.LATENT_MAX_ITERS)
    sensitivity.add_argument("--tol", type=float, default=0.0)
    sensitivity.add_argument("--out", required=True)
    add_threads_option(sensitivity)
    sensitivity.set_defaults(func=sweep_sensitivity)

    timing = kinds.add_parser("timing", help="FVS against dense log-determinant wall time")
    timing.add_argument("--n", type=int_list, required=True)
    timing.add_argument("--k", type=nonnegative_int, default=5)
    timing.add_argument("--seed", type=int, default=0)
    timing.add_argument("--out", required=True)
    timing.set_defaults(func=sweep_timing)


def sweep_fbm(args: argparse.Namespace) -> None:
    """One row per (n, k); seed objectives and the grid go to <out>.meta.json."""
    if not args.n:
        raise InvalidParameterError("at least one problem size is required")
    if not args.k:
        raise InvalidParameterError("at least one FVS size is required")
    seeds = list(range(args.seed, args.seed + args.seeds))
    rows: List[Dict[str, Any]] = []
    seed_objectives: Dict[str, Any] = {}
    for n in args.n:
        result = kl_vs_k_sweep(
            fbm_covariance(n, args.hurst), args.k, iters=args.iters, seeds=seeds, tol=args.tol,
            threads=args.threads,
        )
        rows.extend(row._asdict() for row in result.rows)
        for k, values in result.metadata["seed_objectives"].items():
            seed_objectives[f"n={n},k={k}"] = values

    write_rows_csv(args.out, SWEEP_FIELDS, rows)
    metadata = SweepMetadata(
        algorithm="latent-chow-liu", seeds=seeds, iters=args.iters, seed_objectives=seed_objectives,
        hurst=args.hurst, grid=FBM_GRID, tol=args.tol,
    )
    write_text(sidecar_path(args.out, ".meta.json"), metadata.model_dump_json(indent=2) + "\n")
    print(f"rows={len(rows)}")


def sweep_recovery(args: argparse.Namespace) -> None:
    report = greedy_recovery_study(args.runs, args.n, args.k, args.samples, seed=args.seed, threads=args.threads)
    write_rows_csv(args.out, RECOVERY_FIELDS, [{
        "n": report.n,
        "k": report.k,
        "samples_per_run": report.samples_per_run,
        "runs": len(report.runs),
        "successes": report.successes,
    }])
    response = RecoveryReportResponse.model_validate(report)
    write_text(args.report or sidecar_path(args.out, ".runs.json"), response.model_dump_json(indent=2) + "\n")
    print(f"successes={report.successes}/{len(report.runs)}")


def sweep_sensitivity(args: argparse.Namespace) -> None:
    if args.input:
        values, _ = read_matrix_csv(args.input)
        sigma = SymMatrix(values)
    else:
        sigma = fbm_covariance(args.n, args.hurst)
    report = init_sensitivity_study(sigma, args.k, range(args.seeds), iters=args.iters, tol=args.tol,
                                    threads=args.threads)
    rows = [
        {"seed": seed, "iter": t, "objective": objective, "tree_edge_hash": signature}
        for seed in report.seeds
        for t, (objective, signature) in enumerate(zip(report.objectives[seed], report.signatures[seed]))
    ]
    write_rows_csv(args.out, SENSITIVITY_FIELDS, rows)
    write_text(sidecar_path(args.out, ".summary.json"),
               SensitivityReportResponse.model_validate(report).model_dump_json(indent=2) + "\n")
    print(f"agreement_iteration={report.agreement_iteration}")


def sweep_timing(args: argparse.Namespace) -> None:
    """Timings are reported, not checked."""
    rows = log_det_timing_study(args.n, args.k, seed=args.seed)
    write_rows_csv(args.out, TIMING_FIELDS, [row._asdict() for row in rows])
    for row in rows:
        logger.info("n=%d: fvs %.4fs dense %.4fs", row.n, row.fvs_seconds, row.dense_seconds)
