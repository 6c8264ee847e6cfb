"""
Learning commands: observed-FVS and latent-FVS model fitting.
"""
import argparse
import logging
from typing import List, Optional

from fvsggm.cli.arguments import (
    add_input_options,
    add_threads_option,
    int_list,
    load_statistics,
    nonnegative_int,
    positive_int,
)
from fvsggm.cli.io import format_float, sidecar_path, write_rows_csv, write_text
from fvsggm.core.config import settings
from fvsggm.models.fit import LearnMode, ObservedFit
from fvsggm.schemas.model_file import ModelFile, ModelMetadata
from fvsggm.services.learn_latent import latent_chow_liu
from fvsggm.services.learn_observed import conditioned_chow_liu, learn_exact_fvs, learn_greedy_fvs
from fvsggm.services.tree_ops import tree_signature
from fvsggm.tasks.pool import parallel_map

logger = logging.getLogger(__name__)

GREEDY_TRACE_FIELDS = ["step", "node", "label", "d_value"]
LATENT_TRACE_FIELDS = ["iter", "objective", "tree_edge_hash"]


def register(subparsers: argparse._SubParsersAction) -> None:
    observed = subparsers.add_parser("learn-observed", help="fit a model with an observed feedback set")
    add_input_options(observed)
    which = observed.add_mutually_exclusive_group(required=True)
    which.add_argument("--fvs", type=int_list, help="comma list of feedback nodes ('' for a plain tree)")
    which.add_argument("--k", type=nonnegative_int, help="size of the feedback set to search for")
    observed.add_argument("--mode", choices=[m.value for m in LearnMode], default=LearnMode.GREEDY.value)
    observed.add_argument("--out", required=True, help="model file to write")
    observed.add_argument("--trace", help="greedy step trace CSV (default: <out>.trace.csv)")
    observed.add_argument("--with-sigma", action="store_true", help="store the fitted covariance in the model file")
    add_threads_option(observed)
    observed.set_defaults(func=learn_observed)

    latent = subparsers.add_parser("learn-latent", help="fit a model with latent feedback nodes")
    add_input_options(latent)
    latent.add_argument("--k", type=positive_int, required=True, help="number of latent feedback nodes")
    latent.add_argument("--iters", type=positive_int, default=settings.LATENT_MAX_ITERS)
    latent.add_argument("--tol", type=float, default=settings.LATENT_TOL)
    latent.add_argument("--seed", type=int, default=0, help="first initialization seed")
    latent.add_argument("--seeds", type=positive_int, default=1, help="number of initializations; the best is kept")
    latent.add_argument("--out", required=True, help="model file to write")
    latent.add_argument("--trace", help="iteration CSV (default: <out>.trace.csv)")
    add_threads_option(latent)
    latent.set_defaults(func=learn_latent)


def _write_model(path: str, fit_file: ModelFile) -> None:
    write_text(path, fit_file.to_json())
    logger.info("Wrote model file %s", path)


def learn_observed(args: argparse.Namespace) -> None:
    """
    Fit a model in Q_F, either for a given F or for a searched one.

    Greedy runs also write the per-step trace.
    """
    stats, labels, epsilon = load_statistics(args)
    mode = LearnMode(args.mode)
    trace = None

    if args.fvs is not None:
        fit: ObservedFit = conditioned_chow_liu(stats, args.fvs)
        algorithm = "conditioned-chow-liu"
    elif mode is LearnMode.EXACT:
        fit = learn_exact_fvs(stats, args.k, threads=args.threads)
        algorithm = "exact-fvs"
    else:
        trace = learn_greedy_fvs(stats, args.k, threads=args.threads)
        fit = trace.final_fit
        algorithm = "greedy-fvs"

    metadata = ModelMetadata(algorithm=algorithm, objective=fit.divergence, ridge=epsilon)
    model_file = ModelFile.from_model(
        fit.j_ml, metadata, node_labels=labels,
        sigma=fit.sigma_ml.values if args.with_sigma else None,
    )
    _write_model(args.out, model_file)

    if trace is not None:
        rows = [
            {"step": t, "node": step.node, "label": labels[step.node] if labels else "", "d_value": step.d_value}
            for t, step in enumerate(trace.steps, start=1)
        ]
        write_rows_csv(args.trace or sidecar_path(args.out, ".trace.csv"), GREEDY_TRACE_FIELDS, rows)

    print(f"fvs={','.join(str(v) for v in fit.part.fvs)}")
    print(f"divergence={format_float(fit.divergence)}")


def _latent_labels(k: int, labels: Optional[List[str]]) -> Optional[List[str]]:
    if labels is None:
        return None
    return [f"latent_{p}" for p in range(k)] + list(labels)


def learn_latent(args: argparse.Namespace) -> None:
    """
    Run latent Chow-Liu from --seeds initializations and keep the lowest final objective.
    """
    stats, labels, epsilon = load_statistics(args)
    seeds = list(range(args.seed, args.seed + args.seeds))
    traces = parallel_map(
        lambda s: latent_chow_liu(stats.cov, args.k, max_iters=args.iters, tol=args.tol, seed=s),
        seeds,
        args.threads,
    )
    best = 0
    for idx, trace in enumerate(traces):
        if trace.final.objective < traces[best].final.objective:
            best = idx
    trace = traces[best]

    metadata = ModelMetadata(
        algorithm="latent-chow-liu",
        seed=trace.seed,
        iterations=trace.iterations,
        objective=trace.final.objective,
        initial_objective=trace.states[0].objective,
        ridge=epsilon,
        stop_reason=trace.stop_reason.value,
        observed_offset=args.k,
    )
    _write_model(args.out, ModelFile.from_model(trace.final.model, metadata, node_labels=_latent_labels(args.k, labels)))

    rows = [
        {"iter": state.iteration, "objective": state.objective, "tree_edge_hash": tree_signature(state.tree_edges)}
        for state in trace.states[1:]
    ]
    write_rows_csv(args.trace or sidecar_path(args.out, ".trace.csv"), LATENT_TRACE_FIELDS, rows)

    print(f"seed={trace.seed}")
    print(f"iterations={trace.iterations}")
    print(f"initial_objective={format_float(trace.states[0].objective)}")
    print(f"objective={format_float(trace.final.objective)}")
