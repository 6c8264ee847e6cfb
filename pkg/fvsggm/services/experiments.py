"""
Synthetic models and experiment harnesses.

Generators for fractional Brownian motion covariances and random FVS models,
plus the KL-vs-k sweep, greedy recovery, initialization sensitivity and
log-determinant timing studies.
"""
import logging
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg as la

from fvsggm.core.config import settings
from fvsggm.core.exceptions import InvalidParameterError
from fvsggm.models.experiment import (
    RecoveryReport,
    RecoveryRun,
    SensitivityReport,
    SweepResult,
    SweepRow,
    TimingRow,
)
from fvsggm.models.fit import LatentTrace
from fvsggm.models.fvs import FvsModel
from fvsggm.models.gaussian import GaussianDensity, MatrixLike, Partition, SymMatrix
from fvsggm.models.tree import TreeMatrix
from fvsggm.services.fvs_inference import fvs_log_det
from fvsggm.services.gaussian_core import empirical_stats, inv_pd, kl_zero_mean, log_det_pd, sample_gaussian
from fvsggm.services.learn_latent import latent_chow_liu
from fvsggm.services.learn_observed import learn_greedy_fvs
from fvsggm.services.tree_ops import chow_liu, random_spanning_tree, tree_bp, tree_signature
from fvsggm.tasks.pool import parallel_map

logger = logging.getLogger(__name__)

FBM_GRID = "t_i = i/n, i = 1..n"
RATIO_SLACK = 1e-9
TREE_CORRELATION_RANGE = (0.35, 0.6)
FEEDBACK_MARGIN = 0.5


def fbm_covariance(n: int, hurst: float) -> SymMatrix:
    """
    Covariance of fractional Brownian motion sampled at t_i = i/n.

    S(t1, t2) = 1/2 (|t1|^2H + |t2|^2H - |t1 - t2|^2H). t = 0 is excluded since
    its variance is zero.

    Args:
        n: Number of time samples, at least 2
        hurst: Hurst parameter in (0, 1)

    Returns:
        n x n positive definite covariance
    """
    if n < 2:
        raise InvalidParameterError(f"fBM needs at least 2 time samples, got {n}")
    if not 0.0 < hurst < 1.0:
        raise InvalidParameterError(f"Hurst parameter must lie in (0, 1), got {hurst}")
    t = np.arange(1, n + 1, dtype=float) / n
    two_h = 2.0 * hurst
    power = t ** two_h
    cov = 0.5 * (power[:, None] + power[None, :] - np.abs(t[:, None] - t[None, :]) ** two_h)
    return SymMatrix(cov)


def random_fvs_model(n: int, k: int, seed: Optional[int] = None) -> FvsModel:
    """
    Random model in Q_F with |F| = k.

    F is a uniform k-subset, the tree over the remaining nodes a uniform labelled
    tree. Each tree edge gets a correlation rho given F with |rho| ~ U[0.35, 0.6]
    and a random sign. On unit conditional variances that is J_ij = -rho / (1 - rho^2)
    on the edge and J_ii = 1 + sum of rho^2 / (1 - rho^2) over the incident edges,
    so every tree |J_ij| lies in [0.4, 0.94]. F-T and F-F entries are i.i.d.
    U[-1, 1]. The identity multiple goes on J_F only:
    c = |lambda_min(J_F - J_M^T J_T^-1 J_M)| + 0.5.

    Raises:
        InvalidParameterError: If n < k + 2
    """
    if k < 0 or n < k + 2:
        raise InvalidParameterError(f"a random FVS model needs n >= k + 2 and k >= 0, got n={n}, k={k}")
    rng = np.random.default_rng(seed)
    fvs = sorted(int(v) for v in rng.choice(n, size=k, replace=False))
    part = Partition.from_fvs(n, fvs)
    tree = random_spanning_tree(part.tree_nodes, rng)

    low, high = TREE_CORRELATION_RANGE
    num_edges = len(tree.edges)
    rho = rng.uniform(low, high, size=num_edges) * rng.choice([-1.0, 1.0], size=num_edges)
    ratio = rho * rho / (1.0 - rho * rho)
    diag = np.ones(tree.size)
    edges = tree.local_edges
    np.add.at(diag, edges[:, 0], ratio)
    np.add.at(diag, edges[:, 1], ratio)
    j_t = TreeMatrix(tree=tree, diag=diag, off=-rho / (1.0 - rho * rho))

    j_m = rng.uniform(-1.0, 1.0, size=(tree.size, k))
    j_f = np.zeros((k, k))
    if k:
        upper = np.triu_indices(k, 1)
        j_f[upper] = rng.uniform(-1.0, 1.0, size=len(upper[0]))
        j_f = j_f + j_f.T
        schur = j_f - j_m.T @ tree_bp(j_t, j_m).solves
        lam_min = float(la.eigvalsh(0.5 * (schur + schur.T), subset_by_index=[0, 0])[0])
        j_f[np.diag_indices(k)] = abs(lam_min) + FEEDBACK_MARGIN

    return FvsModel(part=part, j_f=j_f, j_m=j_m, j_t=j_t)


def model_covariance(model: FvsModel) -> SymMatrix:
    """Dense J^-1 of a model in global node order."""
    return SymMatrix(inv_pd(model.assemble()))


def _best_latent_run(sigma: SymMatrix, k: int, seeds: Sequence[int], iters: Optional[int],
                     tol: Optional[float], threads: Optional[int]) -> Tuple[LatentTrace, List[float], float]:
    def run(seed: int) -> Tuple[LatentTrace, float]:
        start = time.perf_counter()
        trace = latent_chow_liu(sigma, k, max_iters=iters, tol=tol, seed=seed)
        return trace, time.perf_counter() - start

    results = parallel_map(run, seeds, threads)
    best = 0
    for idx, (trace, _) in enumerate(results):
        if trace.final.objective < results[best][0].final.objective:
            best = idx
    return results[best][0], [trace.final.objective for trace, _ in results], results[best][1]


def kl_vs_k_sweep(sigma_t: MatrixLike, k_values: Sequence[int], iters: Optional[int] = None,
                  seeds: Optional[Sequence[int]] = None, tol: Optional[float] = None,
                  threads: Optional[int] = None, metadata: Optional[Dict[str, Any]] = None) -> SweepResult:
    """
    Latent Chow-Liu KL divergence as a function of the latent FVS size.

    k = 0 is the plain Chow-Liu tree; each k >= 1 keeps the best final objective
    over the seeds. kl_ratio_vs_tree divides by the Chow-Liu divergence.

    Args:
        sigma_t: Positive definite covariance of the observed nodes
        k_values: FVS sizes to evaluate
        iters: Iterations per run (default: settings.LATENT_MAX_ITERS)
        seeds: Initialization seeds (default: 0..settings.SWEEP_SEEDS-1)
        tol: Early-stop tolerance (default: settings.LATENT_TOL)
        threads: Worker cap for the seeds of one k
        metadata: Extra entries for the result metadata

    Raises:
        InvalidParameterError: If k_values is empty or holds a negative size
    """
    k_values = [int(k) for k in k_values]
    if not k_values:
        raise InvalidParameterError("at least one FVS size is required")
    if any(k < 0 for k in k_values):
        raise InvalidParameterError(f"FVS sizes must be nonnegative, got {k_values}")
    sigma = sigma_t if isinstance(sigma_t, SymMatrix) else SymMatrix(sigma_t)
    seeds = list(range(settings.SWEEP_SEEDS)) if seeds is None else [int(s) for s in seeds]
    if not seeds:
        raise InvalidParameterError("at least one seed is required")
    n = sigma.dim

    start = time.perf_counter()
    sigma_cl, _ = chow_liu(sigma)
    tree_kl = kl_zero_mean(sigma, sigma_cl)
    tree_seconds = time.perf_counter() - start
    logger.info("Chow-Liu KL for n=%d: %.6g", n, tree_kl)

    rows: List[SweepRow] = []
    seed_objectives: Dict[int, List[float]] = {}
    for k in k_values:
        if k == 0:
            rows.append(SweepRow(n=n, k=0, kl_value=tree_kl, kl_ratio_vs_tree=1.0, iterations=0, wall_time=tree_seconds))
            continue
        trace, objectives, seconds = _best_latent_run(sigma, k, seeds, iters, tol, threads)
        seed_objectives[k] = objectives
        kl = trace.final.objective
        ratio = kl / tree_kl if tree_kl > 0 else 0.0
        if ratio > 1.0 + RATIO_SLACK:
            logger.warning("k=%d ends above the Chow-Liu divergence (ratio %.6g)", k, ratio)
        logger.info("n=%d k=%d: KL %.6g (ratio %.4g) after %d iterations", n, k, kl, ratio, trace.iterations)
        rows.append(SweepRow(n=n, k=k, kl_value=kl, kl_ratio_vs_tree=ratio,
                             iterations=trace.iterations, wall_time=seconds))

    info: Dict[str, Any] = {
        "algorithm": "latent-chow-liu",
        "seeds": seeds,
        "iters": settings.LATENT_MAX_ITERS if iters is None else iters,
        "seed_objectives": {str(k): v for k, v in seed_objectives.items()},
    }
    info.update(metadata or {})
    return SweepResult(rows=rows, metadata=info)


def derive_seeds(seed: int) -> Tuple[int, int]:
    """Independent (model, sample) seeds for one generated instance."""
    state = np.random.SeedSequence(seed).generate_state(2)
    return int(state[0]), int(state[1])


def _recovery_run(n: int, k: int, samples_per_run: int, seed: int) -> RecoveryRun:
    model_seed, sample_seed = derive_seeds(seed)
    truth = random_fvs_model(n, k, model_seed)
    density = GaussianDensity.zero_mean(model_covariance(truth))
    stats = empirical_stats(sample_gaussian(density, samples_per_run, sample_seed))
    trace = learn_greedy_fvs(stats, k, threads=1)

    learned = trace.final_fit
    fvs_match = set(learned.part.fvs) == set(truth.part.fvs)
    tree_match = fvs_match and learned.tree.edge_set == truth.tree.edge_set
    return RecoveryRun(
        seed=seed,
        success=fvs_match and tree_match,
        true_fvs=truth.part.fvs,
        learned_fvs=learned.part.fvs,
        d_values=trace.d_values,
        fvs_match=fvs_match,
        tree_match=tree_match,
    )


def greedy_recovery_study(runs: int, n: int, k: int, samples_per_run: int, seed: int = 0,
                          threads: Optional[int] = None) -> RecoveryReport:
    """
    Repeatedly sample a random FVS model and check greedy structure recovery.

    Run r uses seed + r. A run succeeds when the learned FVS equals the true one
    as a set and the learned tree has exactly the true edges.

    Raises:
        InvalidParameterError: On nonpositive counts or n < k + 2
    """
    if runs < 1:
        raise InvalidParameterError(f"runs must be positive, got {runs}")
    if samples_per_run < 2:
        raise InvalidParameterError(f"at least 2 samples per run are required, got {samples_per_run}")
    if k < 0 or n < k + 2:
        raise InvalidParameterError(f"recovery needs n >= k + 2 and k >= 0, got n={n}, k={k}")

    logger.info("Greedy recovery: %d runs, n=%d, k=%d, %d samples each", runs, n, k, samples_per_run)
    results = parallel_map(lambda r: _recovery_run(n, k, samples_per_run, seed + r), range(runs), threads)
    report = RecoveryReport(runs=results, n=n, k=k, samples_per_run=samples_per_run)
    logger.info("Greedy recovery: %d/%d successes", report.successes, runs)
    return report


def _agreement_iteration(signatures: Dict[int, List[str]]) -> Optional[int]:
    length = max(len(s) for s in signatures.values())

    def at(sigs: List[str], t: int) -> str:
        return sigs[min(t, len(sigs) - 1)]

    agreement = None
    for t in range(length - 1, -1, -1):
        if len({at(sigs, t) for sigs in signatures.values()}) != 1:
            break
        agreement = t
    return agreement


def init_sensitivity_study(sigma_t: MatrixLike, k: int, seeds: Sequence[int], iters: Optional[int] = None,
                           tol: Optional[float] = None, threads: Optional[int] = None) -> SensitivityReport:
    """
    Run latent Chow-Liu from several random initializations and track the
    observed-tree structure per iteration.

    A run that stops early keeps its last structure for the later iterations.
    agreement_iteration is the first iteration from which every seed has the
    same tree for good, or None if they never agree.
    """
    seeds = [int(s) for s in seeds]
    if not seeds:
        raise InvalidParameterError("at least one seed is required")
    sigma = sigma_t if isinstance(sigma_t, SymMatrix) else SymMatrix(sigma_t)
    traces = parallel_map(lambda s: latent_chow_liu(sigma, k, max_iters=iters, tol=tol, seed=s), seeds, threads)

    signatures = {s: [tree_signature(state.tree_edges) for state in trace.states] for s, trace in zip(seeds, traces)}
    objectives = {s: trace.objectives for s, trace in zip(seeds, traces)}
    agreement = _agreement_iteration(signatures)
    logger.info("Initialization study k=%d over %d seeds: agreement at iteration %s", k, len(seeds), agreement)
    return SensitivityReport(seeds=seeds, signatures=signatures, objectives=objectives, agreement_iteration=agreement)


def log_det_timing_study(n_values: Sequence[int], k: int, seed: int = 0) -> List[TimingRow]:
    """
    Wall time of the FVS log-determinant against a dense Cholesky, per n.

    The runs are sequential so the timings do not compete for cores.
    """
    if not n_values:
        raise InvalidParameterError("at least one problem size is required")
    rows = []
    for n in n_values:
        model = random_fvs_model(int(n), k, seed)
        dense = model.assemble()

        start = time.perf_counter()
        fast = fvs_log_det(model)
        fvs_seconds = time.perf_counter() - start

        start = time.perf_counter()
        reference = log_det_pd(dense)
        dense_seconds = time.perf_counter() - start

        logger.info("n=%d k=%d: FVS %.4fs, dense %.4fs", n, k, fvs_seconds, dense_seconds)
        rows.append(TimingRow(n=int(n), k=k, fvs_seconds=fvs_seconds, dense_seconds=dense_seconds,
                              abs_difference=abs(fast - reference)))
    return rows
