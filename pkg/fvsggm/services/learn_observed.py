"""
Maximum-likelihood learning with an observed feedback vertex set.

Covers the conditioned Chow-Liu fit for a known FVS, recovery of the sparse
information matrix, the set function d(F), exhaustive FVS search and greedy
FVS selection.
"""
import itertools
import logging
import math
from dataclasses import replace
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from fvsggm.core.config import settings
from fvsggm.core.exceptions import (
    EnumerationCapError,
    InvalidParameterError,
    NotPositiveDefiniteError,
    SingularBlockError,
)
from fvsggm.models.fit import GreedyStep, GreedyTrace, ObservedFit
from fvsggm.models.fvs import FvsModel
from fvsggm.models.gaussian import EmpiricalStats, Partition, SymMatrix
from fvsggm.models.tree import SpanningTree
from fvsggm.services.gaussian_core import kl_zero_mean, log_det_pd, schur_conditional, solve_pd
from fvsggm.services.tree_ops import (
    chow_liu,
    max_spanning_tree,
    mutual_information_weights,
    tree_information_matrix,
)
from fvsggm.tasks.pool import parallel_map

logger = logging.getLogger(__name__)


class ConditionalCovariance:
    """
    Conditional covariance of the remaining tree nodes given a growing FVS.

    Each conditioning step is a rank-1 Schur downdate; the log-determinant is
    carried along as ln det C' = ln det C - ln c_vv.
    """

    def __init__(self, labels: Sequence[int], cov: np.ndarray, log_det: float):
        self.labels = list(labels)
        self.cov = cov
        self.log_det = log_det

    @classmethod
    def initial(cls, cov: SymMatrix) -> "ConditionalCovariance":
        a = np.array(cov.values)
        return cls(range(cov.dim), a, log_det_pd(a))

    def condition_on(self, node: int) -> "ConditionalCovariance":
        """
        Raises:
            SingularBlockError: If the node's conditional variance is nonpositive
        """
        pos = self.labels.index(node)
        pivot = self.cov[pos, pos]
        if pivot <= 0:
            raise SingularBlockError(f"conditional variance of node {node} is {pivot:.3g}")
        column = self.cov[:, pos]
        updated = self.cov - np.outer(column, column) / pivot
        keep = [i for i in range(len(self.labels)) if i != pos]
        return ConditionalCovariance(
            [self.labels[i] for i in keep],
            updated[np.ix_(keep, keep)],
            self.log_det - math.log(pivot),
        )

    def cost(self) -> Tuple[float, SpanningTree]:
        """
        d(F) and the maximum conditional-MI tree.

        d(F) = 1/2 (sum_i ln c_ii - ln det C) - sum_{(i,j) in E} I(x_i; x_j | x_F).
        """
        tree = max_spanning_tree(mutual_information_weights(self.cov), self.labels)
        entropy_gap = 0.5 * (float(np.sum(np.log(np.diag(self.cov)))) - self.log_det)
        return entropy_gap - float(sum(tree.weights)), tree


def _check_stats(stats: EmpiricalStats) -> None:
    try:
        stats.cov.cholesky()
    except NotPositiveDefiniteError as e:
        raise NotPositiveDefiniteError(f"empirical covariance is not positive definite: {e.detail}") from e


def _check_order(n: int, k: int, upper: int) -> None:
    if k < 0 or k > upper:
        raise InvalidParameterError(f"FVS size must be in [0, {upper}] for n={n}, got {k}")


def conditioned_chow_liu(stats: EmpiricalStats, fvs: Iterable[int]) -> ObservedFit:
    """
    Exact ML fit over models whose non-feedback nodes form a tree.

    Steps: conditional covariance of T given F, Chow-Liu on it, then the T block
    of the reassembled covariance is Sigma_CL + S_M S_F^-1 S_M^T while the F rows
    are copied from the empirical covariance.

    Args:
        stats: Empirical moments (means are ignored; the fit is zero mean)
        fvs: Feedback nodes, |fvs| < n

    Returns:
        ObservedFit including the sparse information matrix

    Raises:
        NotPositiveDefiniteError: If the empirical covariance is not PD
        SingularBlockError: If the S_F block is singular
    """
    part = Partition.from_fvs(stats.n, fvs)
    _check_order(stats.n, part.k, stats.n - 1)
    _check_stats(stats)

    cond = schur_conditional(stats.cov, part)
    sigma_cl, tree = chow_liu(cond, labels=part.tree_nodes)

    tree_nodes = list(part.tree_nodes)
    sigma_ml = np.array(stats.cov.values)
    correction = np.zeros((part.m, part.m))
    if part.k:
        fvs_list = list(part.fvs)
        sigma_m = stats.cov.block(tree_nodes, fvs_list)
        correction = sigma_m @ solve_pd(stats.cov.block(fvs_list, fvs_list), sigma_m.T)
    sigma_ml[np.ix_(tree_nodes, tree_nodes)] = sigma_cl.values + correction
    sigma_ml = SymMatrix(sigma_ml)

    divergence = kl_zero_mean(stats.cov, sigma_ml)
    fit = ObservedFit(part=part, tree=tree, sigma_ml=sigma_ml, sigma_cl=sigma_cl, divergence=divergence)
    logger.debug("Conditioned Chow-Liu with F=%s: d=%.6g", list(part.fvs), divergence)
    return replace(fit, j_ml=ml_information_matrix(fit))


def ml_information_matrix(fit: ObservedFit) -> FvsModel:
    """
    Sparse J_ML = Sigma_ML^-1 in FVS block form.

    J_T = tree inverse of Sigma_CL, J_M = -J_T Sigma_M Sigma_F^-1 and
    J_F = Sigma_F^-1 (I + (Sigma_M^T J_T)(Sigma_M Sigma_F^-1)).

    Raises:
        SingularBlockError: If Sigma_F is singular
    """
    part = fit.part
    j_t = tree_information_matrix(fit.sigma_cl, fit.tree)
    if part.k == 0:
        return FvsModel(part=part, j_f=np.zeros((0, 0)), j_m=np.zeros((part.m, 0)), j_t=j_t)

    fvs = list(part.fvs)
    tree_nodes = list(part.tree_nodes)
    sigma_f = fit.sigma_ml.block(fvs, fvs)
    sigma_m = fit.sigma_ml.block(tree_nodes, fvs)
    try:
        y = solve_pd(sigma_f, sigma_m.T).T
    except NotPositiveDefiniteError as e:
        raise SingularBlockError(f"Sigma_F is singular: {e.detail}") from e

    j_t_sigma_m = j_t.matmul(sigma_m)
    j_m = -j_t.matmul(y)
    j_f = solve_pd(sigma_f, np.eye(part.k) + j_t_sigma_m.T @ y)
    j_f = (j_f + j_f.T) / 2.0
    return FvsModel(part=part, j_f=j_f, j_m=j_m, j_t=j_t)


def fvs_cost(stats: EmpiricalStats, fvs: Iterable[int]) -> float:
    """
    d(F): KL divergence from the empirical distribution to the best model in Q_F.

    Evaluated from conditional entropies and conditional mutual informations,
    without assembling Sigma_ML.
    """
    part = Partition.from_fvs(stats.n, fvs)
    _check_order(stats.n, part.k, stats.n - 1)
    state = ConditionalCovariance.initial(stats.cov)
    for v in part.fvs:
        state = state.condition_on(v)
    return state.cost()[0]


def _subset_cost(initial: ConditionalCovariance, subset: Tuple[int, ...]) -> float:
    state = initial
    for v in subset:
        state = state.condition_on(v)
    return state.cost()[0]


def learn_exact_fvs(stats: EmpiricalStats, k: int, cap: Optional[int] = None,
                    threads: Optional[int] = None) -> ObservedFit:
    """
    Best size-k FVS by exhaustive enumeration.

    Args:
        stats: Empirical moments
        k: FVS size, at most n - 2
        cap: Maximum number of subsets (default: settings.ENUMERATION_CAP)
        threads: Worker cap for subset scoring

    Returns:
        Fit for the subset minimizing d(F); ties go to the lexicographically smallest

    Raises:
        EnumerationCapError: If C(n, k) exceeds the cap
    """
    n = stats.n
    _check_order(n, k, n - 2)
    cap = settings.ENUMERATION_CAP if cap is None else cap
    total = math.comb(n, k)
    if total > cap:
        raise EnumerationCapError(
            f"{total} candidate sets of size {k} exceed the cap of {cap}; use the greedy mode instead"
        )
    _check_stats(stats)

    initial = ConditionalCovariance.initial(stats.cov)
    subsets = list(itertools.combinations(range(n), k))
    logger.info("Enumerating %d feedback sets of size %d over %d nodes", total, k, n)
    costs = parallel_map(lambda subset: _subset_cost(initial, subset), subsets, threads)

    best = 0
    for idx, value in enumerate(costs):
        if value < costs[best]:
            best = idx
    logger.info("Best FVS %s with d=%.6g", list(subsets[best]), costs[best])
    return conditioned_chow_liu(stats, subsets[best])


def learn_greedy_fvs(stats: EmpiricalStats, k: int, threads: Optional[int] = None) -> GreedyTrace:
    """
    Grow an FVS one node at a time, each step adding the node that lowers d(F) most.

    Args:
        stats: Empirical moments
        k: Number of steps, at most n - 2
        threads: Worker cap for candidate evaluation

    Returns:
        GreedyTrace with (node, d(F_t)) per step and the final fit
    """
    n = stats.n
    _check_order(n, k, n - 2)
    _check_stats(stats)

    state = ConditionalCovariance.initial(stats.cov)
    selected: List[int] = []
    steps: List[GreedyStep] = []
    for t in range(1, k + 1):
        candidates = sorted(state.labels)
        costs = parallel_map(lambda v: state.condition_on(v).cost()[0], candidates, threads)
        best = 0
        for idx, value in enumerate(costs):
            logger.debug("step %d candidate %d: d=%.6g", t, candidates[idx], value)
            if value < costs[best]:
                best = idx
        node = candidates[best]
        state = state.condition_on(node)
        selected.append(node)
        steps.append(GreedyStep(node=node, d_value=costs[best]))
        logger.info("Greedy step %d selected node %d (d=%.6g)", t, node, costs[best])

    return GreedyTrace(steps=steps, final_fit=conditioned_chow_liu(stats, selected))
