"""
Exact inference in FVS models at O(k^2 n) cost.

All routines share one pattern: a single tree BP on J_T with the columns of
J_M (and optionally h_T) as right-hand sides, then a k x k feedback system
J_F - J_M^T J_T^-1 J_M.
"""
import logging
from dataclasses import replace
from typing import NamedTuple, Optional

import numpy as np
import scipy.linalg as la

from fvsggm.core.exceptions import (
    BeliefPropagationError,
    InvalidParameterError,
    ModelInvariantError,
    NotPositiveDefiniteError,
)
from fvsggm.models.fvs import FvsModel
from fvsggm.models.gaussian import cholesky_lower
from fvsggm.models.tree import TreeBpResult
from fvsggm.services.tree_ops import tree_bp, tree_log_det_inv

logger = logging.getLogger(__name__)


class Marginals(NamedTuple):
    mean: np.ndarray
    variance: np.ndarray


class FeedbackSystem(NamedTuple):
    """Tree solves and the reduced feedback matrix of one FVS model."""
    bp: TreeBpResult
    g: np.ndarray
    mu_tree: np.ndarray
    j_hat_f: np.ndarray
    chol_f: np.ndarray


def feedback_matrix(model: FvsModel, g: np.ndarray) -> np.ndarray:
    """
    J_hat_F with (J_hat_F)_pq = J_pq - sum_{j in N(p) cap T} J_pj g_j^q.

    g holds J_T^-1 J_M column by column; only the tree neighbours of each
    feedback node contribute.
    """
    k = model.k
    j_hat = model.j_f.copy()
    for p in range(k):
        neighbours = np.flatnonzero(model.j_m[:, p])
        if neighbours.size:
            j_hat[p, :] -= model.j_m[neighbours, p] @ g[neighbours, :]
    return (j_hat + j_hat.T) / 2.0


def solve_feedback_system(model: FvsModel, with_potential: bool = False) -> FeedbackSystem:
    """
    Run BP once on J_T and form J_hat_F.

    Raises:
        BeliefPropagationError: If J_T is not positive definite
        NotPositiveDefiniteError: If J_hat_F is not positive definite
    """
    k = model.k
    logger.debug("Feedback system for n=%d, k=%d", model.n, k)
    columns = [model.j_m]
    if with_potential:
        h_tree = model.potential()[list(model.part.tree_nodes)]
        columns.append(h_tree.reshape(-1, 1))
    bp = tree_bp(model.j_t, np.hstack(columns))

    g = bp.solves[:, :k]
    mu_tree = bp.solves[:, k] if with_potential else np.zeros(model.part.m)
    j_hat_f = feedback_matrix(model, g)
    try:
        chol_f = cholesky_lower(j_hat_f)
    except NotPositiveDefiniteError as e:
        raise NotPositiveDefiniteError(f"reduced feedback matrix is not positive definite: {e.detail}") from e
    return FeedbackSystem(bp=bp, g=g, mu_tree=mu_tree, j_hat_f=j_hat_f, chol_f=chol_f)


def fvs_log_det(model: FvsModel) -> float:
    """
    ln det J = -ln det(J_T^-1) + ln det(J_hat_F).

    Args:
        model: FVS model with positive definite J

    Returns:
        The log-determinant of the assembled information matrix
    """
    system = solve_feedback_system(model)
    log_det_f = 2.0 * float(np.sum(np.log(np.diag(system.chol_f)))) if model.k else 0.0
    return -tree_log_det_inv(system.bp, model.tree) + log_det_f


def fvs_marginals(model: FvsModel) -> Marginals:
    """
    Marginal means J^-1 h and variances diag(J^-1).

    The feedback block is solved from the k x k system; each tree node's
    variance is P_ii^T + g_i Sigma_F g_i^T with g_i the i-th row of J_T^-1 J_M.

    Returns:
        Marginals indexed by global node id
    """
    k = model.k
    system = solve_feedback_system(model, with_potential=True)
    part = model.part
    fvs = list(part.fvs)
    tree_nodes = list(part.tree_nodes)

    mean = np.zeros(model.n)
    variance = np.zeros(model.n)
    if k:
        h_f = model.potential()[fvs]
        rhs = h_f - model.j_m.T @ system.mu_tree
        factor = (system.chol_f, True)
        mu_f = la.cho_solve(factor, rhs)
        sigma_f = la.cho_solve(factor, np.eye(k))
        sigma_f = (sigma_f + sigma_f.T) / 2.0

        mean[fvs] = mu_f
        variance[fvs] = np.diag(sigma_f)
        mean[tree_nodes] = system.mu_tree - system.g @ mu_f
        variance[tree_nodes] = system.bp.node_variance + np.einsum(
            "ip,pq,iq->i", system.g, sigma_f, system.g
        )
    else:
        mean[tree_nodes] = system.mu_tree
        variance[tree_nodes] = system.bp.node_variance
    return Marginals(mean=mean, variance=variance)


def log_partition(model: FvsModel) -> float:
    """
    ln Z = (n/2) ln(2 pi) - 1/2 ln det J + 1/2 h^T J^-1 h.
    """
    h = model.potential()
    quad = 0.0
    if np.any(h):
        quad = float(h @ fvs_marginals(model).mean)
    return 0.5 * model.n * np.log(2.0 * np.pi) - 0.5 * fvs_log_det(model) + 0.5 * quad


def check_invariants(model: FvsModel) -> None:
    """
    Validate an FVS model in O(k^2 n).

    J_T must be BP-positive and J_hat_F = J_F - J_M^T J_T^-1 J_M positive
    definite; together these make the assembled J positive definite.

    Raises:
        ModelInvariantError: Naming the violated invariant
    """
    if not np.allclose(model.j_f, model.j_f.T, rtol=0.0, atol=1e-12 * max(1.0, np.max(np.abs(model.j_f), initial=0.0))):
        raise ModelInvariantError("J_F is not symmetric")
    if not (np.all(np.isfinite(model.j_f)) and np.all(np.isfinite(model.j_m))
            and np.all(np.isfinite(model.j_t.diag)) and np.all(np.isfinite(model.j_t.off))):
        raise ModelInvariantError("model has non-finite entries")
    try:
        solve_feedback_system(model)
    except BeliefPropagationError as e:
        raise ModelInvariantError(f"J_T is not positive definite: {e.detail}") from e
    except NotPositiveDefiniteError as e:
        raise ModelInvariantError(f"J is not positive definite: {e.detail}") from e


def normalize_gauge(model: FvsModel) -> FvsModel:
    """
    Re-express the feedback block so that J_F = I.

    With J_F = L L^T, J_M becomes J_M L^-T; J_M J_F^-1 J_M^T and hence the
    marginal over the tree nodes are unchanged.
    """
    if model.k == 0:
        return model
    try:
        chol = cholesky_lower(model.j_f)
    except NotPositiveDefiniteError as e:
        raise ModelInvariantError(f"J_F is not positive definite: {e.detail}") from e
    j_m = la.solve_triangular(chol, model.j_m.T, lower=True).T
    return replace(model, j_f=np.eye(model.k), j_m=j_m)


def scale_model(model: FvsModel, c: float) -> FvsModel:
    """Model with information matrix c J."""
    if c <= 0:
        raise InvalidParameterError(f"scale must be positive, got {c}")
    return replace(model, j_f=c * model.j_f, j_m=c * model.j_m, j_t=model.j_t.scaled(c))
