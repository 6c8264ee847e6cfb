"""
Latent-FVS learning by alternating projections.

P1 projects the current model onto the set of joint distributions whose
observed marginal is the empirical one; P2 projects back onto Q_F with the
conditioned Chow-Liu fit. P1 is evaluated in its accelerated closed form, so
no dense (k + m) inverse and no inverse of the empirical covariance is formed.
"""
import logging
from typing import Optional, Tuple

import numpy as np

from fvsggm.core.config import settings
from fvsggm.core.exceptions import (
    DimensionMismatchError,
    InitializationError,
    InvalidParameterError,
    LearningError,
    ModelInvariantError,
    NotPositiveDefiniteError,
    NumericalError,
    SingularBlockError,
)
from fvsggm.models.fit import LatentIteration, LatentState, LatentTrace, ObservedFit, StopReason
from fvsggm.models.fvs import FvsModel
from fvsggm.models.gaussian import EmpiricalStats, MatrixLike, Partition, SymMatrix
from fvsggm.services.fvs_inference import check_invariants, normalize_gauge, solve_feedback_system
from fvsggm.services.gaussian_core import inv_pd, log_det_pd, solve_pd
from fvsggm.services.learn_observed import conditioned_chow_liu
from fvsggm.services.tree_ops import chow_liu, tree_information_matrix, tree_log_det_inv

logger = logging.getLogger(__name__)

MONOTONICITY_SLACK = 1e-10


def _as_sym(m: MatrixLike) -> SymMatrix:
    return m if isinstance(m, SymMatrix) else SymMatrix(m)


def _check_observed_dim(sigma_t_hat: SymMatrix, model: FvsModel) -> None:
    if sigma_t_hat.dim != model.part.m:
        raise DimensionMismatchError(
            f"empirical covariance is {sigma_t_hat.dim}x{sigma_t_hat.dim}, model has {model.part.m} observed nodes"
        )


def latent_objective(sigma_t_hat: MatrixLike, model: FvsModel, sigma_log_det: Optional[float] = None) -> float:
    """
    D(N(0, S_hat_T) || N(0, Sigma_T)) with Sigma_T^-1 = J_T - J_M J_F^-1 J_M^T.

    ln det Sigma_T^-1 = ln det J - ln det J_F comes from the k tree solves of the
    feedback system; the trace term uses the tree sparsity of J_T.

    Args:
        sigma_t_hat: Empirical covariance of the observed nodes
        model: Latent FVS model
        sigma_log_det: Optional precomputed ln det S_hat_T

    Raises:
        NotPositiveDefiniteError: If the observed marginal is not PD
    """
    sigma = _as_sym(sigma_t_hat)
    _check_observed_dim(sigma, model)
    m = model.part.m
    s = sigma.values
    if sigma_log_det is None:
        sigma_log_det = log_det_pd(s)

    system = solve_feedback_system(model)

    log_det_j = -tree_log_det_inv(system.bp, model.tree)
    trace = model.j_t.trace_dot(s)
    if model.k:
        log_det_j += 2.0 * float(np.sum(np.log(np.diag(system.chol_f))))
        log_det_j -= log_det_pd(model.j_f)
        projected = model.j_m.T @ s @ model.j_m
        trace -= float(np.trace(solve_pd(model.j_f, projected)))

    value = 0.5 * (trace - m - log_det_j - sigma_log_det)
    return max(value, 0.0)


def project_p1(model: FvsModel, sigma_t_hat: MatrixLike) -> SymMatrix:
    """
    Covariance of p_hat(x_T) q(x_F | x_T) in closed form.

    With Y = J_M J_F^-1: Sigma_T = S_hat_T (copied), Sigma_M = -S_hat_T Y,
    Sigma_F = J_F^-1 + Y^T S_hat_T Y. Cost O(k m^2).

    Returns:
        Full covariance in the model's global node order

    Raises:
        SingularBlockError: If J_F is singular
    """
    sigma = _as_sym(sigma_t_hat)
    _check_observed_dim(sigma, model)
    part = model.part
    s = sigma.values
    fvs = list(part.fvs)
    tree_nodes = list(part.tree_nodes)

    out = np.zeros((part.n, part.n))
    out[np.ix_(tree_nodes, tree_nodes)] = s
    if part.k:
        try:
            j_f_inv = inv_pd(model.j_f)
        except NotPositiveDefiniteError as e:
            raise SingularBlockError(f"J_F is not invertible: {e.detail}") from e
        y = model.j_m @ j_f_inv
        sigma_m = -s @ y
        sigma_f = j_f_inv - y.T @ sigma_m
        out[np.ix_(fvs, fvs)] = (sigma_f + sigma_f.T) / 2.0
        out[np.ix_(tree_nodes, fvs)] = sigma_m
        out[np.ix_(fvs, tree_nodes)] = sigma_m.T
    return SymMatrix(out)


def project_p2(sigma_full: MatrixLike, part: Partition) -> Tuple[FvsModel, ObservedFit]:
    """
    Best Q_F model for a full covariance: conditioned Chow-Liu with F = part.fvs.

    Returns:
        The next information matrix and the fit it came from
    """
    stats = EmpiricalStats.from_covariance(_as_sym(sigma_full))
    fit = conditioned_chow_liu(stats, part.fvs)
    return fit.j_ml, fit


def default_init(sigma_t_hat: MatrixLike, k: int, seed: Optional[int] = 0,
                 max_halvings: Optional[int] = None) -> FvsModel:
    """
    Chow-Liu tree on the observed nodes plus a small random latent block.

    J_T^(0) is the tree inverse of the Chow-Liu projection, J_F^(0) = I and
    J_M^(0) has i.i.d. U[-s, s] entries with s = 0.1 sqrt(min diag J_T) / sqrt(k),
    halved until the model is positive definite.

    Raises:
        InitializationError: If no scale passes within max_halvings halvings
    """
    if k < 1:
        raise InvalidParameterError(f"latent FVS size must be at least 1, got {k}")
    sigma = _as_sym(sigma_t_hat)
    max_halvings = settings.INIT_MAX_HALVINGS if max_halvings is None else max_halvings
    m = sigma.dim
    part = Partition.latent(k, m)
    sigma_cl, tree = chow_liu(sigma, labels=part.tree_nodes)
    j_t = tree_information_matrix(sigma_cl, tree)

    rng = np.random.default_rng(seed)
    raw = rng.uniform(-1.0, 1.0, size=(m, k))
    scale = 0.1 * np.sqrt(np.min(j_t.diag)) / np.sqrt(k)
    for attempt in range(max_halvings + 1):
        model = FvsModel(part=part, j_f=np.eye(k), j_m=scale * raw, j_t=j_t)
        try:
            check_invariants(model)
            return model
        except ModelInvariantError:
            logger.debug("Initial latent block with scale %.3g is not PD; halving", scale)
            scale /= 2.0
    raise InitializationError(f"could not find a positive definite initial model after {max_halvings} halvings")


def latent_chow_liu(sigma_t_hat: MatrixLike, k: int, init: Optional[FvsModel] = None,
                    max_iters: Optional[int] = None, tol: Optional[float] = None,
                    seed: Optional[int] = 0) -> LatentTrace:
    """
    Alternate P1 and P2 from an initial model until the objective stalls.

    Args:
        sigma_t_hat: Empirical covariance of the observed nodes
        k: Number of latent feedback nodes
        init: Initial model (default: default_init with seed)
        max_iters: Iteration cap (default: settings.LATENT_MAX_ITERS)
        tol: Stop once an iteration lowers the objective by less than tol
        seed: Seed for the default initialization

    Returns:
        LatentTrace with one entry for the initial model and one per iteration

    Raises:
        NotPositiveDefiniteError: If sigma_t_hat is not PD
        LearningError: If an iterate breaks down, with the iteration index
    """
    sigma = _as_sym(sigma_t_hat)
    max_iters = settings.LATENT_MAX_ITERS if max_iters is None else max_iters
    tol = settings.LATENT_TOL if tol is None else tol
    if k < 1:
        raise InvalidParameterError(f"latent FVS size must be at least 1, got {k}")
    if max_iters < 1:
        raise InvalidParameterError(f"max_iters must be at least 1, got {max_iters}")
    try:
        sigma_log_det = log_det_pd(sigma.values)
    except NotPositiveDefiniteError as e:
        raise NotPositiveDefiniteError(f"empirical covariance is not positive definite: {e.detail}") from e

    if init is None:
        model = default_init(sigma, k, seed)
    else:
        if init.part != Partition.latent(k, sigma.dim):
            raise DimensionMismatchError(f"initial model must have latent nodes 0..{k - 1} and {sigma.dim} observed nodes")
        model = normalize_gauge(init)

    objective = latent_objective(sigma, model, sigma_log_det)
    states = [LatentIteration(0, objective, model.tree.edges)]
    logger.info("Latent Chow-Liu k=%d m=%d: initial objective %.6g", k, sigma.dim, objective)

    stop_reason = StopReason.MAX_ITERS
    for t in range(1, max_iters + 1):
        try:
            full = project_p1(model, sigma)
            next_model, _ = project_p2(full, model.part)
            next_model = normalize_gauge(next_model)
            next_objective = latent_objective(sigma, next_model, sigma_log_det)
        except NumericalError as e:
            raise LearningError(e.detail, iteration=t) from e

        if next_objective > objective + MONOTONICITY_SLACK:
            logger.warning("Objective increased at iteration %d: %.12g -> %.12g", t, objective, next_objective)
        decrease = objective - next_objective
        model, objective = next_model, next_objective
        states.append(LatentIteration(t, objective, model.tree.edges))
        logger.info("Iteration %d: objective %.6g", t, objective)
        if decrease < tol:
            stop_reason = StopReason.TOLERANCE
            break

    logger.info("Latent Chow-Liu stopped after %d iterations (%s)", len(states) - 1, stop_reason.value)
    return LatentTrace(
        states=states,
        converged=stop_reason is StopReason.TOLERANCE,
        stop_reason=stop_reason,
        final=LatentState(model=model, iteration=len(states) - 1, objective=objective),
        seed=seed if init is None else None,
    )
