"""
Gaussian building blocks: empirical moments, KL divergence, Schur complements,
block inversion and sampling.
"""
import logging
from typing import Optional, Tuple

import numpy as np
import scipy.linalg as la

from fvsggm.core.exceptions import (
    DimensionMismatchError,
    InsufficientSamplesError,
    InvalidParameterError,
    NotPositiveDefiniteError,
    SingularBlockError,
)
from fvsggm.models.gaussian import (
    EmpiricalStats,
    GaussianDensity,
    MatrixLike,
    Partition,
    SymMatrix,
    as_array,
    cholesky_lower,
)

logger = logging.getLogger(__name__)


def log_det_pd(a: np.ndarray) -> float:
    """
    Log-determinant of a positive definite matrix via Cholesky.

    Raises:
        NotPositiveDefiniteError: If a is not positive definite
    """
    if a.size == 0:
        return 0.0
    chol = cholesky_lower(a)
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def solve_pd(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a x = b for positive definite a."""
    if a.size == 0:
        return np.zeros((0,) + np.shape(b)[1:])
    try:
        factor = la.cho_factor(a, lower=True)
    except la.LinAlgError as e:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {e}") from e
    return la.cho_solve(factor, b)


def inv_pd(a: np.ndarray) -> np.ndarray:
    """Symmetric inverse of a positive definite matrix."""
    out = solve_pd(a, np.eye(a.shape[0]))
    return (out + out.T) / 2.0


def empirical_stats(samples: np.ndarray) -> EmpiricalStats:
    """
    Sample mean and biased (1/s) covariance.

    Args:
        samples: s x n matrix, one observation per row

    Returns:
        EmpiricalStats with the sample count

    Raises:
        InsufficientSamplesError: If fewer than two rows are given
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim == 1:
        x = x.reshape(-1, 1)
    if x.ndim != 2 or x.shape[1] < 1:
        raise DimensionMismatchError(f"samples must be an s x n matrix, got shape {x.shape}")
    s = x.shape[0]
    if s < 2:
        raise InsufficientSamplesError(f"at least 2 samples are required, got {s}")

    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / s
    return EmpiricalStats(mean=mean, cov=SymMatrix(cov), samples=s)


def kl_gaussian(p_hat: GaussianDensity, q: GaussianDensity) -> float:
    """
    D(p_hat || q) for two Gaussians of the same dimension.

    Uses 1/2 (Tr(S^-1 S_hat) + (mu - mu_hat)^T S^-1 (mu - mu_hat) - n - ln det(S^-1 S_hat)),
    clamped at zero.

    Raises:
        DimensionMismatchError: If the dimensions differ
    """
    if p_hat.dim != q.dim:
        raise DimensionMismatchError(f"cannot compare densities of dimension {p_hat.dim} and {q.dim}")
    n = q.dim
    chol_q = q.chol
    # S^-1 S_hat = L^-T L^-1 S_hat; trace via the whitened factor of S_hat
    whitened = la.solve_triangular(chol_q, p_hat.chol, lower=True)
    trace_term = float(np.sum(whitened ** 2))
    diff = la.solve_triangular(chol_q, q.mean - p_hat.mean, lower=True)
    mean_term = float(diff @ diff)
    log_det_ratio = 2.0 * float(np.sum(np.log(np.diag(p_hat.chol))) - np.sum(np.log(np.diag(chol_q))))
    value = 0.5 * (trace_term + mean_term - n - log_det_ratio)
    return max(value, 0.0)


def kl_zero_mean(sigma_hat: MatrixLike, sigma: MatrixLike) -> float:
    """D(N(0, sigma_hat) || N(0, sigma))."""
    return kl_gaussian(GaussianDensity.zero_mean(sigma_hat), GaussianDensity.zero_mean(sigma))


def schur_conditional(cov: MatrixLike, part: Partition) -> SymMatrix:
    """
    Conditional covariance of the tree nodes given the feedback nodes.

    Returns S_T - S_M S_F^-1 S_M^T over part.tree_nodes.

    Raises:
        SingularBlockError: If the S_F block is not positive definite
    """
    a = as_array(cov)
    if a.shape != (part.n, part.n):
        raise DimensionMismatchError(f"covariance is {a.shape}, partition expects n={part.n}")
    tree_nodes = list(part.tree_nodes)
    sigma_t = a[np.ix_(tree_nodes, tree_nodes)]
    if part.k == 0:
        return SymMatrix(sigma_t)

    fvs = list(part.fvs)
    sigma_f = a[np.ix_(fvs, fvs)]
    sigma_m = a[np.ix_(tree_nodes, fvs)]
    try:
        y = solve_pd(sigma_f, sigma_m.T)
    except NotPositiveDefiniteError as e:
        raise SingularBlockError(f"feedback block S_F is singular: {e.detail}") from e
    return SymMatrix(sigma_t - sigma_m @ y)


def block_inverse(m: MatrixLike, part: Partition) -> SymMatrix:
    """
    Inverse of a positive definite matrix through its F/T block partition.

    With A = m_FF, B = m_FT, D = m_TT and S = D - B^T A^-1 B:
      inv_FF = A^-1 + A^-1 B S^-1 B^T A^-1, inv_FT = -A^-1 B S^-1, inv_TT = S^-1.
    The result is returned in global node order.

    Raises:
        NotPositiveDefiniteError: If m is not positive definite
    """
    a = as_array(m)
    if a.shape != (part.n, part.n):
        raise DimensionMismatchError(f"matrix is {a.shape}, partition expects n={part.n}")
    fvs = list(part.fvs)
    tree_nodes = list(part.tree_nodes)
    out = np.zeros_like(a)

    if part.k == 0:
        out[:] = inv_pd(a)
        return SymMatrix(out)

    block_a = a[np.ix_(fvs, fvs)]
    block_b = a[np.ix_(fvs, tree_nodes)]
    block_d = a[np.ix_(tree_nodes, tree_nodes)]

    a_inv_b = solve_pd(block_a, block_b)
    schur = block_d - block_b.T @ a_inv_b
    schur_inv = inv_pd(schur) if part.m else np.zeros((0, 0))

    inv_ft = -a_inv_b @ schur_inv
    inv_ff = inv_pd(block_a) + a_inv_b @ schur_inv @ a_inv_b.T

    out[np.ix_(fvs, fvs)] = inv_ff
    out[np.ix_(fvs, tree_nodes)] = inv_ft
    out[np.ix_(tree_nodes, fvs)] = inv_ft.T
    out[np.ix_(tree_nodes, tree_nodes)] = schur_inv
    return SymMatrix(out)


def sample_gaussian(model: GaussianDensity, s: int, seed: Optional[int] = None) -> np.ndarray:
    """
    Draw s i.i.d. rows from model as mean + L z with L the Cholesky factor.

    Args:
        model: Density to sample
        s: Number of rows
        seed: Seed for numpy's default generator

    Returns:
        s x n sample matrix
    """
    if s < 1:
        raise InvalidParameterError(f"sample count must be positive, got {s}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((s, model.dim))
    return model.mean + z @ model.chol.T


def ridge(cov: MatrixLike, epsilon: Optional[float] = None, scale: float = 1e-8) -> Tuple[SymMatrix, float]:
    """
    Add epsilon * I to a covariance; epsilon defaults to scale * trace / n.

    Returns:
        The regularized covariance and the epsilon used
    """
    a = as_array(cov)
    n = a.shape[0]
    if epsilon is None:
        epsilon = scale * float(np.trace(a)) / n
    logger.warning("Applying ridge %.3g * I to the covariance", epsilon)
    return SymMatrix(a + epsilon * np.eye(n)), epsilon
