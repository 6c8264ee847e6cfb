"""
Dense reference computations shared by the test modules.

Everything here uses plain numpy linear algebra (explicit inverses, slogdet)
or exhaustive enumeration, never the O(k^2 n) code paths under test.
"""
import heapq
import itertools
from functools import lru_cache
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from fvsggm.models.fvs import FvsModel
from fvsggm.models.tree import SpanningTree
from fvsggm.services.tree_ops import chow_liu


def random_pd(n: int, rng: np.random.Generator, extra: int = 3) -> np.ndarray:
    """Wishart-like positive definite matrix with unit-scale diagonal."""
    a = rng.standard_normal((n, n + extra))
    cov = a @ a.T / (n + extra)
    return (cov + cov.T) / 2.0


def dense_log_det(a: np.ndarray) -> float:
    sign, value = np.linalg.slogdet(a)
    assert sign > 0
    return float(value)


def dense_kl(sigma_hat: np.ndarray, sigma: np.ndarray) -> float:
    """D(N(0, sigma_hat) || N(0, sigma)) with explicit inverses."""
    n = sigma.shape[0]
    j = np.linalg.inv(sigma)
    return 0.5 * (np.trace(j @ sigma_hat) - n - dense_log_det(sigma_hat) + dense_log_det(sigma))


def dense_schur(cov: np.ndarray, fvs: Sequence[int]) -> Tuple[np.ndarray, List[int]]:
    """Conditional covariance of the remaining nodes given fvs."""
    n = cov.shape[0]
    fvs = list(fvs)
    rest = [i for i in range(n) if i not in fvs]
    if not fvs:
        return cov[np.ix_(rest, rest)], rest
    s_t = cov[np.ix_(rest, rest)]
    s_m = cov[np.ix_(rest, fvs)]
    s_f = cov[np.ix_(fvs, fvs)]
    return s_t - s_m @ np.linalg.inv(s_f) @ s_m.T, rest


def _decode(sequence: Sequence[int], m: int) -> List[Tuple[int, int]]:
    degree = [1] * m
    for v in sequence:
        degree[v] += 1
    leaves = [i for i in range(m) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for v in sequence:
        leaf = heapq.heappop(leaves)
        edges.append((min(leaf, v), max(leaf, v)))
        degree[v] -= 1
        if degree[v] == 1:
            heapq.heappush(leaves, v)
    a, b = heapq.heappop(leaves), heapq.heappop(leaves)
    edges.append((min(a, b), max(a, b)))
    return edges


@lru_cache(maxsize=None)
def spanning_tree_table(m: int) -> np.ndarray:
    """All m^(m-2) labelled spanning trees on m >= 2 nodes as a (trees, m-1, 2) array."""
    if m == 2:
        return np.array([[[0, 1]]], dtype=np.intp)
    table = [_decode(seq, m) for seq in itertools.product(range(m), repeat=m - 2)]
    return np.array(table, dtype=np.intp)


def all_spanning_trees(m: int) -> Iterator[SpanningTree]:
    if m == 1:
        yield SpanningTree(nodes=(0,), edges=())
        return
    for edges in spanning_tree_table(m):
        yield SpanningTree(nodes=tuple(range(m)), edges=tuple(map(tuple, edges)))


def best_tree_divergence(cov: np.ndarray) -> float:
    """Exhaustive minimum of the fixed-tree divergence over all spanning trees."""
    m = cov.shape[0]
    d = np.diag(cov)
    base = 0.5 * (float(np.sum(np.log(d))) - dense_log_det(cov))
    if m == 1:
        return base
    rho = cov / np.sqrt(np.outer(d, d))
    edge_terms = 0.5 * np.log(1.0 - rho * rho + np.eye(m))
    table = spanning_tree_table(m)
    totals = edge_terms[table[:, :, 0], table[:, :, 1]].sum(axis=1)
    return base + float(np.min(totals))


def fixed_tree_divergence(cov: np.ndarray, tree: SpanningTree) -> float:
    """
    KL from N(0, cov) to its best approximation with edge set `tree`:
    1/2 (sum ln c_ii - ln det C) + 1/2 sum_E ln(1 - rho_e^2).
    """
    d = np.diag(cov)
    value = 0.5 * (float(np.sum(np.log(d))) - dense_log_det(cov))
    for a, b in tree.edges:
        rho = cov[a, b] / np.sqrt(d[a] * d[b])
        value += 0.5 * np.log(1.0 - rho * rho)
    return value


def brute_force_fvs_divergence(cov: np.ndarray, fvs: Sequence[int]) -> float:
    """min over all spanning trees of T of the fixed-tree divergence of S_T|F."""
    cond, _ = dense_schur(cov, fvs)
    return best_tree_divergence(cond)


def naive_marginals(model: FvsModel) -> Tuple[np.ndarray, np.ndarray]:
    j = model.assemble()
    sigma = np.linalg.inv(j)
    return sigma @ model.potential(), np.diag(sigma).copy()


def normalized_blocks(j: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """(J_M L^-T, J_T) for a latent-layout matrix with J_F = L L^T."""
    chol = np.linalg.cholesky(j[:k, :k])
    j_m = np.linalg.solve(chol, j[k:, :k].T).T
    return j_m, j[k:, k:]


def naive_latent_iterations(sigma_t_hat: np.ndarray, init: np.ndarray, k: int, iters: int):
    """
    Latent Chow-Liu with dense inverses at every step.

    Yields (J, objective) after each iteration for a latent-layout J (feedback
    nodes first).
    """
    m = sigma_t_hat.shape[0]
    sigma_hat_inv = np.linalg.inv(sigma_t_hat)
    j = init.copy()
    tree_nodes = list(range(k, k + m))
    for _ in range(iters):
        j_f = j[:k, :k]
        j_m = j[k:, :k]
        j_hat = j.copy()
        j_hat[k:, k:] = sigma_hat_inv + j_m @ np.linalg.inv(j_f) @ j_m.T
        sigma_p1 = np.linalg.inv(j_hat)

        s_f = sigma_p1[:k, :k]
        s_m = sigma_p1[k:, :k]
        low_rank = s_m @ np.linalg.inv(s_f) @ s_m.T
        cond = sigma_p1[k:, k:] - low_rank
        sigma_cl, _ = chow_liu((cond + cond.T) / 2.0)
        sigma_next = sigma_p1.copy()
        sigma_next[k:, k:] = sigma_cl.values + low_rank
        j = np.linalg.inv(sigma_next)
        j = (j + j.T) / 2.0

        sigma_t = np.linalg.inv(j)[np.ix_(tree_nodes, tree_nodes)]
        yield j, dense_kl(sigma_t_hat, sigma_t)
