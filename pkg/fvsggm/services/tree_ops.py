"""
Tree-structured Gaussian kernels: Chow-Liu learning, tree inversion,
two-pass Gaussian belief propagation and tree log-determinants.
"""
import hashlib
import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from fvsggm.core.config import settings
from fvsggm.core.exceptions import (
    BeliefPropagationError,
    DegenerateCorrelationError,
    DimensionMismatchError,
    InvalidParameterError,
)
from fvsggm.models.gaussian import MatrixLike, SymMatrix, as_array
from fvsggm.models.tree import SpanningTree, TreeBpResult, TreeMatrix, UnionFind

logger = logging.getLogger(__name__)


def correlation_matrix(cov: np.ndarray) -> np.ndarray:
    """Pairwise correlations rho_ij = S_ij / sqrt(S_ii S_jj)."""
    d = np.diag(cov)
    if np.any(d <= 0):
        raise InvalidParameterError("covariance has a nonpositive diagonal entry")
    scale = 1.0 / np.sqrt(d)
    return cov * scale[:, None] * scale[None, :]


def mutual_information_weights(cov: np.ndarray, clamp: Optional[float] = None) -> np.ndarray:
    """
    Gaussian mutual information -1/2 ln(1 - rho^2) for every pair.

    |rho| is clamped to 1 - clamp so that near-singular inputs stay finite.
    """
    clamp = settings.CORRELATION_CLAMP if clamp is None else clamp
    rho = correlation_matrix(cov)
    limit = 1.0 - clamp
    rho_sq = rho * rho
    clamped = np.count_nonzero(np.triu(rho_sq > limit * limit, k=1))
    if clamped:
        logger.warning("Clamped %d correlations to |rho| = %.12g", clamped, limit)
    rho_sq = np.minimum(rho_sq, limit * limit)
    return -0.5 * np.log1p(-rho_sq)


def max_spanning_tree(weights: np.ndarray, labels: Optional[Sequence[int]] = None) -> SpanningTree:
    """
    Kruskal maximum-weight spanning tree over a dense symmetric weight table.

    Ties are broken by lexicographic (i, j) order. Edges are returned sorted.
    """
    m = weights.shape[0]
    labels = list(range(m)) if labels is None else list(labels)
    if m <= 1:
        return SpanningTree(nodes=tuple(labels), edges=(), weights=())

    rows, cols = np.triu_indices(m, k=1)
    w = weights[rows, cols]
    order = np.lexsort((cols, rows, -w))

    components = UnionFind(m)
    chosen = []
    for e in order:
        i, j = int(rows[e]), int(cols[e])
        if components.union(i, j):
            chosen.append((i, j, float(w[e])))
            if len(chosen) == m - 1:
                break
    chosen.sort()
    return SpanningTree(
        nodes=tuple(labels),
        edges=tuple((labels[i], labels[j]) for i, j, _ in chosen),
        weights=tuple(wt for _, _, wt in chosen),
    )


def tree_projection(cov: np.ndarray, tree: SpanningTree) -> np.ndarray:
    """
    Moment-matched covariance of the tree model on `tree`.

    Off-tree entries are sqrt(S_ii S_jj) times the product of edge correlations
    along the tree path; diagonal and edge entries are copied from cov.
    """
    m = cov.shape[0]
    rho = correlation_matrix(cov)
    corr = np.eye(m)
    view = tree.rooted
    added = np.zeros(m, dtype=bool)
    for v in view.order:
        p = view.parent[v]
        if p >= 0:
            # every added node reaches v through its parent
            idx = np.flatnonzero(added)
            corr[v, idx] = rho[v, p] * corr[p, idx]
            corr[idx, v] = corr[v, idx]
        added[v] = True

    sd = np.sqrt(np.diag(cov))
    out = corr * sd[:, None] * sd[None, :]
    np.fill_diagonal(out, np.diag(cov))
    edges = tree.local_edges
    if len(edges):
        out[edges[:, 0], edges[:, 1]] = cov[edges[:, 0], edges[:, 1]]
        out[edges[:, 1], edges[:, 0]] = cov[edges[:, 1], edges[:, 0]]
    return out


def chow_liu(cov: MatrixLike, labels: Optional[Sequence[int]] = None) -> Tuple[SymMatrix, SpanningTree]:
    """
    Chow-Liu projection of a covariance onto its best spanning tree.

    Args:
        cov: Positive definite covariance
        labels: Optional node labels for the returned tree (default 0..m-1)

    Returns:
        (cov_cl, tree) where cov_cl matches cov on the diagonal and tree edges
        and has a tree-sparse inverse

    Raises:
        InvalidParameterError: If a diagonal entry is nonpositive
    """
    a = as_array(cov)
    if labels is not None and len(labels) != a.shape[0]:
        raise DimensionMismatchError(f"expected {a.shape[0]} labels, got {len(labels)}")
    tree = max_spanning_tree(mutual_information_weights(a), labels)
    return SymMatrix(tree_projection(a, tree)), tree


def tree_information_matrix(cov: MatrixLike, tree: SpanningTree) -> TreeMatrix:
    """
    Inverse of a tree-model covariance, read off its diagonal and edge entries.

    J_ii = (1 - deg i) / S_ii + sum_{j in N(i)} 1 / (S_ii - S_ij^2 / S_jj)
    J_ij = S_ij / (S_ij^2 - S_ii S_jj) on edges, zero elsewhere.

    Raises:
        DegenerateCorrelationError: If an edge has |rho| >= 1
    """
    a = as_array(cov)
    if a.shape != (tree.size, tree.size):
        raise DimensionMismatchError(f"covariance is {a.shape}, tree has {tree.size} nodes")
    s = np.diag(a).copy()
    if np.any(s <= 0):
        raise InvalidParameterError("covariance has a nonpositive diagonal entry")

    diag = (1.0 - tree.degree) / s
    edges = tree.local_edges
    if not len(edges):
        return TreeMatrix(tree=tree, diag=diag, off=np.zeros(0))

    i, j = edges[:, 0], edges[:, 1]
    s_ij = a[i, j]
    det = s[i] * s[j] - s_ij * s_ij
    if np.any(det <= 0):
        bad = int(np.flatnonzero(det <= 0)[0])
        raise DegenerateCorrelationError(f"edge {tree.edges[bad]} has |correlation| >= 1")

    off = -s_ij / det
    # 1 / (S_ii - S_ij^2 / S_jj) = S_jj / det
    np.add.at(diag, i, s[j] / det)
    np.add.at(diag, j, s[i] / det)
    return TreeMatrix(tree=tree, diag=diag, off=off)


def tree_bp(j_tree: TreeMatrix, rhs: Optional[np.ndarray] = None) -> TreeBpResult:
    """
    Exact Gaussian BP on a tree: leaves-to-root then root-to-leaves.

    Args:
        j_tree: Positive definite tree-sparse information matrix
        rhs: Optional m-vector or m x r matrix of potentials to solve against

    Returns:
        TreeBpResult with variances, edge covariances and one solve per rhs column

    Raises:
        BeliefPropagationError: If a message precision becomes nonpositive
    """
    m = j_tree.dim
    if rhs is None:
        h = np.zeros((m, 0))
    else:
        h = np.asarray(rhs, dtype=float)
        h = h.reshape(m, -1) if h.ndim == 1 else h
        if h.shape[0] != m:
            raise DimensionMismatchError(f"rhs has {h.shape[0]} rows, tree has {m} nodes")

    view = j_tree.tree.rooted
    order, parent, parent_edge = view.order, view.parent, view.parent_edge
    diag, off = j_tree.diag, j_tree.off

    # upward pass: precision/potential collected from the subtree below each node
    j_up = diag.copy()
    h_up = h.copy()
    j_msg_up = np.zeros(m)
    h_msg_up = np.zeros_like(h)
    for i in order[::-1]:
        if j_up[i] <= 0:
            raise BeliefPropagationError(f"nonpositive precision {j_up[i]:.3g} at node {j_tree.tree.nodes[i]}")
        p = parent[i]
        if p < 0:
            continue
        coupling = off[parent_edge[i]]
        j_msg_up[i] = -coupling * coupling / j_up[i]
        h_msg_up[i] = -coupling * h_up[i] / j_up[i]
        j_up[p] += j_msg_up[i]
        h_up[p] += h_msg_up[i]

    # downward pass: add the message from the parent side
    j_full = j_up.copy()
    h_full = h_up.copy()
    cavity = np.zeros(m)
    for i in order:
        p = parent[i]
        if p < 0:
            continue
        coupling = off[parent_edge[i]]
        cavity[i] = j_full[p] - j_msg_up[i]
        if cavity[i] <= 0:
            raise BeliefPropagationError(f"nonpositive precision {cavity[i]:.3g} at node {j_tree.tree.nodes[p]}")
        h_cavity = h_full[p] - h_msg_up[i]
        j_full[i] = j_up[i] - coupling * coupling / cavity[i]
        h_full[i] = h_up[i] - coupling * h_cavity / cavity[i]
        if j_full[i] <= 0:
            raise BeliefPropagationError(f"nonpositive precision {j_full[i]:.3g} at node {j_tree.tree.nodes[i]}")

    variance = 1.0 / j_full
    solves = h_full / j_full[:, None]

    # pairwise marginal of (child, parent) has precision [[j_up_c, J_cp], [J_cp, cavity_c]]
    edge_cov = np.zeros(len(j_tree.tree.edges))
    for i in order:
        p = parent[i]
        if p < 0:
            continue
        e = parent_edge[i]
        coupling = off[e]
        edge_cov[e] = -coupling / (j_up[i] * cavity[i] - coupling * coupling)

    return TreeBpResult(node_variance=variance, edge_covariance=edge_cov, solves=solves)


def tree_log_det_inv(bp: TreeBpResult, tree: SpanningTree) -> float:
    """
    ln det(J_T^-1) from BP marginals:
    sum_i ln P_ii + sum_(i,j) ln((P_ii P_jj - P_ij^2) / (P_ii P_jj)).

    Raises:
        BeliefPropagationError: If a variance or edge determinant is nonpositive
    """
    p = bp.node_variance
    if np.any(p <= 0):
        raise BeliefPropagationError("nonpositive marginal variance")
    total = float(np.sum(np.log(p)))
    edges = tree.local_edges
    if len(edges):
        pp = p[edges[:, 0]] * p[edges[:, 1]]
        det = pp - bp.edge_covariance ** 2
        if np.any(det <= 0):
            raise BeliefPropagationError("nonpositive pairwise determinant on a tree edge")
        total += float(np.sum(np.log(det / pp)))
    return total


def prufer_decode(sequence: Sequence[int], labels: Optional[Sequence[int]] = None) -> SpanningTree:
    """
    Labelled tree encoded by a Prufer sequence over local positions 0..m-1.

    A sequence of length m-2 encodes a tree on m nodes.
    """
    m = len(sequence) + 2
    labels = list(range(m)) if labels is None else list(labels)
    if len(labels) != m:
        raise DimensionMismatchError(f"a Prufer sequence of length {m - 2} needs {m} labels")
    degree = np.ones(m, dtype=np.intp)
    for v in sequence:
        degree[v] += 1

    edges = []
    for v in sequence:
        leaf = int(np.flatnonzero(degree == 1)[0])
        edges.append((labels[leaf], labels[v]))
        degree[leaf] -= 1
        degree[v] -= 1
    u, w = np.flatnonzero(degree == 1)
    edges.append((labels[u], labels[w]))
    return SpanningTree(nodes=tuple(labels), edges=tuple(sorted(tuple(sorted(e)) for e in edges)))


def random_spanning_tree(labels: Sequence[int], rng: np.random.Generator) -> SpanningTree:
    """Uniformly random labelled spanning tree via a random Prufer sequence."""
    m = len(labels)
    if m == 1:
        return SpanningTree(nodes=tuple(labels), edges=())
    sequence = rng.integers(0, m, size=m - 2)
    return prufer_decode([int(v) for v in sequence], labels)


def tree_signature(edges: Sequence[Tuple[int, int]]) -> str:
    """Short stable hash of an edge set, independent of edge order."""
    canonical = ";".join(f"{a}-{b}" for a, b in sorted(tuple(sorted(e)) for e in edges))
    return hashlib.sha1(canonical.encode("ascii")).hexdigest()[:12]
