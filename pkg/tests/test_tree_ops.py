"""
Tests for tree kernels: Chow-Liu, tree inversion and Gaussian BP.
"""
import numpy as np
import pytest

from fvsggm.core.exceptions import BeliefPropagationError, DegenerateCorrelationError, InvalidParameterError
from fvsggm.models.tree import SpanningTree, TreeMatrix
from fvsggm.services.gaussian_core import kl_zero_mean
from fvsggm.services.tree_ops import (
    chow_liu,
    max_spanning_tree,
    mutual_information_weights,
    prufer_decode,
    random_spanning_tree,
    tree_bp,
    tree_information_matrix,
    tree_log_det_inv,
    tree_projection,
    tree_signature,
)
from tests.oracles import best_tree_divergence, fixed_tree_divergence, random_pd, spanning_tree_table


def random_tree_model(m: int, rng: np.random.Generator) -> TreeMatrix:
    """Diagonally dominant tree-sparse information matrix."""
    tree = random_spanning_tree(list(range(m)), rng)
    off = rng.uniform(-1.0, 1.0, size=len(tree.edges))
    diag = np.full(m, 0.5)
    for (a, b), w in zip(tree.edges, off):
        diag[a] += abs(w)
        diag[b] += abs(w)
    return TreeMatrix(tree=tree, diag=diag, off=off)


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def test_mutual_information_weights():
    """Test -1/2 ln(1 - rho^2) on a 2x2 covariance."""
    cov = np.array([[4.0, 1.0], [1.0, 1.0]])
    w = mutual_information_weights(cov)
    assert w[0, 1] == pytest.approx(-0.5 * np.log(1.0 - 0.25))


def test_mutual_information_is_clamped():
    """Test that perfectly correlated pairs stay finite."""
    w = mutual_information_weights(np.ones((2, 2)))
    assert np.all(np.isfinite(w))


def test_max_spanning_tree_picks_heaviest_edges():
    """Test Kruskal on a hand-made weight table."""
    w = np.array([
        [0.0, 5.0, 1.0, 0.0],
        [5.0, 0.0, 4.0, 3.0],
        [1.0, 4.0, 0.0, 2.0],
        [0.0, 3.0, 2.0, 0.0],
    ])
    tree = max_spanning_tree(w)
    assert tree.edges == ((0, 1), (1, 2), (1, 3))
    assert tree.weights == (5.0, 4.0, 3.0)


def test_max_spanning_tree_breaks_ties_lexicographically():
    """Test that equal weights select the smallest (i, j) pairs."""
    tree = max_spanning_tree(np.ones((4, 4)))
    assert tree.edges == ((0, 1), (0, 2), (0, 3))


def test_max_spanning_tree_uses_labels():
    """Test that local positions are mapped to the given labels."""
    tree = max_spanning_tree(np.ones((3, 3)), labels=[4, 7, 9])
    assert tree.nodes == (4, 7, 9)
    assert tree.edges == ((4, 7), (4, 9))


def test_chow_liu_is_optimal_over_all_trees(rng):
    """Test Chow-Liu against exhaustive enumeration of spanning trees."""
    for trial in range(500):
        m = 3 + trial % 4
        cov = random_pd(m, rng)
        cov_cl, tree = chow_liu(cov)
        best = best_tree_divergence(cov)
        assert fixed_tree_divergence(cov, tree) == pytest.approx(best, abs=1e-9)
        assert kl_zero_mean(cov, cov_cl) == pytest.approx(best, abs=1e-9)


def test_chow_liu_single_node():
    """Test the one-node case."""
    cov_cl, tree = chow_liu(np.array([[2.0]]))
    assert tree.edges == ()
    assert cov_cl.values[0, 0] == 2.0


def test_tree_projection_matches_on_diagonal_and_edges(rng):
    """Test moment matching and tree-sparse inverse of the projection."""
    cov = random_pd(7, rng)
    tree = max_spanning_tree(mutual_information_weights(cov))
    out = tree_projection(cov, tree)
    np.testing.assert_array_equal(np.diag(out), np.diag(cov))
    for a, b in tree.edges:
        assert out[a, b] == cov[a, b]
    j = np.linalg.inv(out)
    off_tree = np.ones((7, 7), dtype=bool)
    np.fill_diagonal(off_tree, False)
    for a, b in tree.edges:
        off_tree[a, b] = off_tree[b, a] = False
    assert np.max(np.abs(j[off_tree])) < 1e-9 * np.max(np.abs(j))


def test_tree_information_matrix_matches_dense_inverse(rng):
    """Test the closed-form tree inverse on random tree models up to 100 nodes."""
    for m in (2, 5, 17, 60, 100):
        model = random_tree_model(m, rng)
        cov = np.linalg.inv(model.to_dense())
        out = tree_information_matrix((cov + cov.T) / 2.0, model.tree)
        scale = np.max(np.abs(model.to_dense()))
        np.testing.assert_allclose(out.to_dense(), model.to_dense(), rtol=0.0, atol=1e-10 * scale)


def test_tree_information_matrix_rejects_degenerate_edge():
    """Test that |rho| = 1 on a tree edge raises."""
    tree = SpanningTree(nodes=(0, 1), edges=((0, 1),))
    with pytest.raises(DegenerateCorrelationError):
        tree_information_matrix(np.ones((2, 2)), tree)


def test_tree_information_matrix_rejects_nonpositive_variance():
    """Test that a zero variance is rejected."""
    tree = SpanningTree(nodes=(0, 1), edges=((0, 1),))
    with pytest.raises(InvalidParameterError):
        tree_information_matrix(np.array([[0.0, 0.0], [0.0, 1.0]]), tree)


def test_tree_bp_matches_dense_inverse(rng):
    """Test variances, edge covariances and solves against a dense inverse."""
    model = random_tree_model(40, rng)
    rhs = rng.standard_normal((40, 3))
    out = tree_bp(model, rhs)
    sigma = np.linalg.inv(model.to_dense())
    np.testing.assert_allclose(out.node_variance, np.diag(sigma), rtol=1e-11)
    edges = model.tree.local_edges
    np.testing.assert_allclose(out.edge_covariance, sigma[edges[:, 0], edges[:, 1]], rtol=1e-10, atol=1e-13)
    np.testing.assert_allclose(out.solves, sigma @ rhs, rtol=1e-10, atol=1e-12)


def test_tree_bp_on_a_forest():
    """Test that disconnected components are handled independently."""
    tree = SpanningTree(nodes=(0, 1, 2, 3), edges=((0, 1),))
    model = TreeMatrix(tree=tree, diag=np.array([2.0, 2.0, 4.0, 0.5]), off=np.array([1.0]))
    out = tree_bp(model)
    np.testing.assert_allclose(out.node_variance, np.diag(np.linalg.inv(model.to_dense())), rtol=1e-14)


def test_tree_bp_rejects_indefinite_matrix():
    """Test that a non-PD tree matrix fails with a BP error."""
    tree = SpanningTree(nodes=(0, 1), edges=((0, 1),))
    with pytest.raises(BeliefPropagationError):
        tree_bp(TreeMatrix(tree=tree, diag=np.array([1.0, 1.0]), off=np.array([2.0])))


def test_tree_log_det_inv(rng):
    """Test ln det(J_T^-1) from BP marginals."""
    model = random_tree_model(50, rng)
    out = tree_bp(model)
    expected = -np.linalg.slogdet(model.to_dense())[1]
    assert tree_log_det_inv(out, model.tree) == pytest.approx(expected, rel=1e-11)


def test_prufer_decode_known_sequence():
    """Test the decoding of [3, 3, 3, 4] on six nodes."""
    tree = prufer_decode([3, 3, 3, 4])
    assert set(tree.edges) == {(0, 3), (1, 3), (2, 3), (3, 4), (4, 5)}


def test_prufer_decoding_is_a_bijection():
    """Test that all 6^4 sequences give distinct spanning trees."""
    table = spanning_tree_table(6)
    seen = {frozenset(map(tuple, edges)) for edges in table}
    assert len(seen) == 6 ** 4
    tree = prufer_decode([0, 5, 2, 2])
    assert frozenset(tree.edges) in seen


def test_random_spanning_tree_is_seeded():
    """Test that the same generator state yields the same tree."""
    labels = [3, 5, 8, 9, 11]
    first = random_spanning_tree(labels, np.random.default_rng(7))
    second = random_spanning_tree(labels, np.random.default_rng(7))
    assert first.edges == second.edges
    assert first.is_spanning


def test_tree_signature_ignores_edge_order():
    """Test that edge order and orientation do not change the hash."""
    assert tree_signature([(0, 1), (2, 1)]) == tree_signature([(1, 2), (1, 0)])
    assert tree_signature([(0, 1), (1, 2)]) != tree_signature([(0, 1), (0, 2)])
