"""
Tests for exact inference in FVS models.
"""
import numpy as np
import pytest

from fvsggm.core.exceptions import InvalidParameterError, ModelInvariantError
from fvsggm.models.fvs import FvsModel
from fvsggm.models.gaussian import Partition
from fvsggm.models.tree import SpanningTree, TreeMatrix
from fvsggm.services.experiments import random_fvs_model
from fvsggm.services.fvs_inference import (
    check_invariants,
    fvs_log_det,
    fvs_marginals,
    log_partition,
    normalize_gauge,
    scale_model,
)
from tests.oracles import dense_log_det, naive_marginals


def model_set(count: int, seed: int = 0):
    """Random Q_F models with n <= 200 and k <= 10."""
    rng = np.random.default_rng(seed)
    for i in range(count):
        k = int(rng.integers(0, 11))
        n = int(rng.integers(k + 2, 201))
        yield random_fvs_model(n, k, seed=1000 + i)


def identity_model(n: int) -> FvsModel:
    tree = SpanningTree(nodes=tuple(range(n)), edges=())
    return FvsModel(
        part=Partition.from_fvs(n, []),
        j_f=np.zeros((0, 0)),
        j_m=np.zeros((n, 0)),
        j_t=TreeMatrix(tree=tree, diag=np.ones(n), off=np.zeros(0)),
    )


def test_log_det_matches_dense_cholesky():
    """Test ln det J on 100 random FVS models."""
    for model in model_set(100):
        expected = dense_log_det(model.assemble())
        assert fvs_log_det(model) == pytest.approx(expected, rel=1e-9, abs=1e-9)


def test_marginals_match_dense_inverse():
    """Test J^-1 h and diag(J^-1) on random FVS models with random potentials."""
    rng = np.random.default_rng(11)
    for model in model_set(100):
        model = model.with_potential(rng.standard_normal(model.n))
        mean, variance = naive_marginals(model)
        out = fvs_marginals(model)
        np.testing.assert_allclose(out.mean, mean, rtol=1e-9, atol=1e-9 * np.max(np.abs(mean)))
        np.testing.assert_allclose(out.variance, variance, rtol=1e-9)


def test_identity_model():
    """Test that J = I gives log det 0, unit variances and zero means."""
    model = identity_model(5)
    assert fvs_log_det(model) == pytest.approx(0.0, abs=1e-15)
    out = fvs_marginals(model)
    np.testing.assert_array_equal(out.mean, np.zeros(5))
    np.testing.assert_allclose(out.variance, np.ones(5))


def test_log_partition_matches_dense_formula():
    """Test ln Z = n/2 ln 2pi - 1/2 ln det J + 1/2 h^T J^-1 h."""
    rng = np.random.default_rng(3)
    model = random_fvs_model(30, 3, seed=3).with_potential(rng.standard_normal(30))
    j = model.assemble()
    h = model.potential()
    expected = 15.0 * np.log(2.0 * np.pi) - 0.5 * dense_log_det(j) + 0.5 * h @ np.linalg.solve(j, h)
    assert log_partition(model) == pytest.approx(expected, rel=1e-10)


def test_log_partition_without_potential():
    """Test that h = 0 leaves only the determinant term."""
    model = random_fvs_model(12, 2, seed=8)
    expected = 6.0 * np.log(2.0 * np.pi) - 0.5 * fvs_log_det(model)
    assert log_partition(model) == pytest.approx(expected, rel=1e-14)


def test_check_invariants_accepts_generated_models():
    """Test that random models pass the invariant check."""
    for model in model_set(10, seed=5):
        check_invariants(model)


def test_check_invariants_rejects_indefinite_model():
    """Test that a non-PD J is reported as an invariant violation."""
    model = random_fvs_model(10, 2, seed=4)
    bad = FvsModel(part=model.part, j_f=model.j_f, j_m=10.0 * model.j_m, j_t=model.j_t)
    with pytest.raises(ModelInvariantError):
        check_invariants(bad)


def test_check_invariants_rejects_indefinite_tree_block():
    """Test that a non-PD J_T is reported as an invariant violation."""
    model = random_fvs_model(10, 1, seed=4)
    bad = FvsModel(part=model.part, j_f=model.j_f, j_m=model.j_m, j_t=model.j_t.scaled(-1.0))
    with pytest.raises(ModelInvariantError):
        check_invariants(bad)


def test_normalize_gauge_keeps_tree_marginal():
    """Test that J_F -> I leaves the marginal over the tree nodes unchanged."""
    model = random_fvs_model(15, 3, seed=9)
    normalized = normalize_gauge(model)
    np.testing.assert_array_equal(normalized.j_f, np.eye(3))
    tree_nodes = list(model.part.tree_nodes)
    before = np.linalg.inv(model.assemble())[np.ix_(tree_nodes, tree_nodes)]
    after = np.linalg.inv(normalized.assemble())[np.ix_(tree_nodes, tree_nodes)]
    np.testing.assert_allclose(after, before, rtol=1e-10, atol=1e-12)


def test_scale_model_shifts_log_det():
    """Test ln det(cJ) = ln det J + n ln c."""
    model = random_fvs_model(25, 4, seed=1)
    assert fvs_log_det(scale_model(model, 2.5)) == pytest.approx(fvs_log_det(model) + 25 * np.log(2.5), rel=1e-12)
    with pytest.raises(InvalidParameterError):
        scale_model(model, 0.0)
