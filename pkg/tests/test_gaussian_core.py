"""
Tests for Gaussian building blocks.
"""
import numpy as np
import pytest

from fvsggm.core.exceptions import (
    DimensionMismatchError,
    InsufficientSamplesError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    SingularBlockError,
)
from fvsggm.models.gaussian import EmpiricalStats, GaussianDensity, Partition, SymMatrix
from fvsggm.services.gaussian_core import (
    block_inverse,
    empirical_stats,
    kl_gaussian,
    kl_zero_mean,
    log_det_pd,
    ridge,
    sample_gaussian,
    schur_conditional,
)
from tests.oracles import dense_kl, dense_schur, random_pd


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def test_sym_matrix_rejects_asymmetric_input():
    """Test that an asymmetric matrix is rejected."""
    with pytest.raises(NotSymmetricError):
        SymMatrix(np.array([[1.0, 0.5], [0.4, 1.0]]))


def test_sym_matrix_is_read_only_and_exactly_symmetric(rng):
    """Test that stored entries are symmetric bit for bit and frozen."""
    a = random_pd(5, rng)
    a[0, 1] += 1e-14
    m = SymMatrix(a)
    assert np.array_equal(m.values, m.values.T)
    with pytest.raises(ValueError):
        m.values[0, 0] = 2.0


def test_empirical_stats_uses_biased_covariance():
    """Test mean and 1/s covariance on a tiny sample."""
    samples = np.array([[1.0, 2.0], [3.0, 6.0]])
    stats = empirical_stats(samples)
    np.testing.assert_allclose(stats.mean, [2.0, 4.0])
    np.testing.assert_allclose(stats.cov.values, [[1.0, 2.0], [2.0, 4.0]])
    assert stats.samples == 2


def test_empirical_stats_needs_two_samples():
    """Test that a single sample is rejected."""
    with pytest.raises(InsufficientSamplesError):
        empirical_stats(np.array([[1.0, 2.0, 3.0]]))


def test_empirical_stats_rejects_indefinite_covariance():
    """Test that a covariance with a negative eigenvalue is rejected on construction."""
    bad = np.array([[1.0, 0.9, 0.9], [0.9, 1.0, -0.9], [0.9, -0.9, 1.0]])
    with pytest.raises(NotPositiveDefiniteError, match="semidefinite"):
        EmpiricalStats.from_covariance(bad)


def test_empirical_stats_accepts_singular_covariance():
    """Test that a PSD but singular covariance is allowed."""
    stats = EmpiricalStats.from_covariance(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert stats.n == 2
    assert not stats.cov.is_positive_definite()


def test_kl_of_identical_densities_is_zero(rng):
    """Test D(p || p) = 0."""
    cov = random_pd(6, rng)
    assert kl_zero_mean(cov, cov) == pytest.approx(0.0, abs=1e-12)


def test_kl_scalar_closed_form():
    """Test D(N(0, 1) || N(0, 2)) = 1/2 (1/2 - 1 + ln 2)."""
    expected = 0.5 * (0.5 - 1.0 + np.log(2.0))
    assert kl_zero_mean(np.array([[1.0]]), np.array([[2.0]])) == pytest.approx(expected, rel=1e-14)


def test_kl_includes_mean_term():
    """Test D(N(1, 1) || N(0, 1)) = 1/2."""
    p = GaussianDensity(mean=np.array([1.0]), cov=SymMatrix(np.array([[1.0]])))
    q = GaussianDensity.zero_mean(np.array([[1.0]]))
    assert kl_gaussian(p, q) == pytest.approx(0.5, rel=1e-14)


def test_kl_matches_dense_formula(rng):
    """Test the whitened KL against explicit inverses."""
    for _ in range(10):
        a, b = random_pd(7, rng), random_pd(7, rng)
        assert kl_zero_mean(a, b) == pytest.approx(dense_kl(a, b), rel=1e-10)


def test_kl_rejects_indefinite_covariance():
    """Test that a non-PD argument raises."""
    bad = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NotPositiveDefiniteError):
        kl_zero_mean(np.eye(2), bad)


def test_kl_rejects_dimension_mismatch():
    """Test that densities of different dimension are rejected."""
    with pytest.raises(DimensionMismatchError):
        kl_zero_mean(np.eye(2), np.eye(3))


def test_log_det_pd(rng):
    """Test the Cholesky log-determinant."""
    a = random_pd(9, rng)
    assert log_det_pd(a) == pytest.approx(np.linalg.slogdet(a)[1], rel=1e-12)


def test_schur_conditional_matches_dense(rng):
    """Test the conditional covariance of T given F."""
    cov = random_pd(8, rng)
    part = Partition.from_fvs(8, [5, 2])
    expected, _ = dense_schur(cov, [5, 2])
    np.testing.assert_allclose(schur_conditional(cov, part).values, expected, atol=1e-12)


def test_schur_conditional_without_feedback_nodes(rng):
    """Test that k = 0 returns the covariance itself."""
    cov = random_pd(4, rng)
    out = schur_conditional(cov, Partition.from_fvs(4, []))
    np.testing.assert_array_equal(out.values, SymMatrix(cov).values)


def test_schur_conditional_singular_feedback_block():
    """Test that a singular S_F block raises SingularBlockError."""
    cov = np.array([[1.0, 1.0, 0.1], [1.0, 1.0, 0.1], [0.1, 0.1, 1.0]])
    with pytest.raises(SingularBlockError):
        schur_conditional(cov, Partition.from_fvs(3, [0, 1]))


def test_block_inverse_matches_dense(rng):
    """Test the partitioned inverse for several feedback sets."""
    a = random_pd(7, rng)
    for fvs in ([], [3], [0, 6], [1, 2, 4]):
        out = block_inverse(a, Partition.from_fvs(7, fvs))
        np.testing.assert_allclose(out.values, np.linalg.inv(a), rtol=1e-9, atol=1e-10)


def test_sample_gaussian_is_seeded_and_consistent(rng):
    """Test determinism and the empirical covariance of a large sample."""
    cov = random_pd(3, rng)
    density = GaussianDensity.zero_mean(cov)
    first = sample_gaussian(density, 200_000, seed=5)
    second = sample_gaussian(density, 200_000, seed=5)
    assert first.shape == (200_000, 3)
    np.testing.assert_array_equal(first, second)
    np.testing.assert_allclose(empirical_stats(first).cov.values, cov, atol=0.03)


def test_ridge_default_epsilon():
    """Test that the default ridge is scale * trace / n."""
    cov = np.diag([1.0, 2.0, 3.0])
    out, epsilon = ridge(cov, scale=1e-3)
    assert epsilon == pytest.approx(2e-3)
    np.testing.assert_allclose(out.values, cov + 2e-3 * np.eye(3))


def test_ridge_repairs_singular_covariance():
    """Test that a singular covariance becomes PD."""
    cov = SymMatrix(np.array([[1.0, 1.0], [1.0, 1.0]]))
    assert not cov.is_positive_definite()
    fixed, _ = ridge(cov, epsilon=1e-6)
    assert fixed.is_positive_definite()
