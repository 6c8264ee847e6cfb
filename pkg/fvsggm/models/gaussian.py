"""
Dense Gaussian domain types: symmetric matrices, node partitions, densities.
"""
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.linalg as la

from fvsggm.core.exceptions import (
    DimensionMismatchError,
    InvalidParameterError,
    NotPositiveDefiniteError,
    NotSymmetricError,
)

SYMMETRY_RTOL = 1e-10
PSD_TOLERANCE = 1e-10


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """
    Dense symmetric real matrix.

    The stored array is symmetrized on construction and marked read-only, so
    entries[i][j] == entries[j][i] holds bit for bit.
    """
    values: np.ndarray

    def __post_init__(self):
        a = np.array(self.values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DimensionMismatchError(f"expected a non-empty square matrix, got shape {a.shape}")
        scale = max(1.0, float(np.max(np.abs(a))))
        if not np.all(np.isfinite(a)):
            raise InvalidParameterError("matrix has non-finite entries")
        if np.max(np.abs(a - a.T)) > SYMMETRY_RTOL * scale:
            raise NotSymmetricError("matrix is not symmetric")
        a = (a + a.T) / 2.0
        a.setflags(write=False)
        object.__setattr__(self, "values", a)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def block(self, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
        """Return a (copied) sub-block indexed by the given node lists."""
        return self.values[np.ix_(list(rows), list(cols))]

    def cholesky(self) -> np.ndarray:
        """
        Lower Cholesky factor.

        Raises:
            NotPositiveDefiniteError: If the factorization fails
        """
        return cholesky_lower(self.values)

    def is_positive_definite(self) -> bool:
        try:
            self.cholesky()
        except NotPositiveDefiniteError:
            return False
        return True


MatrixLike = Union[SymMatrix, np.ndarray]


def as_array(m: MatrixLike) -> np.ndarray:
    """Return the underlying float array of a SymMatrix or array-like."""
    if isinstance(m, SymMatrix):
        return m.values
    return np.asarray(m, dtype=float)


def cholesky_lower(a: np.ndarray) -> np.ndarray:
    """Lower Cholesky factor of a, raising NotPositiveDefiniteError on failure."""
    if a.size == 0:
        return np.zeros((0, 0))
    try:
        return la.cholesky(a, lower=True)
    except la.LinAlgError as e:
        raise NotPositiveDefiniteError(f"matrix is not positive definite: {e}") from e


@dataclass(frozen=True)
class Partition:
    """
    Split of nodes {0..n-1} into the feedback set F and the tree nodes T.

    fvs keeps insertion order (greedy selection order); tree_nodes is sorted.
    """
    n: int
    fvs: Tuple[int, ...]
    tree_nodes: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "fvs", tuple(int(v) for v in self.fvs))
        object.__setattr__(self, "tree_nodes", tuple(int(v) for v in self.tree_nodes))
        if len(set(self.fvs)) != len(self.fvs):
            raise InvalidParameterError(f"duplicate feedback nodes in {list(self.fvs)}")
        if set(self.fvs) & set(self.tree_nodes):
            raise InvalidParameterError("feedback and tree node sets overlap")
        if set(self.fvs) | set(self.tree_nodes) != set(range(self.n)):
            raise InvalidParameterError(f"partition does not cover nodes 0..{self.n - 1}")

    @classmethod
    def from_fvs(cls, n: int, fvs: Iterable[int]) -> "Partition":
        fvs = tuple(int(v) for v in fvs)
        bad = [v for v in fvs if v < 0 or v >= n]
        if bad:
            raise InvalidParameterError(f"feedback nodes {bad} out of range for n={n}")
        chosen = set(fvs)
        return cls(n=n, fvs=fvs, tree_nodes=tuple(i for i in range(n) if i not in chosen))

    @classmethod
    def latent(cls, k: int, m: int) -> "Partition":
        """Latent layout: feedback nodes 0..k-1 followed by observed nodes k..k+m-1."""
        return cls(n=k + m, fvs=tuple(range(k)), tree_nodes=tuple(range(k, k + m)))

    @property
    def k(self) -> int:
        return len(self.fvs)

    @property
    def m(self) -> int:
        return len(self.tree_nodes)


@dataclass(frozen=True, eq=False)
class EmpiricalStats:
    """
    Sample count, mean and biased (1/s) empirical covariance.

    The covariance must be PSD: its smallest eigenvalue may fall below zero by at
    most 1e-10 times max(1, largest variance). Singular covariances are accepted
    here and rejected by the learners, which need a PD input.
    """
    mean: np.ndarray
    cov: SymMatrix
    samples: Optional[int] = None

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        if mean.shape[0] != self.cov.dim:
            raise DimensionMismatchError(
                f"mean has length {mean.shape[0]} but covariance is {self.cov.dim}x{self.cov.dim}"
            )
        object.__setattr__(self, "mean", mean)
        cov = self.cov.values
        lam_min = float(la.eigvalsh(cov, subset_by_index=[0, 0])[0])
        if lam_min < -PSD_TOLERANCE * max(1.0, float(np.max(np.diag(cov)))):
            raise NotPositiveDefiniteError(
                f"empirical covariance is not positive semidefinite (smallest eigenvalue {lam_min:.3g})"
            )

    @property
    def n(self) -> int:
        return self.cov.dim

    @classmethod
    def from_covariance(cls, cov: MatrixLike, samples: Optional[int] = None) -> "EmpiricalStats":
        cov = cov if isinstance(cov, SymMatrix) else SymMatrix(cov)
        return cls(mean=np.zeros(cov.dim), cov=cov, samples=samples)


@dataclass(frozen=True, eq=False)
class GaussianDensity:
    """N(mean, cov) with positive definite covariance."""
    mean: np.ndarray
    cov: SymMatrix
    chol: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        if mean.shape[0] != self.cov.dim:
            raise DimensionMismatchError(
                f"mean has length {mean.shape[0]} but covariance is {self.cov.dim}x{self.cov.dim}"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "chol", self.cov.cholesky())

    @classmethod
    def zero_mean(cls, cov: MatrixLike) -> "GaussianDensity":
        cov = cov if isinstance(cov, SymMatrix) else SymMatrix(cov)
        return cls(mean=np.zeros(cov.dim), cov=cov)

    @property
    def dim(self) -> int:
        return self.cov.dim
