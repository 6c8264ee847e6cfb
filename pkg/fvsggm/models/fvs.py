"""
FVS-structured information-matrix model.
"""
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from fvsggm.core.exceptions import DimensionMismatchError
from fvsggm.models.gaussian import Partition
from fvsggm.models.tree import TreeMatrix


@dataclass(frozen=True, eq=False)
class FvsModel:
    """
    Information matrix J = [[J_F, J_M^T], [J_M, J_T]] with J_T tree-sparse.

    Block rows and columns follow part.fvs and part.tree_nodes in order; j_t.tree
    is labelled with the global ids of the tree nodes. h, when given, is indexed
    by global node id.
    """
    part: Partition
    j_f: np.ndarray
    j_m: np.ndarray
    j_t: TreeMatrix
    h: Optional[np.ndarray] = None

    def __post_init__(self):
        k, m = self.part.k, self.part.m
        j_f = np.asarray(self.j_f, dtype=float).reshape(k, k) if k else np.zeros((0, 0))
        j_m = np.asarray(self.j_m, dtype=float).reshape(m, k) if k else np.zeros((m, 0))
        object.__setattr__(self, "j_f", j_f)
        object.__setattr__(self, "j_m", j_m)
        if self.j_t.dim != m:
            raise DimensionMismatchError(f"J_T is {self.j_t.dim}x{self.j_t.dim}, expected {m} tree nodes")
        if tuple(self.j_t.tree.nodes) != self.part.tree_nodes:
            raise DimensionMismatchError("J_T tree labels do not match the partition's tree nodes")
        if self.h is not None:
            h = np.asarray(self.h, dtype=float).reshape(-1)
            if h.shape[0] != self.part.n:
                raise DimensionMismatchError(f"h has length {h.shape[0]}, expected {self.part.n}")
            object.__setattr__(self, "h", h)

    @property
    def n(self) -> int:
        return self.part.n

    @property
    def k(self) -> int:
        return self.part.k

    @property
    def tree(self):
        return self.j_t.tree

    def potential(self) -> np.ndarray:
        return np.zeros(self.n) if self.h is None else self.h

    def with_potential(self, h: Optional[np.ndarray]) -> "FvsModel":
        return replace(self, h=h)

    def assemble(self) -> np.ndarray:
        """Dense J in global node order."""
        fvs = list(self.part.fvs)
        tree_nodes = list(self.part.tree_nodes)
        out = np.zeros((self.n, self.n))
        out[np.ix_(fvs, fvs)] = self.j_f
        out[np.ix_(tree_nodes, fvs)] = self.j_m
        out[np.ix_(fvs, tree_nodes)] = self.j_m.T
        out[np.ix_(tree_nodes, tree_nodes)] = self.j_t.to_dense()
        return out
