"""
Tree-structured domain types: spanning trees, tree-sparse matrices, BP results.
"""
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from fvsggm.core.exceptions import DimensionMismatchError, InvalidParameterError, ModelInvariantError


class UnionFind:
    """Disjoint sets over 0..num-1 with path compression and union by rank."""

    def __init__(self, num: int):
        self.parents = list(range(num))
        self.rank = [0] * num

    def find(self, x: int) -> int:
        root = x
        while self.parents[root] != root:
            root = self.parents[root]
        while self.parents[x] != root:
            self.parents[x], x = root, self.parents[x]
        return root

    def union(self, x: int, y: int) -> bool:
        """Merge the sets of x and y; False if they were already joined."""
        x = self.find(x)
        y = self.find(y)
        if x == y:
            return False
        if self.rank[x] < self.rank[y]:
            x, y = y, x
        self.parents[y] = x
        if self.rank[x] == self.rank[y]:
            self.rank[x] += 1
        return True


class RootedView(NamedTuple):
    """Breadth-first order of local positions, parents before children."""
    order: np.ndarray
    parent: np.ndarray
    parent_edge: np.ndarray
    roots: Tuple[int, ...]


@dataclass(frozen=True, eq=False)
class SpanningTree:
    """
    Acyclic edge set over a labelled node list.

    Edges are stored as sorted label pairs. A caller may hand in a forest; every
    operation then works per component, rooted at its lowest local position.
    """
    nodes: Tuple[int, ...]
    edges: Tuple[Tuple[int, int], ...]
    weights: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        nodes = tuple(int(v) for v in self.nodes)
        if len(set(nodes)) != len(nodes):
            raise InvalidParameterError("tree node labels must be unique")
        edges = tuple(tuple(sorted((int(a), int(b)))) for a, b in self.edges)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "edges", edges)
        if self.weights is not None:
            if len(self.weights) != len(edges):
                raise DimensionMismatchError("one weight per edge is required")
            object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

        position = {v: i for i, v in enumerate(nodes)}
        if len(set(edges)) != len(edges):
            raise InvalidParameterError("duplicate tree edges")
        components = UnionFind(len(nodes))
        for a, b in edges:
            if a == b:
                raise InvalidParameterError(f"self-loop on node {a}")
            if a not in position or b not in position:
                raise InvalidParameterError(f"edge ({a}, {b}) references an unknown node")
            if not components.union(position[a], position[b]):
                raise InvalidParameterError(f"edge ({a}, {b}) closes a cycle")

    @property
    def size(self) -> int:
        return len(self.nodes)

    @cached_property
    def position(self) -> Dict[int, int]:
        return {v: i for i, v in enumerate(self.nodes)}

    @cached_property
    def local_edges(self) -> np.ndarray:
        """Edges as an (e, 2) array of local positions."""
        pos = self.position
        out = np.array([(pos[a], pos[b]) for a, b in self.edges], dtype=np.intp)
        return out.reshape(-1, 2)

    @cached_property
    def edge_set(self) -> FrozenSet[Tuple[int, int]]:
        return frozenset(self.edges)

    @cached_property
    def adjacency(self) -> List[List[Tuple[int, int]]]:
        """Per local position, the (neighbour position, edge index) pairs."""
        adj: List[List[Tuple[int, int]]] = [[] for _ in self.nodes]
        for e, (a, b) in enumerate(self.local_edges):
            adj[a].append((int(b), e))
            adj[b].append((int(a), e))
        return adj

    @cached_property
    def degree(self) -> np.ndarray:
        return np.array([len(nbrs) for nbrs in self.adjacency], dtype=np.intp)

    @cached_property
    def rooted(self) -> RootedView:
        m = self.size
        parent = np.full(m, -1, dtype=np.intp)
        parent_edge = np.full(m, -1, dtype=np.intp)
        seen = np.zeros(m, dtype=bool)
        order: List[int] = []
        roots: List[int] = []
        adj = self.adjacency
        for root in range(m):
            if seen[root]:
                continue
            roots.append(root)
            seen[root] = True
            queue = deque([root])
            while queue:
                i = queue.popleft()
                order.append(i)
                for j, e in adj[i]:
                    if not seen[j]:
                        seen[j] = True
                        parent[j] = i
                        parent_edge[j] = e
                        queue.append(j)
        return RootedView(np.array(order, dtype=np.intp), parent, parent_edge, tuple(roots))

    @property
    def num_components(self) -> int:
        return len(self.rooted.roots)

    @property
    def is_spanning(self) -> bool:
        return self.num_components == 1

    def relabel(self, labels: Sequence[int]) -> "SpanningTree":
        """Map local position i to labels[i]."""
        if len(labels) != self.size:
            raise DimensionMismatchError(f"expected {self.size} labels, got {len(labels)}")
        edges = tuple((labels[a], labels[b]) for a, b in self.local_edges)
        return SpanningTree(nodes=tuple(labels), edges=edges, weights=self.weights)


@dataclass(frozen=True, eq=False)
class TreeMatrix:
    """
    Symmetric matrix whose nonzeros lie on the diagonal and on tree edges.

    diag[i] is the entry at local position i; off[e] is the entry on tree.edges[e].
    """
    tree: SpanningTree
    diag: np.ndarray
    off: np.ndarray

    def __post_init__(self):
        diag = np.asarray(self.diag, dtype=float).reshape(-1)
        off = np.asarray(self.off, dtype=float).reshape(-1)
        if diag.shape[0] != self.tree.size:
            raise DimensionMismatchError(f"diag has length {diag.shape[0]}, tree has {self.tree.size} nodes")
        if off.shape[0] != len(self.tree.edges):
            raise DimensionMismatchError(f"off has length {off.shape[0]}, tree has {len(self.tree.edges)} edges")
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "off", off)

    @property
    def dim(self) -> int:
        return self.tree.size

    @classmethod
    def from_dense(cls, a: np.ndarray, tree: SpanningTree, atol: float = 0.0) -> "TreeMatrix":
        """
        Read the tree pattern out of a dense matrix.

        Raises:
            ModelInvariantError: If a has off-tree entries larger than atol
        """
        a = np.asarray(a, dtype=float)
        if a.shape != (tree.size, tree.size):
            raise DimensionMismatchError(f"matrix shape {a.shape} does not match tree of size {tree.size}")
        edges = tree.local_edges
        off = a[edges[:, 0], edges[:, 1]] if len(edges) else np.zeros(0)
        rest = a - np.diag(np.diag(a))
        if len(edges):
            rest[edges[:, 0], edges[:, 1]] = 0.0
            rest[edges[:, 1], edges[:, 0]] = 0.0
        if np.max(np.abs(rest), initial=0.0) > atol:
            raise ModelInvariantError("matrix has nonzero entries off the tree pattern")
        return cls(tree=tree, diag=np.diag(a).copy(), off=off)

    def to_sparse(self) -> sp.csr_matrix:
        m = self.dim
        edges = self.tree.local_edges
        rows = np.concatenate([np.arange(m), edges[:, 0], edges[:, 1]])
        cols = np.concatenate([np.arange(m), edges[:, 1], edges[:, 0]])
        data = np.concatenate([self.diag, self.off, self.off])
        return sp.csr_matrix((data, (rows, cols)), shape=(m, m))

    def to_dense(self) -> np.ndarray:
        out = np.diag(self.diag)
        edges = self.tree.local_edges
        if len(edges):
            out[edges[:, 0], edges[:, 1]] = self.off
            out[edges[:, 1], edges[:, 0]] = self.off
        return out

    def matmul(self, x: np.ndarray) -> np.ndarray:
        """Product with a vector or matrix, O(m) per column."""
        return self.to_sparse() @ np.asarray(x, dtype=float)

    def trace_dot(self, s: np.ndarray) -> float:
        """Tr(self @ s) for a symmetric s, touching only diagonal and tree entries."""
        edges = self.tree.local_edges
        total = float(self.diag @ np.diag(s))
        if len(edges):
            total += 2.0 * float(self.off @ s[edges[:, 0], edges[:, 1]])
        return total

    def scaled(self, c: float) -> "TreeMatrix":
        return TreeMatrix(tree=self.tree, diag=c * self.diag, off=c * self.off)


@dataclass(frozen=True, eq=False)
class TreeBpResult:
    """
    Output of two-pass Gaussian BP on a tree.

    node_variance[i] = (J^-1)_ii, edge_covariance[e] = (J^-1)_ij on tree.edges[e],
    solves[:, p] = J^-1 rhs[p].
    """
    node_variance: np.ndarray
    edge_covariance: np.ndarray
    solves: np.ndarray
