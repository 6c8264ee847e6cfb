"""
Model file pydantic schema.
"""
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from fvsggm.core.config import settings
from fvsggm.core.exceptions import FvsGgmError, InputError, ModelFileError, ModelInvariantError
from fvsggm.models.fvs import FvsModel
from fvsggm.models.gaussian import Partition
from fvsggm.models.tree import SpanningTree, TreeMatrix
from fvsggm.services.fvs_inference import check_invariants

Triplet = Tuple[int, int, float]


class ModelMetadata(BaseModel):
    """How a model was produced."""
    model_config = ConfigDict(extra="forbid")

    algorithm: str = "unknown"
    seed: Optional[int] = None
    iterations: Optional[int] = None
    objective: Optional[float] = None
    initial_objective: Optional[float] = None
    ridge: Optional[float] = None
    stop_reason: Optional[str] = None
    observed_offset: int = 0


class ModelFile(BaseModel):
    """
    Serialized FVS model.

    Node ids are global and 0-based. j_f and j_t hold the upper triangle
    including the diagonal; j_m holds (tree node, feedback node, value) for the
    nonzero cross entries. For latent models the observed variables are nodes
    observed_offset.. in the file.
    """
    model_config = ConfigDict(extra="forbid")

    schema_version: str = Field(default_factory=lambda: settings.MODEL_SCHEMA_VERSION)
    n: int = Field(..., ge=1)
    k: int = Field(..., ge=0)
    fvs: List[int]
    tree_edges: List[Tuple[int, int]]
    j_f: List[Triplet] = []
    j_m: List[Triplet] = []
    j_t: List[Triplet]
    h: Optional[List[float]] = None
    sigma: Optional[List[List[float]]] = None
    node_labels: Optional[List[str]] = None
    metadata: ModelMetadata = Field(default_factory=ModelMetadata)

    @model_validator(mode="after")
    def check_shape(self) -> "ModelFile":
        if self.schema_version != settings.MODEL_SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {self.schema_version!r}")
        if len(self.fvs) != self.k:
            raise ValueError(f"k={self.k} but {len(self.fvs)} feedback nodes are listed")
        if len(set(self.fvs)) != self.k or any(v < 0 or v >= self.n for v in self.fvs):
            raise ValueError("feedback nodes must be distinct ids in [0, n)")
        if self.h is not None and len(self.h) != self.n:
            raise ValueError(f"h has length {len(self.h)}, expected {self.n}")
        if self.node_labels is not None and len(self.node_labels) != self.n:
            raise ValueError(f"{len(self.node_labels)} node labels for {self.n} nodes")
        if self.sigma is not None and (len(self.sigma) != self.n or any(len(r) != self.n for r in self.sigma)):
            raise ValueError(f"sigma must be {self.n}x{self.n}")
        return self

    @classmethod
    def from_model(cls, model: FvsModel, metadata: Optional[ModelMetadata] = None,
                   node_labels: Optional[Sequence[str]] = None, sigma: Optional[np.ndarray] = None) -> "ModelFile":
        fvs = list(model.part.fvs)
        tree = model.tree
        j_f = [
            (fvs[p], fvs[q], float(model.j_f[p, q]))
            for p in range(model.k)
            for q in range(p, model.k)
            if p == q or model.j_f[p, q] != 0.0
        ]
        j_m = [
            (tree.nodes[i], fvs[p], float(model.j_m[i, p]))
            for i in range(model.part.m)
            for p in range(model.k)
            if model.j_m[i, p] != 0.0
        ]
        j_t = [(v, v, float(d)) for v, d in zip(tree.nodes, model.j_t.diag)]
        j_t += [(a, b, float(w)) for (a, b), w in zip(tree.edges, model.j_t.off)]
        return cls(
            n=model.n,
            k=model.k,
            fvs=fvs,
            tree_edges=[tuple(e) for e in tree.edges],
            j_f=j_f,
            j_m=j_m,
            j_t=j_t,
            h=None if model.h is None else [float(v) for v in model.h],
            sigma=None if sigma is None else np.asarray(sigma, dtype=float).tolist(),
            node_labels=None if node_labels is None else list(node_labels),
            metadata=metadata or ModelMetadata(),
        )

    def to_model(self) -> FvsModel:
        """
        Rebuild and validate the model.

        Raises:
            ModelFileError: If an entry addresses the wrong block or repeats
            ModelInvariantError: If the model violates an FVS invariant
        """
        part = Partition.from_fvs(self.n, self.fvs)
        try:
            tree = SpanningTree(nodes=part.tree_nodes, edges=self.tree_edges)
        except InputError as e:
            raise ModelInvariantError(f"tree_edges do not form a forest over the tree nodes: {e.detail}") from e

        pos_f: Dict[int, int] = {v: p for p, v in enumerate(self.fvs)}
        pos_t = tree.position
        edge_index = {e: idx for idx, e in enumerate(tree.edges)}

        j_f = np.zeros((self.k, self.k))
        for a, b, v in _unique(self.j_f, "j_f"):
            if a not in pos_f or b not in pos_f:
                raise ModelFileError(f"j_f entry ({a}, {b}) is not between feedback nodes")
            j_f[pos_f[a], pos_f[b]] = j_f[pos_f[b], pos_f[a]] = v

        j_m = np.zeros((part.m, self.k))
        for a, b, v in _unique(self.j_m, "j_m"):
            if a not in pos_t or b not in pos_f:
                raise ModelFileError(f"j_m entry ({a}, {b}) must be (tree node, feedback node)")
            j_m[pos_t[a], pos_f[b]] = v

        diag = np.zeros(part.m)
        off = np.zeros(len(tree.edges))
        for a, b, v in _unique(self.j_t, "j_t"):
            if a not in pos_t or b not in pos_t:
                raise ModelFileError(f"j_t entry ({a}, {b}) is not between tree nodes")
            if a == b:
                diag[pos_t[a]] = v
                continue
            key = (min(a, b), max(a, b))
            if key not in edge_index:
                raise ModelInvariantError(f"J_T has a nonzero at ({a}, {b}) off the tree edges")
            off[edge_index[key]] = v

        model = FvsModel(part=part, j_f=j_f, j_m=j_m, j_t=TreeMatrix(tree=tree, diag=diag, off=off),
                         h=None if self.h is None else np.array(self.h))
        check_invariants(model)
        return model

    def to_json(self) -> str:
        return self.model_dump_json(indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ModelFile":
        """
        Raises:
            ModelFileError: If the text is not a valid model file
        """
        try:
            return cls.model_validate_json(text)
        except ValidationError as e:
            raise ModelFileError(f"invalid model file: {e.errors()[0]['msg']}") from e


def _unique(entries: List[Triplet], block: str) -> List[Triplet]:
    seen = set()
    for a, b, _ in entries:
        key = (min(a, b), max(a, b))
        if key in seen:
            raise ModelFileError(f"{block} lists entry ({a}, {b}) twice")
        seen.add(key)
    return entries


def load_model(text: str) -> Tuple[FvsModel, ModelFile]:
    """Parse and validate a model file; errors keep their exit codes."""
    parsed = ModelFile.from_json(text)
    try:
        return parsed.to_model(), parsed
    except FvsGgmError:
        raise
    except (ValueError, IndexError) as e:
        raise ModelFileError(f"invalid model file: {e}") from e
