"""
Experiment report pydantic schemas.
"""
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict


class RecoveryRunResponse(BaseModel):
    """One greedy recovery run."""
    model_config = ConfigDict(from_attributes=True)

    seed: int
    success: bool
    true_fvs: Tuple[int, ...]
    learned_fvs: Tuple[int, ...]
    d_values: List[float]
    fvs_match: bool
    tree_match: bool


class RecoveryReportResponse(BaseModel):
    """Greedy recovery study summary with per-run detail."""
    model_config = ConfigDict(from_attributes=True)

    n: int
    k: int
    samples_per_run: int
    successes: int
    runs: List[RecoveryRunResponse]


class SensitivityReportResponse(BaseModel):
    """Tree signatures per seed and iteration."""
    model_config = ConfigDict(from_attributes=True)

    seeds: List[int]
    signatures: Dict[int, List[str]]
    objectives: Dict[int, List[float]]
    agreement_iteration: Optional[int]


class SweepMetadata(BaseModel):
    """Sidecar written next to a sweep CSV."""
    model_config = ConfigDict(extra="allow")

    algorithm: str
    seeds: List[int]
    iters: int
    seed_objectives: Dict[str, Any] = {}
