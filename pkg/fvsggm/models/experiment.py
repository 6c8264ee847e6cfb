"""
Experiment report types.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, NamedTuple, Optional, Tuple


class SweepRow(NamedTuple):
    n: int
    k: int
    kl_value: float
    kl_ratio_vs_tree: float
    iterations: int
    wall_time: float


@dataclass
class SweepResult:
    """KL divergence against latent FVS size, one row per (n, k)."""
    rows: List[SweepRow]
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass
class RecoveryRun:
    seed: int
    success: bool
    true_fvs: Tuple[int, ...]
    learned_fvs: Tuple[int, ...]
    d_values: List[float]
    fvs_match: bool
    tree_match: bool


@dataclass
class RecoveryReport:
    """Outcome of repeated greedy structure recovery on random FVS models."""
    runs: List[RecoveryRun]
    n: int
    k: int
    samples_per_run: int

    @property
    def successes(self) -> int:
        return sum(r.success for r in self.runs)


@dataclass
class SensitivityReport:
    """Observed-tree signature per seed and iteration, plus the first agreeing iteration."""
    seeds: List[int]
    signatures: Dict[int, List[str]]
    objectives: Dict[int, List[float]]
    agreement_iteration: Optional[int]


class TimingRow(NamedTuple):
    n: int
    k: int
    fvs_seconds: float
    dense_seconds: float
    abs_difference: float
