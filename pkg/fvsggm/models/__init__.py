"""
Domain models module initialization.
"""
from fvsggm.models.gaussian import EmpiricalStats, GaussianDensity, Partition, SymMatrix
from fvsggm.models.tree import SpanningTree, TreeBpResult, TreeMatrix, UnionFind
from fvsggm.models.fvs import FvsModel
from fvsggm.models.fit import (
    GreedyStep,
    GreedyTrace,
    LatentIteration,
    LatentState,
    LatentTrace,
    LearnMode,
    ObservedFit,
    StopReason,
)
from fvsggm.models.experiment import (
    RecoveryReport,
    RecoveryRun,
    SensitivityReport,
    SweepResult,
    SweepRow,
    TimingRow,
)

__all__ = [
    "EmpiricalStats",
    "GaussianDensity",
    "Partition",
    "SymMatrix",
    "SpanningTree",
    "TreeBpResult",
    "TreeMatrix",
    "UnionFind",
    "FvsModel",
    "GreedyStep",
    "GreedyTrace",
    "LatentIteration",
    "LatentState",
    "LatentTrace",
    "LearnMode",
    "ObservedFit",
    "StopReason",
    "RecoveryReport",
    "RecoveryRun",
    "SensitivityReport",
    "SweepResult",
    "SweepRow",
    "TimingRow",
]
