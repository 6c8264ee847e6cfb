"""
Results of observed and latent FVS learning.
"""
from dataclasses import dataclass
from enum import Enum
from typing import List, NamedTuple, Optional, Tuple

from fvsggm.models.fvs import FvsModel
from fvsggm.models.gaussian import Partition, SymMatrix
from fvsggm.models.tree import SpanningTree


class LearnMode(str, Enum):
    """How the feedback set is chosen when it is not given."""
    EXACT = "exact"
    GREEDY = "greedy"


class StopReason(str, Enum):
    """Why a latent run stopped."""
    TOLERANCE = "tolerance"
    MAX_ITERS = "max_iters"


@dataclass(frozen=True, eq=False)
class ObservedFit:
    """
    Maximum-likelihood fit in Q_F for a known feedback set.

    sigma_ml is in global node order; sigma_cl is the Chow-Liu projection of the
    conditional covariance over part.tree_nodes; divergence is d(F).
    """
    part: Partition
    tree: SpanningTree
    sigma_ml: SymMatrix
    sigma_cl: SymMatrix
    divergence: float
    j_ml: Optional[FvsModel] = None


class GreedyStep(NamedTuple):
    node: int
    d_value: float


@dataclass(frozen=True, eq=False)
class GreedyTrace:
    """Selection order and d(F_t) after each greedy step."""
    steps: List[GreedyStep]
    final_fit: ObservedFit

    @property
    def d_values(self) -> List[float]:
        return [s.d_value for s in self.steps]


@dataclass(frozen=True, eq=False)
class LatentState:
    """Iterate J^(t) of the latent Chow-Liu algorithm and its objective."""
    model: FvsModel
    iteration: int
    objective: float


class LatentIteration(NamedTuple):
    iteration: int
    objective: float
    tree_edges: Tuple[Tuple[int, int], ...]


@dataclass(frozen=True, eq=False)
class LatentTrace:
    """
    Objective and observed-tree history of a latent run.

    states[0] describes the initial model; states[t] the model after iteration t.
    """
    states: List[LatentIteration]
    converged: bool
    stop_reason: StopReason
    final: LatentState
    seed: Optional[int] = None

    @property
    def objectives(self) -> List[float]:
        return [s.objective for s in self.states]

    @property
    def iterations(self) -> int:
        return len(self.states) - 1
