from __future__ import annotations

from typing import Optional

from src.domain.models import ClusteringSolution, MilpWeights, NetworkState, RadioParams
from src.domain.protocols import IClusteringProtocol
from src.services.clustering_opt import cluster_count, solve_exact


class MilpProtocol(IClusteringProtocol):
    """Exact re-clustering on a fixed period (period 1 = every round)."""
    name = "milp"
    centralized = True

    def __init__(self, p: RadioParams, w: MilpWeights, period: int = 1):
        if period < 1:
            raise ValueError("re-cluster period must be at least 1")
        self.p = p
        self.w = w
        self.period = period

    def reset(self, state: NetworkState) -> None:
        pass

    def decide(self, state: NetworkState) -> Optional[ClusteringSolution]:
        if state.solution is not None and state.rounds_since_recluster + 1 < self.period:
            return None
        k = cluster_count(state.cfg.k_fraction, state.alive_count)
        return solve_exact(state, self.p, self.w, k)
