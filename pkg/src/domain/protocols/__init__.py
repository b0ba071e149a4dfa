from abc import ABC, abstractmethod
from typing import Optional

from ..models.clustering import ClusteringSolution
from ..models.network import NetworkState


class IClusteringProtocol(ABC):
    """Interface for a clustering protocol driven by the round simulator."""

    #: Registry / report name, e.g. "leach-c".
    name: str = ""
    #: Centralized protocols pay the status-report/assignment control cost on re-cluster.
    centralized: bool = False

    @abstractmethod
    def reset(self, state: NetworkState) -> None:
        """Prepare per-run state (random streams, epoch bookkeeping)."""
        pass

    @abstractmethod
    def decide(self, state: NetworkState) -> Optional[ClusteringSolution]:
        """Return a new clustering for this round, or None to keep the current one."""
        pass
